"""Brute-force references used to cross-check the fast code paths.

Everything here is deliberately naive: full ``2^N`` Jordan-Wigner matrices
and explicit loops over all index tuples. Only usable for a handful of modes.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .core import DEFAULT_CONVENTIONS
from .fock import FockSpace, RapidityGrid
from .formfactors import BoundaryPrescription, boundary_coefficient


def jordan_wigner_modes(N: int) -> list[np.ndarray]:
    """Annihilators ``c_i`` on the ``2^N`` occupation basis, bit ``i`` = mode ``i``."""
    dim = 2**N
    out = []
    for i in range(N):
        c = np.zeros((dim, dim))
        for s in range(dim):
            if s >> i & 1:
                sign = (-1) ** bin(s & ((1 << i) - 1)).count("1")
                c[s ^ (1 << i), s] = sign
        out.append(c)
    return out


def _sector_states(space: FockSpace, k: int) -> list[int]:
    # full-space state index of each combination-basis vector, in basis order
    return [int(sum(1 << int(i) for i in c)) for c in space.combos[k]]


def dense_assembly(family, N: int, K: int, grid: RapidityGrid, cutoffs=None,
                   presc: BoundaryPrescription = BoundaryPrescription(), conv=DEFAULT_CONVENTIONS) -> dict:
    """Blocks of ``A`` by explicit loops over all index tuples with ``1/m!n!``.

    Returns ``{(k_out, k_in): dense block}`` for all sector pairs ``<= K``, in
    the lexicographic combination bases.
    """
    if N > 6:
        raise ValueError("brute-force assembly is limited to N <= 6")
    M, Nc = cutoffs if cutoffs is not None else (K, K)
    c = jordan_wigner_modes(N)
    cd = [x.T for x in c]
    th, w = grid.nodes, grid.weights
    dim = 2**N
    A = np.zeros((dim, dim), dtype=complex)
    for m in range(M + 1):
        for n in range(Nc + 1):
            if not family.nonzero(m + n):
                continue
            pref = 1.0 / (math.factorial(m) * math.factorial(n))
            for I in itertools.product(range(N), repeat=m):
                for J in itertools.product(range(N), repeat=n):
                    if len(set(I)) < m or len(set(J)) < n:
                        continue  # the operator product vanishes identically
                    f = boundary_coefficient(family, m, n, th[list(I)], th[list(J)], presc, conv,
                                             strict=False).value
                    coeff = pref * f * np.prod(w[list(I)]) * np.prod(w[list(J)])
                    if coeff == 0:
                        continue
                    op = np.eye(dim)
                    for i in I:
                        op = op @ (cd[i] / math.sqrt(w[i]))
                    for j in J:
                        op = op @ (c[j] / math.sqrt(w[j]))
                    A += coeff * op
    space = FockSpace(N, K)
    states = [_sector_states(space, k) for k in range(space.K + 1)]
    return {(ko, ki): A[np.ix_(states[ko], states[ki])]
            for ko in range(space.K + 1) for ki in range(space.K + 1)}


def dense_operator_blocks(full: np.ndarray, space: FockSpace) -> dict:
    """Cut a ``2^N`` matrix into combination-basis blocks."""
    states = [_sector_states(space, k) for k in range(space.K + 1)]
    return {(ko, ki): full[np.ix_(states[ko], states[ki])]
            for ko in range(space.K + 1) for ki in range(space.K + 1)}


def permutation_matching_sum(M) -> complex:
    """``sum_sigma sgn(sigma) prod_j M[sigma(2j-1), sigma(2j)]`` over all ``(2k)!`` permutations.

    Equals ``2^k k! Pf(M)`` for antisymmetric ``M``; no Pfaffian code involved.
    """
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    total = 0j
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for a in range(n) for b in range(a + 1, n) if perm[a] > perm[b])
        term = 1 + 0j
        for j in range(n // 2):
            term *= M[perm[2 * j], perm[2 * j + 1]]
        total += (-1) ** inv * term
    return total
