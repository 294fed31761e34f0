"""Truncated fermionic Fock space on a rapidity quadrature grid.

For S = -1 the ZF operators satisfy the CAR. On a Gauss-Legendre grid
``(theta_i, w_i)`` the continuum delta becomes ``delta_ij / w_i``, so
``z_i = c_i / sqrt(w_i)`` with orthonormal fermionic modes ``c_i`` and

    z^dagger(h) = sum_i w_i h_i z^dagger_i = sum_i sqrt(w_i) h_i c^dagger_i.

The k-particle sector is spanned by ``c^dagger_{i_1} ... c^dagger_{i_k} Omega``
with ``i_1 < ... < i_k`` in lexicographic order; a state is stored as a
bitmask and fermionic signs are popcounts of the occupied modes below the
acted-on mode. Operators are maps ``(k_out, k_in) -> scipy.sparse`` block.
Matrices are always expressed in this orthonormal basis.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from dataclasses import field as dc_field

import numpy as np
import scipy.sparse as sp
from numpy.polynomial.legendre import leggauss

from .core import DEFAULT_CONVENTIONS, Conventions, OmegaIndicatrix, omega_eval
from .formfactors import (
    BoundaryPrescription,
    DivergentTail,
    NonconvergentExtrapolation,
    boundary_coefficient,
    series_norm_details,
)
from .testfunctions import BumpFunction, frequency_part

DEFAULT_SEED = 0x15151
MAX_MODES = 64


# ----------------------------------------------------------------------- grid


@dataclass(frozen=True)
class RapidityGrid:
    """Gauss-Legendre nodes mapped to ``[-theta_max, theta_max]``."""

    N: int = 32
    theta_max: float = 4.0

    def __post_init__(self):
        if not 1 <= self.N <= MAX_MODES:
            raise ValueError(f"grid size must be in 1..{MAX_MODES}")
        if not self.theta_max > 0:
            raise ValueError("theta_max must be positive")

    @property
    def nodes(self) -> np.ndarray:
        return self._rule()[0]

    @property
    def weights(self) -> np.ndarray:
        return self._rule()[1]

    def _rule(self):
        x, w = leggauss(self.N)
        return self.theta_max * x, self.theta_max * w

    def inner(self, g, h) -> complex:
        """``<g, h> = sum_i w_i conj(g_i) h_i``."""
        return complex(np.sum(self.weights * np.conj(g) * h))


# --------------------------------------------------------------------- space


def _bits(idx):
    return np.left_shift(np.uint64(1), np.asarray(idx, dtype=np.uint64))


def _below(idx):
    return _bits(idx) - np.uint64(1)


def _combo_array(n: int, k: int) -> np.ndarray:
    rows = list(itertools.combinations(range(n), k))
    return np.array(rows, dtype=np.int64).reshape(len(rows), k)


def _parity_below(mask, idx):
    return (np.bitwise_count(mask & _below(idx)) & 1).astype(np.int8)


class FockSpace:
    """Sectors ``0..K`` over ``N`` modes with lexicographic combination bases."""

    def __init__(self, N: int, K: int):
        if not 1 <= N <= MAX_MODES:
            raise ValueError(f"mode count must be in 1..{MAX_MODES}")
        if K < 0:
            raise ValueError("sector cap must be >= 0")
        self.N = N
        self.K = min(K, N)
        self.combos = []
        self.masks = []
        self._sorted = []
        for k in range(self.K + 1):
            c = _combo_array(N, k)
            m = np.bitwise_or.reduce(_bits(c), axis=1) if k else np.zeros(1, dtype=np.uint64)
            order = np.argsort(m)
            self.combos.append(c)
            self.masks.append(m.astype(np.uint64))
            self._sorted.append((m[order], order))

    def dim(self, k: int) -> int:
        return len(self.masks[k])

    @property
    def dims(self) -> list[int]:
        return [self.dim(k) for k in range(self.K + 1)]

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    def offsets(self, kmax: int | None = None) -> list[int]:
        kmax = self.K if kmax is None else kmax
        return [0] + list(np.cumsum(self.dims[: kmax + 1]))

    def index(self, k: int, masks) -> np.ndarray:
        """Basis positions of bitmasks in sector ``k`` (all must be present)."""
        sm, order = self._sorted[k]
        pos = np.searchsorted(sm, masks)
        return order[np.minimum(pos, len(sm) - 1)]

    def __eq__(self, other):
        return isinstance(other, FockSpace) and (self.N, self.K) == (other.N, other.K)

    def __hash__(self):
        return hash((self.N, self.K))

    def __repr__(self):
        return f"FockSpace(N={self.N}, K={self.K})"


# ------------------------------------------------------------------ operators


class PowerIterationError(ArithmeticError):
    pass


class TruncationError(ValueError):
    pass


@dataclass
class TruncatedFockOperator:
    """Block operator; ``blocks[(k_out, k_in)]`` is a sparse ``dim(k_out) x dim(k_in)`` matrix."""

    space: FockSpace
    blocks: dict = dc_field(default_factory=dict)
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        for (ko, ki), b in list(self.blocks.items()):
            if not (0 <= ko <= self.space.K and 0 <= ki <= self.space.K):
                raise TruncationError(f"block {(ko, ki)} outside sectors 0..{self.space.K}")
            if b.shape != (self.space.dim(ko), self.space.dim(ki)):
                raise ValueError(f"block {(ko, ki)} has shape {b.shape}")
            self.blocks[(ko, ki)] = sp.csr_matrix(b, dtype=complex)

    # algebra
    def _check(self, other):
        if other.space != self.space:
            raise ValueError("operators live on different Fock spaces")

    def __add__(self, other):
        self._check(other)
        out = {k: b.copy() for k, b in self.blocks.items()}
        for k, b in other.blocks.items():
            out[k] = out[k] + b if k in out else b.copy()
        return TruncatedFockOperator(self.space, out)

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        return TruncatedFockOperator(self.space, {k: b * c for k, b in self.blocks.items()})

    __rmul__ = __mul__

    def __matmul__(self, other):
        self._check(other)
        out = {}
        by_out = {}
        for (k, ki), b in other.blocks.items():
            by_out.setdefault(k, []).append((ki, b))
        for (ko, k), a in self.blocks.items():
            for ki, b in by_out.get(k, []):
                prod = a @ b
                out[(ko, ki)] = out[(ko, ki)] + prod if (ko, ki) in out else prod
        return TruncatedFockOperator(self.space, out)

    def adjoint(self):
        return TruncatedFockOperator(
            self.space, {(ki, ko): b.conj().T.tocsr() for (ko, ki), b in self.blocks.items()}
        )

    def project(self, k: int):
        """``Q_k X Q_k``: keep blocks between sectors ``<= k``."""
        return TruncatedFockOperator(
            self.space, {key: b for key, b in self.blocks.items() if key[0] <= k and key[1] <= k}
        )

    def nonzero_blocks(self, tol: float = 0.0) -> list:
        return sorted(k for k, b in self.blocks.items() if b.nnz and abs(b).max() > tol)

    @property
    def particle_span(self) -> int:
        return max((abs(ko - ki) for ko, ki in self.nonzero_blocks()), default=0)

    def to_sparse(self, kmax: int | None = None) -> sp.csr_matrix:
        kmax = self.space.K if kmax is None else kmax
        grid = [[None] * (kmax + 1) for _ in range(kmax + 1)]
        for k in range(kmax + 1):
            grid[k][k] = sp.csr_matrix((self.space.dim(k), self.space.dim(k)), dtype=complex)
        for (ko, ki), b in self.blocks.items():
            if ko <= kmax and ki <= kmax:
                grid[ko][ki] = b
        return sp.bmat(grid, format="csr")

    def to_matrix(self, kmax: int | None = None) -> np.ndarray:
        return self.to_sparse(kmax).toarray()

    def block(self, ko: int, ki: int) -> np.ndarray:
        b = self.blocks.get((ko, ki))
        if b is None:
            return np.zeros((self.space.dim(ko), self.space.dim(ki)), dtype=complex)
        return b.toarray()

    def apply(self, vec: "FockVector") -> "FockVector":
        """Action on a vector; inputs and outputs use z-convention coefficients."""
        ortho = vec.orthonormal()
        out = {k: np.zeros(self.space.dim(k), dtype=complex) for k in range(self.space.K + 1)}
        for (ko, ki), b in self.blocks.items():
            if ki in ortho:
                out[ko] += b @ ortho[ki]
        return FockVector.from_orthonormal(vec.grid, self.space, out)

    def norm(self, kmax: int | None = None, **kw) -> float:
        return spectral_norm(self.to_sparse(kmax), **kw)


def zero_operator(space: FockSpace) -> TruncatedFockOperator:
    return TruncatedFockOperator(space, {})


def _diagonal(space: FockSpace, values_per_sector) -> TruncatedFockOperator:
    return TruncatedFockOperator(
        space, {(k, k): sp.diags(np.asarray(v, dtype=complex)) for k, v in enumerate(values_per_sector)}
    )


def identity(space: FockSpace) -> TruncatedFockOperator:
    return _diagonal(space, [np.ones(d) for d in space.dims])


def projector(space: FockSpace, k: int) -> TruncatedFockOperator:
    """``Q_k``: identity on sectors ``<= k``."""
    return _diagonal(space, [np.ones(d) * (s <= k) for s, d in enumerate(space.dims)])


def sector_energies(space: FockSpace, grid: RapidityGrid, mu: float = 1.0) -> list[np.ndarray]:
    ch = mu * np.cosh(grid.nodes)
    return [ch[c].sum(axis=1) if c.shape[1] else np.zeros(1) for c in space.combos]


def hamiltonian(space: FockSpace, grid: RapidityGrid, mu: float = 1.0) -> TruncatedFockOperator:
    return _diagonal(space, sector_energies(space, grid, mu))


def damping(space: FockSpace, grid: RapidityGrid, omega: OmegaIndicatrix, mu: float = 1.0) -> TruncatedFockOperator:
    """``exp(-omega(H/mu))``."""
    return _diagonal(space, [np.exp(-omega_eval(omega, e / mu)) for e in sector_energies(space, grid, mu)])


# ------------------------------------------------------------ block builder


def monomial_operator(space: FockSpace, m: int, n: int, kernel, sectors=None) -> TruncatedFockOperator:
    """``sum_{I, J increasing} kernel[I, J] c^dagger_{I_1}..c^dagger_{I_m} c_{J_1}..c_{J_n}``.

    ``kernel`` has shape ``(C(N, m), C(N, n))`` indexed by the lexicographic
    combination bases of sectors ``m`` and ``n``. ``sectors`` restricts the
    input sectors. Output beyond the cap is dropped.
    """
    kernel = np.asarray(kernel, dtype=complex)
    N, K = space.N, space.K
    if m > K or n > K:
        raise TruncationError(f"monomial ({m},{n}) does not fit sector cap {K}")
    if kernel.shape != (space.dim(m), space.dim(n)):
        raise ValueError(f"kernel shape {kernel.shape} != {(space.dim(m), space.dim(n))}")
    blocks = {}
    for ki in range(n, K + 1):
        ko = ki - n + m
        if ko > K or (sectors is not None and ki not in sectors):
            continue
        blocks[(ko, ki)] = _monomial_block(space, m, n, ki, kernel)
    return TruncatedFockOperator(space, blocks)


def _monomial_block(space: FockSpace, m: int, n: int, ki: int, kernel) -> sp.csr_matrix:
    N = space.N
    ko = ki - n + m
    S = space.combos[ki]
    D = len(S)
    # annihilated subsets J of each input occupation
    P = _combo_array(ki, n)
    J = S[:, P].reshape(len(S) * len(P), n)
    col = np.repeat(np.arange(D), len(P))
    mask = np.repeat(space.masks[ki], len(P))
    sign = np.zeros(len(J), dtype=np.int8)
    for t in range(n - 1, -1, -1):
        sign ^= _parity_below(mask, J[:, t])
        mask = mask & ~_bits(J[:, t])
    jmask = np.bitwise_or.reduce(_bits(J), axis=1) if n else np.zeros(len(J), dtype=np.uint64)
    jidx = space.index(n, jmask)

    # created subsets I of the complement of what is left
    rest = ki - n
    occ = ((mask[:, None] >> np.arange(N, dtype=np.uint64)[None, :]) & np.uint64(1)).astype(np.int8)
    comp = np.argsort(occ, axis=1, kind="stable")[:, : N - rest]
    Q = _combo_array(N - rest, m)
    I = comp[:, Q].reshape(len(comp) * len(Q), m)
    reps = len(Q)
    col = np.repeat(col, reps)
    mask = np.repeat(mask, reps)
    sign = np.repeat(sign, reps)
    jidx = np.repeat(jidx, reps)
    for t in range(m - 1, -1, -1):
        sign ^= _parity_below(mask, I[:, t])
        mask = mask | _bits(I[:, t])
    imask = np.bitwise_or.reduce(_bits(I), axis=1) if m else np.zeros(len(I), dtype=np.uint64)
    iidx = space.index(m, imask)
    row = space.index(ko, mask)
    vals = kernel[iidx, jidx] * (1 - 2 * sign.astype(float))
    keep = vals != 0
    return sp.csr_matrix(
        (vals[keep], (row[keep], col[keep])), shape=(space.dim(ko), space.dim(ki)), dtype=complex
    )


def creator(space: FockSpace, grid: RapidityGrid, h) -> TruncatedFockOperator:
    """``z^dagger(h) = sum_i w_i h(theta_i) z^dagger_i``."""
    if space.K < 1:
        raise TruncationError("creators need sector cap >= 1")
    h = np.broadcast_to(np.asarray(h, dtype=complex), (space.N,))
    return monomial_operator(space, 1, 0, (np.sqrt(grid.weights) * h)[:, None])


def annihilator(space: FockSpace, grid: RapidityGrid, h) -> TruncatedFockOperator:
    """``z(h) = sum_i w_i h(theta_i) z_i``; ``{z(conj g), z^dagger(h)} = <g, h>``."""
    if space.K < 1:
        raise TruncationError("annihilators need sector cap >= 1")
    h = np.broadcast_to(np.asarray(h, dtype=complex), (space.N,))
    return monomial_operator(space, 0, 1, (np.sqrt(grid.weights) * h)[None, :])


# --------------------------------------------------------------------- fields


def conjugation_signs(space: FockSpace) -> list[np.ndarray]:
    """``(-1)^{k(k-1)/2}``: reversing the argument order of an antisymmetric k-function."""
    return [np.full(d, (-1.0) ** (k * (k - 1) // 2)) for k, d in enumerate(space.dims)]


def conjugate_by_J(op: TruncatedFockOperator) -> TruncatedFockOperator:
    """``J X J`` for the antiunitary ``J``: complex conjugation plus argument reversal."""
    s = conjugation_signs(op.space)
    return TruncatedFockOperator(
        op.space,
        {(ko, ki): sp.diags(s[ko]) @ b.conj() @ sp.diags(s[ki]) for (ko, ki), b in op.blocks.items()},
    )


def field(
    f: BumpFunction,
    kind: str,
    space: FockSpace,
    grid: RapidityGrid,
    mu: float = 1.0,
    conv: Conventions = DEFAULT_CONVENTIONS,
) -> TruncatedFockOperator:
    """``phi(f) = z^dagger(f+) + z(f-)``; ``phi'(f) = J phi(f(-.)) J``.

    ``phi`` is localized in left wedges, ``phi'`` in right wedges.
    """
    if kind == "phi":
        fp = frequency_part(f, grid.nodes, +1, mu, conv)
        fm = frequency_part(f, grid.nodes, -1, mu, conv)
        return creator(space, grid, fp) + annihilator(space, grid, fm)
    if kind == "phi_prime":
        return conjugate_by_J(field(f.reflected(), "phi", space, grid, mu, conv))
    raise ValueError(f"unknown field kind {kind!r}")


# ------------------------------------------------------------------- assembly


def coefficient_kernel(family, m: int, n: int, space: FockSpace, grid: RapidityGrid,
                       presc: BoundaryPrescription = BoundaryPrescription(),
                       conv: Conventions = DEFAULT_CONVENTIONS):
    """``sqrt(prod w_I) f_{m,n}(theta_I, theta_J) sqrt(prod w_J)`` on increasing index tuples."""
    th, sw = grid.nodes, np.sqrt(grid.weights)
    I, J = space.combos[m], space.combos[n]
    bv = boundary_coefficient(family, m, n, th[I][:, None, :], th[J][None, :, :], presc, conv, strict=False)
    wI = np.prod(sw[I], axis=1) if m else np.ones(len(I))
    wJ = np.prod(sw[J], axis=1) if n else np.ones(len(J))
    return bv.value * wI[:, None] * wJ[None, :], bv


def assemble_observable(
    family,
    space: FockSpace,
    grid: RapidityGrid,
    cutoffs: tuple[int, int] | None = None,
    presc: BoundaryPrescription = BoundaryPrescription(),
    conv: Conventions = DEFAULT_CONVENTIONS,
) -> TruncatedFockOperator:
    """``A = sum_{m,n} (1/m!n!) int f_{m,n} z^dagger...z^dagger z...z`` on the grid.

    Antisymmetry of ``f_{m,n}`` in each group of arguments turns the
    ``1/m!n!`` sum over all index tuples into a sum over increasing ones.
    ``meta`` records how many grid pairs sat on the odd tower's
    ``theta_i = eta_j`` singularity (principal value used) and the largest
    relative extrapolation spread.
    """
    if grid.N != space.N:
        raise ValueError("grid and Fock space disagree on the mode count")
    M, Nc = cutoffs if cutoffs is not None else (space.K, space.K)
    out = zero_operator(space)
    singular, spread = 0, 0.0
    for m in range(min(M, space.K) + 1):
        for n in range(min(Nc, space.K) + 1):
            if not family.nonzero(m + n):
                continue
            kern, bv = coefficient_kernel(family, m, n, space, grid, presc, conv)
            singular += int(bv.singular.sum())
            scale = float(np.max(np.abs(bv.value), initial=0.0))
            if scale > 0:
                spread = max(spread, float(np.max(bv.spread)) / scale)
            out = out + monomial_operator(space, m, n, kern)
    out.meta.update(family=family.label(), singular_pairs=singular, max_spread=spread,
                    variant=presc.variant.value)
    return out


# -------------------------------------------------------------------- vectors


@dataclass
class FockVector:
    """Antisymmetric coefficient functions on the grid, stored on increasing index tuples.

    ``sectors[k][a]`` is ``Psi_k(theta_{i_1}, ..., theta_{i_k})`` for the
    ``a``-th combination; ``<Psi, Psi> = sum_k sum_a prod(w) |Psi_k|^2``.
    """

    grid: RapidityGrid
    space: FockSpace
    sectors: dict

    def _wfac(self, k):
        sw = np.sqrt(self.grid.weights)
        c = self.space.combos[k]
        return np.prod(sw[c], axis=1) if k else np.ones(1)

    def orthonormal(self) -> dict:
        return {k: self._wfac(k) * np.asarray(v, dtype=complex) for k, v in self.sectors.items()}

    @classmethod
    def from_orthonormal(cls, grid, space, coeffs: dict) -> "FockVector":
        vec = cls(grid, space, {})
        vec.sectors = {k: np.asarray(v, dtype=complex) / vec._wfac(k) for k, v in coeffs.items()}
        return vec

    @classmethod
    def vacuum(cls, grid, space) -> "FockVector":
        return cls(grid, space, {0: np.ones(1, dtype=complex)})

    @classmethod
    def from_tensors(cls, grid, space, tensors: dict, tol: float = 1e-12) -> "FockVector":
        """Store full antisymmetric tensors ``(N,)*k``; raises if they are not antisymmetric."""
        sectors = {}
        for k, T in tensors.items():
            T = np.asarray(T, dtype=complex)
            scale = max(float(np.max(np.abs(T), initial=0.0)), 1e-300)
            for a in range(k - 1):
                perm = list(range(k))
                perm[a], perm[a + 1] = perm[a + 1], perm[a]
                if np.max(np.abs(T + T.transpose(perm)), initial=0.0) > tol * scale:
                    raise ValueError(f"sector {k} tensor is not antisymmetric")
            c = space.combos[k]
            sectors[k] = T[tuple(c.T)] if k else T.reshape(1)
        return cls(grid, space, sectors)

    def to_tensors(self) -> dict:
        out = {}
        N = self.space.N
        for k, v in self.sectors.items():
            T = np.zeros((N,) * k, dtype=complex)
            for a, c in enumerate(self.space.combos[k]):
                for perm in itertools.permutations(range(k)):
                    inv = sum(1 for x in range(k) for y in range(x + 1, k) if perm[x] > perm[y])
                    T[tuple(c[list(perm)])] = (-1) ** inv * v[a]
            out[k] = T if k else v.reshape(())
        return out

    def inner(self, other: "FockVector") -> complex:
        a, b = self.orthonormal(), other.orthonormal()
        return complex(sum(np.vdot(a[k], b[k]) for k in a if k in b))

    def norm(self) -> float:
        return math.sqrt(max(self.inner(self).real, 0.0))


# ---------------------------------------------------------------------- norms


def spectral_norm(M, tol: float = 1e-8, max_iter: int = 20000, seed: int = DEFAULT_SEED) -> float:
    """Largest singular value by power iteration on ``M^H M``.

    Stops when the Rayleigh quotient changes by less than ``tol`` relative;
    raises :class:`PowerIterationError` after ``max_iter`` steps.
    """
    if isinstance(M, TruncatedFockOperator):
        M = M.to_sparse()
    if M.shape[0] == 0 or M.shape[1] == 0 or (sp.issparse(M) and M.nnz == 0):
        return 0.0
    rng = np.random.default_rng(seed)
    v = rng.normal(size=M.shape[1]) + 1j * rng.normal(size=M.shape[1])
    v /= np.linalg.norm(v)
    MH = M.conj().T
    lam = 0.0
    for _ in range(max_iter):
        w = M @ v
        new = float(np.vdot(w, w).real)
        u = MH @ w
        nu = np.linalg.norm(u)
        if nu == 0:
            return 0.0
        v = u / nu
        if abs(new - lam) <= tol * new:
            return math.sqrt(new)
        lam = new
    raise PowerIterationError(f"power iteration did not converge in {max_iter} steps")


def qomega_norm(A: TruncatedFockOperator, k: int, omega: OmegaIndicatrix, grid: RapidityGrid,
                mu: float = 1.0, **power_kw) -> float:
    """``||Q_k A e^{-omega(H/mu)} Q_k|| + ||Q_k e^{-omega(H/mu)} A Q_k||``."""
    D = damping(A.space, grid, omega, mu)
    left = (A @ D).project(k)
    right = (D @ A).project(k)
    return spectral_norm(left.to_sparse(k), **power_kw) + spectral_norm(right.to_sparse(k), **power_kw)


# ---------------------------------------------------------------- closability


@dataclass
class ClosabilityReport:
    n: int
    omega: str
    ms: list
    terms: list
    partial_sums: list
    ratios: list
    verdict: str
    failures: dict
    note: str = ""

    def rows(self):
        """``(m, term, partial_sum, ratio)`` with ratio to the previous nonzero term."""
        out = []
        prev = None
        for m, t, s in zip(self.ms, self.terms, self.partial_sums):
            r = t / prev if (prev and t) else float("nan")
            out.append((m, t, s, r))
            if t:
                prev = t
        return out


def closability_sum(family, n: int, omega: OmegaIndicatrix, M_max: int = 7, nodes: int = 16,
                    theta_max: float = 6.0, presc: BoundaryPrescription = BoundaryPrescription(),
                    tail_tol: float = 1e-10, ratio_max: float = 0.9) -> ClosabilityReport:
    """Terms ``2^{m/2}/sqrt(m!) (||f_{m,n}|| + ||f_{n,m}||)`` for ``m = 0..M_max``.

    Verdict: ``converging`` when the last three ratios of consecutive
    nonzero terms are below ``ratio_max``, or when the family terminates and
    every term past its last nonzero member vanishes identically;
    ``diverging`` when the last three ratios are all >= 1; otherwise, or if
    any term failed to evaluate, ``inconclusive``.
    """
    ms, terms, partial, failures = [], [], [], {}
    total = 0.0
    for m in range(M_max + 1):
        t = 0.0
        if family.nonzero(m + n):
            try:
                a = series_norm_details(family, m, n, omega, nodes=nodes, theta_max=theta_max,
                                        presc=presc, tail_tol=tail_tol).value
                b = a if m == n else series_norm_details(family, n, m, omega, nodes=nodes,
                                                         theta_max=theta_max, presc=presc,
                                                         tail_tol=tail_tol).value
                t = 2 ** (m / 2) / math.sqrt(math.factorial(m)) * (a + b)
            except (DivergentTail, NonconvergentExtrapolation) as exc:
                failures[m] = str(exc)
                t = float("nan")
        total += 0.0 if math.isnan(t) else t
        ms.append(m)
        terms.append(t)
        partial.append(total)
    nz = [t for t in terms if t and not math.isnan(t)]
    ratios = [b / a for a, b in zip(nz, nz[1:])]
    note = ""
    if failures:
        verdict = "inconclusive"
    elif getattr(family, "entire", False) and hasattr(family, "k") and len(nz) <= 1:
        verdict, note = "converging", "terminating series"
    elif not nz:
        verdict, note = "converging", "all terms vanish"
    elif len(ratios) >= 3 and all(r < ratio_max for r in ratios[-3:]):
        verdict = "converging"
    elif len(ratios) >= 3 and all(r >= 1 for r in ratios[-3:]):
        verdict = "diverging"
    else:
        verdict = "inconclusive"
    return ClosabilityReport(n, omega.label(), ms, terms, partial, ratios, verdict, failures, note)


# ------------------------------------------------------------------------ dump


def dump_operator(op: TruncatedFockOperator, grid: RapidityGrid, path: str):
    """Write blocks as ``.npz`` (by suffix) or CSV.

    CSV layout: ``#``-prefixed header lines with the grid nodes and weights,
    then rows ``k_out,k_in,row,col,re,im`` where ``row``/``col`` are positions
    in the lexicographic combination bases.
    """
    if str(path).endswith(".npz"):
        arrays = {"nodes": grid.nodes, "weights": grid.weights}
        for (ko, ki), b in op.blocks.items():
            coo = b.tocoo()
            arrays[f"b{ko}_{ki}"] = np.stack([coo.row, coo.col, coo.data.real, coo.data.imag])
        np.savez(path, **arrays)
        return
    with open(path, "w", newline="") as fh:
        fh.write("# nodes " + " ".join(repr(float(x)) for x in grid.nodes) + "\n")
        fh.write("# weights " + " ".join(repr(float(x)) for x in grid.weights) + "\n")
        w = csv.writer(fh)
        w.writerow(["k_out", "k_in", "row", "col", "re", "im"])
        for (ko, ki) in sorted(op.blocks):
            coo = op.blocks[(ko, ki)].tocoo()
            for r, c, v in zip(coo.row, coo.col, coo.data):
                w.writerow([ko, ki, int(r), int(c), repr(float(v.real)), repr(float(v.imag))])


def load_operator(space: FockSpace, path: str) -> TruncatedFockOperator:
    data = np.load(path)
    blocks = {}
    for key in data.files:
        if key.startswith("b"):
            ko, ki = (int(x) for x in key[1:].split("_"))
            r, c, re, im = data[key]
            blocks[(ko, ki)] = sp.csr_matrix(
                (re + 1j * im, (r.astype(int), c.astype(int))), shape=(space.dim(ko), space.dim(ki))
            )
    return TruncatedFockOperator(space, blocks)
