"""The two explicit families of meromorphic functions F_k for S = -1.

Even, terminating family (only ``F_{2k}`` nonzero)::

    F_{2k}(z) = g~(p(z)) P(e^z) sum_{sigma in S_2k} sign(sigma) prod_j sinh((z_{s(2j-1)} - z_{s(2j)})/2)
              = g~(p(z)) P(e^z) 2^k k! Pf[sinh((z_a - z_b)/2)]

Odd tower (only ``F_{2j+1}`` nonzero)::

    F_{2j+1}(z) = (2 pi i)^{-j} g~(p(z)) P_{2j+1}(e^z) prod_{l<r} tanh((z_l - z_r)/2)

The power of ``2 pi i`` is one per level; this is what the residue
recursion with S = -1 requires (see ``analyticity.check_recursion``). The
per-level factor is a field of :class:`OddTower` so that the recursion
check can be run against the alternatives.

Boundary values ``f_{m,n}(theta, eta)`` put the creator rapidities on the
real line and shift the annihilator rapidities by ``+i(pi - eps)``, in the
order they appear in ``z(eta_1)...z(eta_n)``. The other three ordering and
shift variants are kept for the convention sweep.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.polynomial.legendre import leggauss

from .core import (
    DEFAULT_CONVENTIONS,
    Conventions,
    DoubleCone,
    OmegaIndicatrix,
    ball_inside,
    omega_eval,
    total_momentum,
)
from .laurent import PowerSumTower, SymmetricLaurentPolynomial, descent_check
from .pfaffian import matching_sum_abs, pfaffian
from .testfunctions import BumpFunction, fourier_transform


class PoleProximityError(ArithmeticError):
    pass


class NonconvergentExtrapolation(ArithmeticError):
    pass


class DivergentTail(ArithmeticError):
    def __init__(self, ratio: float, msg: str = ""):
        super().__init__(msg or f"damped kernel at the grid boundary is {ratio:.3g} of its peak")
        self.ratio = ratio


class LocalizationError(ValueError):
    pass


def _check_localized(g: BumpFunction, r: float):
    if not ball_inside(DoubleCone.standard(r), g.center, g.radius):
        raise LocalizationError(f"support of {g} is not inside the double cone of radius {r}")


@dataclass(frozen=True)
class EvenTerminating:
    k: int
    poly: SymmetricLaurentPolynomial
    g: BumpFunction
    r: float
    mu: float = 1.0

    entire = True

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if self.poly.nvars != 2 * self.k:
            raise ValueError(f"P must have {2 * self.k} variables, has {self.poly.nvars}")
        _check_localized(self.g, self.r)

    def nonzero(self, count: int) -> bool:
        return count == 2 * self.k

    def label(self) -> str:
        return f"even(k={self.k})"


@dataclass(frozen=True)
class OddTower:
    tower: PowerSumTower
    g: BumpFunction
    r: float
    omega: OmegaIndicatrix = OmegaIndicatrix.power(0.5)
    mu: float = 1.0
    level_factor: complex = 1 / (2j * math.pi)

    entire = False

    def __post_init__(self):
        _check_localized(self.g, self.r)
        rng = np.random.default_rng(7)
        p = complex(*rng.normal(size=2))
        q = rng.normal(size=3) + 1j * rng.normal(size=3)
        if descent_check(self.tower, 2, p, q) > 1e-10 * (1 + abs(self.tower.eval_log(np.log(q)))):
            raise ValueError(f"tower {self.tower} violates the descent property")

    def nonzero(self, count: int) -> bool:
        return count % 2 == 1

    def label(self) -> str:
        return f"odd({self.tower.label()})"


@dataclass(frozen=True)
class ConstantFamily:
    """``F_count = value`` and zero otherwise; a control for the checks."""

    count: int
    value: complex = 1.0

    entire = True

    def nonzero(self, count: int) -> bool:
        return count == self.count

    def label(self) -> str:
        return f"const({self.count})"


@dataclass(frozen=True)
class ZeroFamily:
    entire = True

    def nonzero(self, count: int) -> bool:
        return False

    def label(self) -> str:
        return "zero"


# ------------------------------------------------------------------ evaluation


def sinh_matrix(zeta):
    d = zeta[..., :, None] - zeta[..., None, :]
    return np.sinh(d / 2)


def antisymmetrized_sinh_sum(zeta):
    """Direct ``(2k)!``-term permutation sum; the brute-force oracle for the Pfaffian route."""
    zeta = np.asarray(zeta, dtype=complex)
    n = zeta.shape[-1]
    out = np.zeros(zeta.shape[:-1], dtype=complex)
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for a in range(n) for b in range(a + 1, n) if perm[a] > perm[b])
        term = np.ones(zeta.shape[:-1], dtype=complex)
        for j in range(n // 2):
            term = term * np.sinh((zeta[..., perm[2 * j]] - zeta[..., perm[2 * j + 1]]) / 2)
        out += (-1) ** inv * term
    return out


def pole_distance(zeta):
    """Distance of the pairwise differences from ``i pi (2Z + 1)``; +inf for fewer than 2 entries."""
    zeta = np.asarray(zeta, dtype=complex)
    n = zeta.shape[-1]
    if n < 2:
        return np.full(zeta.shape[:-1], np.inf)
    iu = np.triu_indices(n, 1)
    d = (zeta[..., :, None] - zeta[..., None, :])[..., iu[0], iu[1]]
    u = d / (1j * np.pi)
    odd = 2 * np.round((u.real - 1) / 2) + 1
    dist = np.pi * np.hypot(u.real - odd, u.imag)
    return dist.min(axis=-1)


def _log_tanh_product(zeta):
    n = zeta.shape[-1]
    acc = np.zeros(zeta.shape[:-1], dtype=complex)
    for a in range(n):
        for b in range(a + 1, n):
            acc += np.log(np.tanh((zeta[..., a] - zeta[..., b]) / 2))
    return acc


def eval_F(family, zeta, conv: Conventions = DEFAULT_CONVENTIONS, guard: float = 1e-8, fast_ft: bool = False):
    """Evaluate ``F_j`` at complex tuples ``zeta`` of shape ``(..., j)``.

    Returns zeros for lengths where the family vanishes. Raises
    :class:`PoleProximityError` for the odd tower within ``guard`` of a
    ``tanh`` pole. ``fast_ft`` switches the test-function transform to the
    tabulated profile and is only valid for real total momenta.
    """
    zeta = np.asarray(zeta, dtype=complex)
    count = zeta.shape[-1]
    batch = zeta.shape[:-1]
    if isinstance(family, ZeroFamily) or not family.nonzero(count):
        return np.zeros(batch, dtype=complex)
    if isinstance(family, ConstantFamily):
        return np.full(batch, complex(family.value))

    ptot = total_momentum(zeta, family.mu)
    if fast_ft:
        ptot = ptot.real
    gt = fourier_transform(family.g, ptot, conv=conv, fast=fast_ft)

    if isinstance(family, EvenTerminating):
        k = family.k
        P = family.poly.eval_log(zeta)
        pf = pfaffian(sinh_matrix(zeta)) if k else np.ones(batch, dtype=complex)
        return gt * P * (2**k * math.factorial(k)) * pf

    if isinstance(family, OddTower):
        if np.any(pole_distance(zeta) < guard):
            raise PoleProximityError(f"rapidity differences within {guard:g} of the tanh pole locus")
        j = (count - 1) // 2
        P = family.tower.eval_log(zeta)
        # phases of the logs are irrelevant after exponentiation
        mag = np.exp(_log_tanh_product(zeta)) if count > 1 else 1.0
        return gt * P * mag * family.level_factor**j

    raise TypeError(f"unknown family {family!r}")


def magnitude_scale(family, zeta, conv: Conventions = DEFAULT_CONVENTIONS):
    """Size of the terms that make up ``F(zeta)``, before cancellations.

    Relative residuals are taken against ``max(|F|, scale)``: for ``2k >= 4``
    the even family's sinh matrix has rank two, its Pfaffian vanishes
    identically and ``|F|`` alone is pure roundoff.
    """
    zeta = np.asarray(zeta, dtype=complex)
    count = zeta.shape[-1]
    batch = zeta.shape[:-1]
    if isinstance(family, ZeroFamily) or not family.nonzero(count):
        return np.zeros(batch)
    if isinstance(family, ConstantFamily):
        return np.full(batch, abs(complex(family.value)))
    gt = np.abs(fourier_transform(family.g, total_momentum(zeta, family.mu), conv=conv))
    if isinstance(family, EvenTerminating):
        k = family.k
        hs = matching_sum_abs(sinh_matrix(zeta)) if k else np.ones(batch)
        return gt * family.poly.abs_terms_log(zeta) * (2**k * math.factorial(k)) * hs
    j = (count - 1) // 2
    mag = np.exp(_log_tanh_product(zeta).real) if count > 1 else 1.0
    return gt * family.tower.abs_terms_log(zeta) * mag * abs(family.level_factor) ** j


# ------------------------------------------------------------ boundary values


class BoundaryVariant(str, Enum):
    PLUS_ORDERED = "plus-ordered"
    PLUS_REVERSED = "plus-reversed"
    MINUS_ORDERED = "minus-ordered"
    MINUS_REVERSED = "minus-reversed"

    @property
    def shift_sign(self) -> int:
        return 1 if self.value.startswith("plus") else -1

    @property
    def reversed(self) -> bool:
        return self.value.endswith("reversed")


@dataclass(frozen=True)
class BoundaryPrescription:
    """How ``f_{m,n}`` is read off from ``F_{m+n}``.

    ``eps0`` is the first regularization offset; the extrapolation ladder is
    ``eps0 / 2**l`` for ``l < ladder``, extrapolated to zero by Neville's
    scheme. ``tol`` bounds the last two extrapolants' disagreement.
    """

    variant: BoundaryVariant = BoundaryVariant.PLUS_ORDERED
    eps0: float = 1e-3
    ladder: int = 4
    tol: float = 1e-8
    coincidence: float = 1e-12
    pv_points: int = 16

    def __post_init__(self):
        if not self.eps0 > 0:
            raise ValueError("eps0 must be positive")
        if self.ladder < 2:
            raise ValueError("extrapolation needs at least two offsets")

    @property
    def offsets(self) -> np.ndarray:
        return self.eps0 / 2.0 ** np.arange(self.ladder)


@dataclass
class BoundaryValue:
    value: np.ndarray
    singular: np.ndarray  # True where some theta_i == eta_j for the odd tower
    spread: np.ndarray  # extrapolation error estimate (0 where no limit was needed)


def _boundary_args(theta, eta, variant: BoundaryVariant, eps):
    # eps is a scalar or has the shape of eta (independent offsets per annihilator)
    shifted = eta + variant.shift_sign * 1j * (np.pi - np.asarray(eps))
    shifted = shifted[..., ::-1] if variant.reversed else shifted
    return np.concatenate([theta.astype(complex), shifted], axis=-1)


def _neville_zero(xs, ys):
    """Extrapolate samples ``ys[l]`` taken at ``xs[l]`` to ``x = 0``."""
    p = [np.array(y, copy=True) for y in ys]
    n = len(xs)
    for level in range(1, n):
        for i in range(n - level):
            p[i] = (xs[i + level] * p[i] - xs[i] * p[i + 1]) / (xs[i + level] - xs[i])
    return p[0]


def _extrapolate(evaluate, offsets):
    ys = [evaluate(e) for e in offsets]
    full = _neville_zero(offsets, ys)
    lower = _neville_zero(offsets[:-1], ys[:-1])
    return full, np.abs(full - lower)


def _torus_mean(family, theta, eta, hit, rho, points, variant, conv):
    # constant Laurent coefficient in the offsets of the coincident annihilators;
    # entries are grouped by which annihilators coincide so only those are swept
    phase = np.exp(2j * np.pi * np.arange(points) / points)
    out = np.empty(theta.shape[:-1], dtype=complex)
    for pattern in np.unique(hit, axis=0):
        rows = np.all(hit == pattern, axis=-1)
        cols = np.flatnonzero(pattern)
        t, e, r = theta[rows], eta[rows], rho[rows]
        acc = np.zeros(len(t), dtype=complex)
        for idx in itertools.product(range(points), repeat=len(cols)):
            eps = np.zeros(e.shape, dtype=complex)
            eps[:, cols] = r[:, None] * phase[list(idx)]
            acc += eval_F(family, _boundary_args(t, e, variant, eps), conv, guard=0.0)
        out[rows] = acc / points ** len(cols)
    return out


def _principal_value(family, theta, eta, presc, conv):
    """Principal value at coincident ``theta_i = eta_j`` as a torus mean over complex offsets.

    Each coincident annihilator gets an offset ``rho e^{i phi}``; the mean over
    the torus is the constant term of the Laurent expansion, which is the
    limit of the average over both real approach directions (for several
    coincidences, the product of one-dimensional principal values). ``rho``
    is an eighth of the distance to the nearest non-coincident pole, so the
    trapezoidal rule converges like ``8^{-points}``; the spread compares
    against ``rho / 2``.
    """
    d = np.abs(theta[..., :, None] - eta[..., None, :])
    coincident = d < presc.coincidence
    hit = coincident.any(axis=-2)
    R = np.minimum(np.where(coincident, np.inf, d).min(axis=(-1, -2)), np.pi)
    rho = R / 8
    pts = presc.pv_points
    v = _torus_mean(family, theta, eta, hit, rho, pts, presc.variant, conv)
    half = _torus_mean(family, theta, eta, hit, rho / 2, pts, presc.variant, conv)
    return v, np.abs(v - half)


def boundary_coefficient(
    family,
    m: int,
    n: int,
    theta,
    eta,
    presc: BoundaryPrescription = BoundaryPrescription(),
    conv: Conventions = DEFAULT_CONVENTIONS,
    strict: bool = True,
    fast_ft: bool = False,
) -> BoundaryValue:
    """Boundary value ``f_{m,n}(theta, eta)`` of ``F_{m+n}``; inputs have shapes ``(..., m)``, ``(..., n)``.

    Entire families and configurations without creator/annihilator pairs are
    evaluated directly at the boundary. For the odd tower with ``m, n > 0``
    the offsets ``eps`` are extrapolated to zero; where some ``theta_i``
    equals some ``eta_j`` the kernel has a pole and the principal value is
    returned with ``singular`` set (see :func:`_principal_value`). ``strict`` raises :class:`NonconvergentExtrapolation` when the
    extrapolation spread exceeds ``presc.tol`` relative.
    """
    theta = np.asarray(theta, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if theta.shape[-1] != m or eta.shape[-1] != n:
        raise ValueError(f"expected {m} creator and {n} annihilator rapidities")
    batch = np.broadcast_shapes(theta.shape[:-1], eta.shape[:-1])
    theta = np.broadcast_to(theta, batch + (m,))
    eta = np.broadcast_to(eta, batch + (n,))
    zeros = np.zeros(batch, dtype=bool)
    if isinstance(family, ZeroFamily) or not family.nonzero(m + n):
        return BoundaryValue(np.zeros(batch, dtype=complex), zeros, np.zeros(batch))

    variant = presc.variant
    if family.entire or m == 0 or n == 0:
        args = _boundary_args(theta, eta, variant, 0.0)
        fast = fast_ft and (m == 0 or n == 0 or family.entire)
        return BoundaryValue(eval_F(family, args, conv, fast_ft=fast), zeros, np.zeros(batch))

    gap = np.abs(theta[..., :, None] - eta[..., None, :]).min(axis=(-1, -2))
    singular = gap < presc.coincidence
    offsets = presc.offsets

    value = np.empty(batch, dtype=complex)
    spread = np.zeros(batch)
    if np.any(~singular):
        sub_t, sub_e = theta[~singular], eta[~singular]

        def reg_sub(e):
            return eval_F(family, _boundary_args(sub_t, sub_e, variant, e), conv)

        v, s = _extrapolate(reg_sub, offsets)
        value[~singular], spread[~singular] = v, s
    if np.any(singular):
        v, s = _principal_value(family, theta[singular], eta[singular], presc, conv)
        value[singular], spread[singular] = v, s

    if strict:
        floor = max(float(np.max(np.abs(value), initial=0.0)) * 1e-6, 1e-300)
        bad = spread > presc.tol * np.maximum(np.abs(value), floor)
        if np.any(bad):
            raise NonconvergentExtrapolation(
                f"{int(bad.sum())} boundary values did not settle (max spread {spread.max():.3g})"
            )
    return BoundaryValue(value, singular, spread)


# ---------------------------------------------------------------- kernel norms


@dataclass
class NormData:
    value: float
    tail_ratio: float
    points: int
    singular: int


def _combinations(n: int, r: int) -> np.ndarray:
    if r == 0:
        return np.zeros((1, 0), dtype=np.intp)
    return np.array(list(itertools.combinations(range(n), r)), dtype=np.intp)


def series_norm_details(
    family,
    m: int,
    n: int,
    omega: OmegaIndicatrix,
    nodes: int = 48,
    theta_max: float = 4.0,
    presc: BoundaryPrescription = BoundaryPrescription(),
    conv: Conventions = DEFAULT_CONVENTIONS,
    per_variable: bool = False,
    tail_tol: float = 1e-10,
    chunk: int = 200_000,
    fast_ft: bool = True,
) -> NormData:
    """Hilbert-Schmidt norm of the damped kernel ``e^{-w(E(theta))} f_{m,n} e^{-w(E(eta))}``.

    ``E`` is the total energy in units of the mass; with ``per_variable``
    each rapidity is damped separately instead. The integral over
    ``[-theta_max, theta_max]^{m+n}`` uses Gauss-Legendre in every variable;
    since the kernel is antisymmetric in the creator and in the annihilator
    rapidities, only strictly increasing index tuples are summed, with
    multiplicity ``m! n!``. Raises :class:`DivergentTail` if the damped
    kernel on grid tuples touching the outermost nodes exceeds ``tail_tol``
    of its peak.
    """
    if m == 0 and n == 0:
        if family.nonzero(0):
            v = boundary_coefficient(family, 0, 0, np.zeros((0,)), np.zeros((0,)), presc, conv).value
            return NormData(float(abs(v)), 0.0, 1, 0)
        return NormData(0.0, 0.0, 1, 0)
    if not family.nonzero(m + n):
        return NormData(0.0, 0.0, 0, 0)

    x, w = leggauss(nodes)
    th, w = theta_max * x, theta_max * w
    ch = np.cosh(th)
    I = _combinations(nodes, m)
    J = _combinations(nodes, n)
    edge = lambda C: np.any((C == 0) | (C == nodes - 1), axis=1)  # noqa: E731
    I_edge, J_edge = edge(I), edge(J)

    def damp(C):
        if per_variable:
            return np.exp(-omega_eval(omega, ch[C]).sum(axis=1))
        return np.exp(-omega_eval(omega, ch[C].sum(axis=1)))

    dI, dJ = damp(I), damp(J)
    wI, wJ = np.prod(w[I], axis=1), np.prod(w[J], axis=1)

    total = 0.0
    peak = 0.0
    edge_peak = 0.0
    singular = 0
    pairs = len(I) * len(J)
    step = max(1, chunk // max(len(J), 1))
    for start in range(0, len(I), step):
        Ib = np.arange(start, min(start + step, len(I)))
        ii, jj = np.meshgrid(Ib, np.arange(len(J)), indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()
        bv = boundary_coefficient(family, m, n, th[I[ii]], th[J[jj]], presc, conv, strict=False, fast_ft=fast_ft)
        damped = np.abs(bv.value) * dI[ii] * dJ[jj]
        singular += int(bv.singular.sum())
        total += float(np.sum(wI[ii] * wJ[jj] * damped**2))
        peak = max(peak, float(damped.max(initial=0.0)))
        on_edge = I_edge[ii] | J_edge[jj]
        if np.any(on_edge):
            edge_peak = max(edge_peak, float(damped[on_edge].max()))
    value = math.sqrt(math.factorial(m) * math.factorial(n) * total)
    ratio = edge_peak / peak if peak > 0 else 0.0
    if ratio > tail_tol:
        raise DivergentTail(ratio)
    return NormData(value, ratio, pairs, singular)


def series_norm_data(family, m: int, n: int, omega: OmegaIndicatrix, **grid) -> float:
    """``||f_{m,n}||^omega`` surrogate; see :func:`series_norm_details` for the grid options."""
    return series_norm_details(family, m, n, omega, **grid).value
