"""Checks of the analytic properties of the families F_k.

S-symmetry, S-periodicity and the residue recursion are verified numerically
at random complex tuples. Residues are computed by the trapezoidal rule on a
small circle, which converges geometrically for integrands meromorphic
in a neighbourhood of the contour.

With S = -1 the identities read

* symmetry: ``F(..., z_i, z_{i+1}, ...) = -F(..., z_{i+1}, z_i, ...)``;
* periodicity: ``F(z + 2 pi i e_slot) = (-1)^{k-1} F(z)``;
* recursion: ``res_{z_n - z_m = i pi} F_k(z) = -(1/2 pi i) (-1)^{n-m+1} (1 - (-1)^k) F_{k-2}(z^)``,
  where ``z^`` omits ``z_m`` and ``z_n``.

Residuals are relative to ``max(|F|, magnitude_scale)`` so that identically
vanishing members give a meaningful zero-equals-zero comparison.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import momentum, scattering_S
from .formfactors import (
    eval_F,
    magnitude_scale,
    pole_distance,
)
from .testfunctions import fourier_transform

TINY = 1e-300


def random_tuples(rng: np.random.Generator, count: int, samples: int, strip: float = 1.0,
                  spread: float = 2.0, min_pole_distance: float = 0.05) -> np.ndarray:
    """Random complex tuples with ``|Im z| <= strip`` kept away from the tanh pole locus.

    Real parts are uniform on ``[-spread, spread]``. The pole locus is
    invariant under transpositions and ``2 pi i`` shifts, so accepted tuples
    are safe for all three checks.
    """
    out = np.empty((0, count), dtype=complex)
    while len(out) < samples:
        z = rng.uniform(-spread, spread, (samples, count)) + 1j * rng.uniform(-strip, strip, (samples, count))
        out = np.concatenate([out, z[pole_distance(z) > min_pole_distance]])
    return out[:samples]


def _evaluate(family, zeta, evaluator):
    return evaluator(zeta) if evaluator is not None else eval_F(family, zeta)


def _floor(family, zeta, evaluator):
    # a substituted evaluator is judged on its own values only
    if evaluator is not None:
        return TINY
    return magnitude_scale(family, zeta)


def check_S_symmetry(family, zeta, i: int, evaluator=None):
    """``|F(z) - S(z_i - z_{i+1}) F(swap_i z)| / max(|F(z)|, scale)``; vectorized over leading axes.

    ``evaluator`` replaces ``eval_F`` (for controls that break the symmetry).
    """
    zeta = np.asarray(zeta, dtype=complex)
    if not 0 <= i < zeta.shape[-1] - 1:
        raise IndexError(f"adjacent index {i} out of range")
    swapped = zeta.copy()
    swapped[..., [i, i + 1]] = zeta[..., [i + 1, i]]
    a = _evaluate(family, zeta, evaluator)
    b = _evaluate(family, swapped, evaluator)
    S = scattering_S(zeta[..., i] - zeta[..., i + 1])
    denom = np.maximum(np.abs(a), _floor(family, zeta, evaluator))
    return np.abs(a - S * b) / np.maximum(denom, TINY)


def periodicity_factor(zeta, slot: int):
    """``prod_{j != slot} S(z_j - z_slot)``; ``(-1)^{k-1}`` for the Ising model."""
    zeta = np.asarray(zeta, dtype=complex)
    others = np.delete(zeta, slot, axis=-1)
    return np.prod(scattering_S(others - zeta[..., slot : slot + 1]), axis=-1)


def check_S_periodicity(family, zeta, slot: int, evaluator=None):
    """Normalized residual of ``F(z + 2 pi i e_slot) = prod_{j != slot} S(z_j - z_slot) F(z)``."""
    zeta = np.asarray(zeta, dtype=complex)
    if not 0 <= slot < zeta.shape[-1]:
        raise IndexError(f"slot {slot} out of range")
    shifted = zeta.copy()
    shifted[..., slot] += 2j * np.pi
    a = _evaluate(family, shifted, evaluator)
    b = _evaluate(family, zeta, evaluator)
    factor = periodicity_factor(zeta, slot)
    denom = np.maximum(np.abs(b), _floor(family, zeta, evaluator))
    return np.abs(a - factor * b) / np.maximum(denom, TINY)


# ------------------------------------------------------------------ residues


class ContourPrecheckError(ValueError):
    pass


class UnstableResidue(ArithmeticError):
    pass


@dataclass(frozen=True)
class ResidueProbe:
    """Contour around ``z_n = z_m + i pi`` with the remaining rapidities fixed.

    ``m < n`` are 1-based positions in the full tuple of length
    ``len(base) + 2``; ``base`` fills the other positions in order.
    """

    base: tuple
    m: int
    n: int
    anchor: complex
    radius: float = 0.1
    points: int = 64

    def __post_init__(self):
        k = len(self.base) + 2
        if not 1 <= self.m < self.n <= k:
            raise ValueError(f"need 1 <= m < n <= {k}, got m={self.m}, n={self.n}")
        if self.radius <= 0 or self.points < 4:
            raise ValueError("contour needs a positive radius and at least 4 points")
        object.__setattr__(self, "base", tuple(complex(b) for b in self.base))
        gap = self.pole_gap()
        if gap <= 2 * self.radius:
            raise ContourPrecheckError(
                f"another pole of the z_n-slice lies {gap:.3g} from the contour centre (radius {self.radius})"
            )

    @property
    def k(self) -> int:
        return len(self.base) + 2

    @property
    def center(self) -> complex:
        return self.anchor + 1j * math.pi

    def full_tuple(self, zn) -> np.ndarray:
        """Tuples of length ``k`` with ``z_n`` set to each entry of ``zn``."""
        zn = np.atleast_1d(np.asarray(zn, dtype=complex))
        out = np.empty(zn.shape + (self.k,), dtype=complex)
        rest = iter(self.base)
        for pos in range(1, self.k + 1):
            if pos == self.m:
                out[..., pos - 1] = self.anchor
            elif pos == self.n:
                out[..., pos - 1] = zn
            else:
                out[..., pos - 1] = next(rest)
        return out

    def base_tuple(self) -> np.ndarray:
        return np.array(self.base, dtype=complex)

    def pole_gap(self) -> float:
        """Distance from the centre to the nearest other point of ``z_a - z_n in i pi (2Z+1)``."""
        others = [self.anchor] + list(self.base)
        best = math.inf
        for a, za in enumerate(others):
            for l in range(-3, 3):
                pole = za + 1j * math.pi * (2 * l + 1)
                if a == 0 and l == 0:
                    continue
                best = min(best, abs(pole - self.center))
        return best

    def halved(self) -> "ResidueProbe":
        return ResidueProbe(self.base, self.m, self.n, self.anchor, self.radius / 2, self.points)

    def refined(self) -> "ResidueProbe":
        return ResidueProbe(self.base, self.m, self.n, self.anchor, self.radius, 2 * self.points)


def contour_residue(func, center: complex, radius: float, points: int = 64) -> complex:
    """``(1/2 pi i) \\oint func`` over the circle ``|z - center| = radius`` (trapezoidal rule)."""
    phi = 2 * np.pi * np.arange(points) / points
    u = radius * np.exp(1j * phi)
    vals = np.asarray(func(center + u), dtype=complex)
    return complex(np.mean(vals * u))


@dataclass
class ResidueEstimate:
    value: complex
    halved: complex
    refined: complex
    scale: float
    spread: float
    stable: bool


def numeric_residue(family, probe: ResidueProbe, rtol: float = 1e-8) -> ResidueEstimate:
    """Residue of ``F_k`` in ``z_n`` at ``z_m + i pi``, with radius-halving and point-doubling checks.

    ``stable`` is False if either variant differs from the base estimate by
    more than ``rtol`` relative to ``max(|value|, scale)``, where ``scale`` is
    ``radius`` times the largest term magnitude of ``F`` on the contour.
    """

    def f(zn):
        return eval_F(family, probe.full_tuple(zn))

    value = contour_residue(f, probe.center, probe.radius, probe.points)
    half = contour_residue(f, probe.center, probe.radius / 2, probe.points)
    fine = contour_residue(f, probe.center, probe.radius, 2 * probe.points)
    phi = 2 * np.pi * np.arange(probe.points) / probe.points
    ring = probe.full_tuple(probe.center + probe.radius * np.exp(1j * phi))
    scale = probe.radius * float(np.max(magnitude_scale(family, ring), initial=0.0))
    spread = max(abs(half - value), abs(fine - value))
    ref = max(abs(value), scale, TINY)
    return ResidueEstimate(value, half, fine, scale, spread, spread <= rtol * ref)


def rhs_factor(k: int) -> int:
    """``1 - prod_{p=1}^k S`` for S = -1, as an exact integer."""
    return 1 - (-1) ** k


def recursion_rhs(family, probe: ResidueProbe) -> complex:
    """``-(1/2 pi i) (-1)^{n-m+1} (1 - (-1)^k) F_{k-2}(z^)``."""
    factor = rhs_factor(probe.k)
    if factor == 0:
        return 0j
    sign = (-1) ** (probe.n - probe.m + 1)
    lower = complex(eval_F(family, probe.base_tuple()))
    return -sign * factor * lower / (2j * math.pi)


@dataclass
class RecursionReport:
    k: int
    m: int
    n: int
    residuals: list
    stable: list
    max_residual: float
    all_stable: bool
    rhs_factor: int
    records: list = field(default_factory=list)

    def passed(self, tol: float) -> bool:
        return self.all_stable and self.max_residual < tol


def check_recursion(family, k: int, m: int, n: int, samples, radius: float = 0.1,
                    points: int = 64, label: str = "") -> RecursionReport:
    """Compare contour residues with the recursion right-hand side at each sample.

    ``samples`` is an iterable of ``(base, anchor)``. The residual is
    ``|res - rhs| / |rhs|`` when the right-hand side is nonzero and
    ``|res| / scale`` otherwise (the local magnitude of ``F`` on the contour).
    """
    residuals, stable, records = [], [], []
    for idx, (base, anchor) in enumerate(samples):
        probe = ResidueProbe(tuple(base), m, n, anchor, radius, points)
        if probe.k != k:
            raise ValueError(f"sample {idx} has {probe.k} rapidities, expected {k}")
        est = numeric_residue(family, probe)
        rhs = recursion_rhs(family, probe)
        ref = abs(rhs) if rhs != 0 else max(est.scale, TINY)
        r = abs(est.value - rhs) / ref
        residuals.append(float(r))
        stable.append(bool(est.stable))
        records.append(check_record("recursion", label or family.label(), k, idx, float(r),
                                    "stable" if est.stable else "unstable"))
    return RecursionReport(k, m, n, residuals, stable, max(residuals, default=0.0), all(stable),
                           rhs_factor(k), records)


def recursion_samples(rng: np.random.Generator, k: int, count: int, strip: float = 1.0,
                      radius: float = 0.1):
    """Random ``(base, anchor)`` pairs whose probes pass the contour pre-check."""
    out = []
    while len(out) < count:
        z = random_tuples(rng, k - 1, 1, strip=strip)[0]
        anchor, base = z[0], tuple(z[1:])
        # the other poles must stay clear of the radius and its halving
        others = np.concatenate([[anchor], z[1:]])
        c = anchor + 1j * math.pi
        gaps = [abs(o + 1j * math.pi * (2 * l + 1) - c) for i, o in enumerate(others)
                for l in range(-3, 3) if not (i == 0 and l == 0)]
        if min(gaps, default=math.inf) > 4 * radius:
            out.append((base, anchor))
    return out


def check_record(check: str, family: str, k: int, sample: int, residual: float, verdict: str) -> dict:
    return {"check": check, "family": family, "k": int(k), "sample": int(sample),
            "residual": float(residual), "verdict": verdict}


# -------------------------------------------------------------- growth scans


class FitConditioningWarning(UserWarning):
    pass


@dataclass
class GrowthReport:
    direction: str
    parameter: np.ndarray
    log_abs: np.ndarray
    rate: float
    intercept: float
    tail_rate: float
    reference: dict

    def as_dict(self) -> dict:
        d = asdict(self)
        d["parameter"] = self.parameter.tolist()
        d["log_abs"] = self.log_abs.tolist()
        return d


def _fit(x, y):
    ok = np.isfinite(y)
    x, y = x[ok], y[ok]
    if len(x) < 3 or np.ptp(x) == 0:
        warnings.warn("growth fit has fewer than 3 usable samples", FitConditioningWarning, stacklevel=3)
        return float("nan"), float("nan"), float("nan")
    rate, icpt = np.polyfit(x, y, 1)
    half = len(x) // 2
    tail = np.polyfit(x[half:], y[half:], 1)[0] if len(x) - half >= 2 else rate
    return float(rate), float(icpt), float(tail)


def growth_scan(family, base, direction: str = "real", lam: float = 0.0, span=(0.0, 6.0),
                samples: int = 61, slot: int = 0) -> GrowthReport:
    """Fit ``log|F|`` along a path through ``base``.

    ``direction="real"`` moves rapidity ``slot`` along the real axis,
    ``z_slot = base_slot + t``. ``direction="imaginary"`` does the same with
    an added imaginary offset ``lam`` and fits against ``|Im p_total|``
    (Euclidean norm), the variable of the Paley-Wiener bound; the reference
    value is the support radius of the test function. No pass/fail
    contract is attached: the bounds are not known in closed form.
    """
    base = np.asarray(base, dtype=complex)
    t = np.linspace(span[0], span[1], samples)
    z = np.repeat(base[None, :], samples, axis=0)
    z[:, slot] = base[slot] + t + (1j * lam if direction == "imaginary" else 0)
    with np.errstate(divide="ignore"):
        logf = np.log(np.abs(eval_F(family, z)))
    ref = {}
    g = getattr(family, "g", None)
    if g is not None:
        ref["support_radius"] = float(g.radius + math.hypot(g.center.t, g.center.x1))
    if hasattr(family, "omega"):
        ref["omega"] = family.omega.label()
    if direction == "imaginary":
        p = momentum(z, getattr(family, "mu", 1.0)).sum(axis=-2)
        x = np.hypot(p[:, 0].imag, p[:, 1].imag)
    elif direction == "real":
        x = t
    else:
        raise ValueError(f"unknown direction {direction!r}")
    rate, icpt, tail = _fit(x, logf)
    return GrowthReport(direction, x, logf, rate, icpt, tail, ref)


def paley_wiener_scan(g, lam: float = 1.0, span=(0.0, 6.0), samples: int = 61, mu: float = 1.0) -> GrowthReport:
    """Growth of ``log|g~(p(theta + i lam))|`` against ``|Im p|``; bounded by ``r*mu`` asymptotically."""
    theta = np.linspace(span[0], span[1], samples) + 1j * lam
    p = momentum(theta, mu)
    x = np.hypot(p[:, 0].imag, p[:, 1].imag)
    with np.errstate(divide="ignore"):
        logf = np.log(np.abs(fourier_transform(g, p)))
    rate, icpt, tail = _fit(x, logf)
    ref = {"support_radius": float(g.radius + math.hypot(g.center.t, g.center.x1))}
    return GrowthReport("imaginary", x, logf, rate, icpt, tail, ref)


__all__ = [
    "random_tuples",
    "check_S_symmetry",
    "check_S_periodicity",
    "periodicity_factor",
    "ResidueProbe",
    "ContourPrecheckError",
    "UnstableResidue",
    "contour_residue",
    "numeric_residue",
    "ResidueEstimate",
    "rhs_factor",
    "recursion_rhs",
    "check_recursion",
    "recursion_samples",
    "RecursionReport",
    "growth_scan",
    "paley_wiener_scan",
    "GrowthReport",
    "check_record",
]
