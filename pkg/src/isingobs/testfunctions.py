"""Bump test functions on 1+1 Minkowski space and their Fourier data.

The bump ``g(x) = A exp(-1/(1-s^2))``, ``s = |x-c|/rho``, is radial in the
Euclidean sense, so its Fourier transform reduces exactly to a Hankel
transform:

    g~(p) = e^{i p.c} 2 pi A rho^2 int_0^1 s b(s) J0(rho s kappa) ds,
    kappa^2 = p0^2 + p1^2,

which is entire in ``p`` because ``J0`` is even. The radial integral is done
with Gauss-Legendre, the order growing with ``|kappa|`` to follow the Bessel
oscillations.
"""

from __future__ import annotations

import functools
import math
import threading
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline
from scipy.special import j0, jv, roots_legendre

from .core import (
    DEFAULT_CONVENTIONS,
    Conventions,
    OmegaIndicatrix,
    Point2D,
    momentum,
    omega_eval,
)


class QuadratureOrderWarning(UserWarning):
    pass


def bump_profile(s):
    """``exp(-1/(1-s^2))`` for ``|s| < 1``, zero elsewhere."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


@dataclass(frozen=True)
class BumpFunction:
    center: Point2D
    radius: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("bump radius must be positive")

    def __call__(self, t, x1):
        return bump_eval(self, t, x1)

    def translated(self, a: Point2D) -> "BumpFunction":
        return BumpFunction(self.center + a, self.radius, self.amplitude)

    def reflected(self) -> "BumpFunction":
        """``x -> g(-x)``."""
        return BumpFunction(-self.center, self.radius, self.amplitude)

    def scaled(self, c: float) -> "BumpFunction":
        return BumpFunction(self.center, self.radius, c * self.amplitude)


def bump_eval(b: BumpFunction, t, x1=None):
    if x1 is None:  # accept a Point2D
        t, x1 = t.t, t.x1
    s = np.hypot(np.asarray(t, float) - b.center.t, np.asarray(x1, float) - b.center.x1) / b.radius
    out = b.amplitude * bump_profile(s)
    return out if out.ndim else float(out)


MAX_RADIAL_ORDER = 2**14


@functools.lru_cache(maxsize=64)
def _radial_rule(order: int):
    x, w = roots_legendre(order)
    s = 0.5 * (x + 1.0)
    ws = 0.5 * w * s * bump_profile(s)
    ws.flags.writeable = False
    s.flags.writeable = False
    return s, ws


def _orders_for(absk, base: int):
    # J0(kappa s) has ~kappa/pi half-periods on [0, 1]; round up to a power of 2
    need = base + np.ceil(1.2 * absk)
    return np.minimum(np.maximum(base, 2 ** np.ceil(np.log2(need))), MAX_RADIAL_ORDER).astype(int)


def radial_profile(kappa, order: int = 128, adaptive: bool = True):
    """``2 pi int_0^1 s b(s) J0(kappa s) ds`` for real or complex ``kappa``.

    With ``adaptive`` the Gauss-Legendre order is raised above ``order`` for
    large ``|kappa|`` (up to ``MAX_RADIAL_ORDER``); otherwise exactly
    ``order`` nodes are used. The absolute roundoff floor is about 1e-16
    times ``radial_profile(0)``.
    """
    kappa = np.asarray(kappa)
    flat = kappa.reshape(-1)
    out = np.empty(flat.shape, dtype=complex)
    if flat.size == 0:
        return out.reshape(kappa.shape)
    real = np.isrealobj(flat) or bool(np.all(flat.imag == 0))
    orders = _orders_for(np.abs(flat), order) if adaptive else np.full(flat.shape, order)
    if adaptive and np.any(1.2 * np.abs(flat) > MAX_RADIAL_ORDER):
        warnings.warn("radial order capped; transform not resolved at the largest |kappa|",
                      QuadratureOrderWarning, stacklevel=2)
    for q in np.unique(orders):
        where = np.flatnonzero(orders == q)
        s, ws = _radial_rule(int(q))
        step = max(1, 2**22 // int(q))  # bound the size of the Bessel table
        for lo in range(0, len(where), step):
            sel = where[lo : lo + step]
            arg = np.multiply.outer(flat[sel], s)
            bes = j0(arg.real) if real else jv(0, arg)
            out[sel] = 2 * np.pi * (bes @ ws)
    return out.reshape(kappa.shape)


class FourierCache:
    """Quadrature data and memoized transforms for one bump shape.

    ``lookup`` memoizes scalar evaluations keyed by the momentum vector;
    ``freeze`` turns the memo read-only. ``table`` is a cubic-spline tabulation
    of the radial profile for real ``kappa``, used for bulk real-momentum work.
    Inserting uses ``dict.setdefault``, which is atomic in CPython.
    """

    def __init__(self, order: int = 128, table_kmax: float = 600.0, table_step: float = 0.01):
        self.order = order
        self.nodes, self.weights = _radial_rule(order)
        self._memo: dict = {}
        self._frozen = False
        self._lock = threading.Lock()
        self._table = None
        self.table_kmax = table_kmax
        self.table_step = table_step

    def freeze(self):
        self._frozen = True

    @property
    def frozen(self) -> bool:
        return self._frozen

    def lookup(self, b: BumpFunction, p, conv: Conventions = DEFAULT_CONVENTIONS) -> complex:
        key = (b, complex(p[0]), complex(p[1]), conv)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        val = complex(fourier_transform(b, np.asarray(p), conv=conv, order=self.order))
        if self._frozen:
            return val
        return self._memo.setdefault(key, val)

    def __len__(self):
        return len(self._memo)

    @property
    def table(self) -> CubicSpline:
        with self._lock:
            if self._table is None:
                k = np.arange(0.0, self.table_kmax + self.table_step, self.table_step)
                self._table = CubicSpline(k, radial_profile(k, self.order).real)
        return self._table

    def profile_real(self, kappa):
        """Tabulated radial profile for real ``kappa >= 0``; falls back to quadrature past the table."""
        kappa = np.asarray(kappa, dtype=float)
        out = np.empty_like(kappa)
        inside = kappa <= self.table_kmax
        out[inside] = self.table(kappa[inside])
        if np.any(~inside):
            out[~inside] = radial_profile(kappa[~inside], self.order).real
        return out


_DEFAULT_CACHE: FourierCache | None = None


def default_cache() -> FourierCache:
    global _DEFAULT_CACHE
    if _DEFAULT_CACHE is None:
        _DEFAULT_CACHE = FourierCache()
    return _DEFAULT_CACHE


def fourier_transform(
    b: BumpFunction,
    p,
    conv: Conventions = DEFAULT_CONVENTIONS,
    order: int = 128,
    check: bool = False,
    fast: bool = False,
):
    """``g~(p) = int d^2x g(x) exp(i s p.x)`` for ``p`` with last axis ``(p0, p1)``.

    ``p`` may be complex. With ``check=True`` the result is recomputed at
    double radial order and a :class:`QuadratureOrderWarning` is issued if the
    two differ by more than 1e-10 relative. ``fast=True`` uses the tabulated
    profile and is only valid for real momenta.
    """
    p = np.asarray(p)
    p0, p1 = p[..., 0], p[..., 1]
    kappa = np.sqrt(p0 * p0 + p1 * p1 + 0j)
    if fast:
        if np.iscomplexobj(p) and np.any(p.imag != 0):
            raise ValueError("fast transform needs real momenta")
        prof = default_cache().profile_real(b.radius * kappa.real)
    else:
        prof = radial_profile(b.radius * kappa, order)
    phase = np.exp(1j * conv.phase_sign * (p0 * b.center.t - p1 * b.center.x1))
    val = b.amplitude * b.radius**2 * prof * phase
    if check:
        ref = fourier_transform(b, p, conv, order=2 * order)
        scale = max(np.max(np.abs(ref)), 1e-300)
        if np.max(np.abs(val - ref)) > 1e-10 * scale:
            warnings.warn(
                f"radial order {order} not converged for |p| up to {np.max(np.abs(kappa)):.3g}",
                QuadratureOrderWarning,
                stacklevel=2,
            )
    return val


def frequency_part(
    b: BumpFunction,
    theta,
    sign: int = 1,
    mu: float = 1.0,
    conv: Conventions = DEFAULT_CONVENTIONS,
    order: int = 128,
):
    """``f^{+-}(theta) = (1/2pi) int d^2x f(x) exp(+-i p(theta).x) = g~(+-p(theta))/2pi``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    p = sign * momentum(theta, mu)
    return fourier_transform(b, p, conv=conv, order=order) / (2 * np.pi)


def fourier_transform_cartesian(b: BumpFunction, p, order: int = 200, conv: Conventions = DEFAULT_CONVENTIONS):
    """Tensor-product Gauss-Legendre over the support square.

    Slow and only super-algebraically convergent (the bump is not analytic on
    its support circle); kept as an independent cross-check of the Hankel path.
    """
    x, w = leggauss(order)
    t = b.center.t + b.radius * x
    x1 = b.center.x1 + b.radius * x
    T, X = np.meshgrid(t, x1, indexing="ij")
    W = np.outer(w, w) * b.radius**2
    G = bump_eval(b, T, X) * W
    p = np.atleast_2d(np.asarray(p))
    out = np.empty(p.shape[0], dtype=complex)
    for i, (p0, p1) in enumerate(p):
        out[i] = np.sum(G * np.exp(1j * conv.phase_sign * (p0 * T - p1 * X)))
    return out


@dataclass
class DomegaReport:
    verdict: str  # "pass" | "fail" | "inconclusive"
    sup_value: float
    l2_value: float
    boundary_ratio: float
    sign: int
    omega: str
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def domega_membership(
    b: BumpFunction,
    omega: OmegaIndicatrix,
    theta_max: float = 8.0,
    grid_size: int = 801,
    mu: float = 1.0,
    conv: Conventions = DEFAULT_CONVENTIONS,
    decay_ratio: float = 1e-2,
    floor: float = 1e-15,
) -> DomegaReport:
    """Scan ``theta -> exp(omega(cosh theta)) |f^{+-}(theta)|`` on ``[-theta_max, theta_max]``.

    The transform is only resolved down to about ``floor`` times its
    largest value; below that the quadrature returns roundoff, which any
    growing weight would amplify. The scan is therefore cut where ``|f|``
    first drops below the floor on each side. Pass: the weighted envelope
    over the outermost resolved points is below ``decay_ratio`` times the
    supremum. Fail: the weighted function overflows, or it ends at its
    supremum, still rising, more than ``1/decay_ratio`` above its value at
    ``theta = 0``.
    Anything else is inconclusive. Both frequency parts are scanned; the
    worse verdict wins.
    """
    theta = np.linspace(-theta_max, theta_max, grid_size)
    weight_log = omega_eval(omega, np.cosh(theta))
    mid = grid_size // 2
    reports = []
    for sign in (1, -1):
        fpm = np.abs(frequency_part(b, theta, sign, mu, conv))
        resolved = fpm >= floor * fpm.max()
        # first unresolved index outward from the centre on each side
        hi = mid + int(np.argmin(resolved[mid:])) if not resolved[mid:].all() else grid_size
        lo = mid - int(np.argmin(resolved[: mid + 1][::-1])) + 1 if not resolved[: mid + 1].all() else 0
        th, lw = theta[lo:hi], weight_log[lo:hi]
        with np.errstate(over="ignore", divide="ignore"):
            logw = lw + np.log(np.maximum(fpm[lo:hi], 1e-320))
            weighted = np.exp(np.minimum(logw, 700.0))
        finite = np.max(logw) < 700.0
        sup = float(np.max(weighted))
        with np.errstate(over="ignore"):
            l2 = float(np.sqrt(np.trapezoid(weighted**2, th)))
        edge = max(1, len(th) // 40)
        env_edge = float(max(weighted[:edge].max(), weighted[-edge:].max()))
        ratio = env_edge / sup if sup > 0 else 0.0
        rising = weighted[-1] >= weighted[-edge - 1] or weighted[0] >= weighted[edge]
        if not finite:
            verdict, detail = "fail", "weighted frequency part overflows"
        elif ratio < decay_ratio:
            verdict, detail = "pass", ""
        elif rising and env_edge >= 0.999 * sup and sup > weighted[mid - lo] / decay_ratio:
            verdict, detail = "fail", "weighted frequency part grows through the scan boundary"
        else:
            verdict, detail = "inconclusive", "no clear decay before the resolution floor"
        reports.append(DomegaReport(verdict, sup, l2, float(ratio), sign, omega.label(), detail))
    order = {"pass": 0, "inconclusive": 1, "fail": 2}
    return max(reports, key=lambda r: order[r.verdict])
