"""Minkowski kinematics in 1+1 dimensions, wedges, double cones and weights.

Lengths are measured in units of 1/mu, momenta in units of mu. The metric
has signature (+, -), so ``p.x = p0*t - p1*x1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Point2D:
    t: float
    x1: float

    def __post_init__(self):
        if not (math.isfinite(self.t) and math.isfinite(self.x1)):
            raise ValueError(f"non-finite point {self!r}")

    def __add__(self, other: "Point2D") -> "Point2D":
        return Point2D(self.t + other.t, self.x1 + other.x1)

    def __neg__(self) -> "Point2D":
        return Point2D(-self.t, -self.x1)


class Side(str, Enum):
    RIGHT = "right"
    LEFT = "left"


@dataclass(frozen=True)
class Wedge:
    """Open wedge with edge at ``edge``.

    The right wedge is ``x1 - e.x1 > |t - e.t|``, the left wedge its
    causal complement ``e.x1 - x1 > |t - e.t|``.
    """

    edge: Point2D
    side: Side = Side.RIGHT

    def depth(self, t, x1):
        """Signed light-cone depth of points inside the wedge (>0 inside)."""
        dt = np.abs(np.asarray(t, dtype=float) - self.edge.t)
        dx = np.asarray(x1, dtype=float) - self.edge.x1
        if self.side is Side.RIGHT:
            return dx - dt
        return -dx - dt

    def contains(self, p: Point2D) -> bool:
        return bool(self.depth(p.t, p.x1) > 0)


class MalformedRegionError(ValueError):
    pass


@dataclass(frozen=True)
class DoubleCone:
    """``O_{x,y} = W_x  intersect  W'_y`` with ``x`` to the left of ``y``."""

    left_edge: Point2D
    right_edge: Point2D

    def __post_init__(self):
        # y must lie in the open right wedge of x, otherwise the cone is empty
        if not Wedge(self.left_edge, Side.RIGHT).contains(self.right_edge):
            raise MalformedRegionError(
                f"left edge {self.left_edge} is not to the left of {self.right_edge}"
            )

    @classmethod
    def standard(cls, r: float, center: Point2D = Point2D(0.0, 0.0)) -> "DoubleCone":
        if r <= 0:
            raise MalformedRegionError("radius must be positive")
        return cls(center + Point2D(0.0, -r), center + Point2D(0.0, r))

    @property
    def right_wedge(self) -> Wedge:
        return Wedge(self.left_edge, Side.RIGHT)

    @property
    def left_wedge(self) -> Wedge:
        return Wedge(self.right_edge, Side.LEFT)

    def depth(self, t, x1):
        return np.minimum(self.right_wedge.depth(t, x1), self.left_wedge.depth(t, x1))

    def contains(self, p: Point2D) -> bool:
        return bool(self.depth(p.t, p.x1) > 0)


Region = Union[Wedge, DoubleCone]


def region_contains(region: Region, p: Point2D) -> bool:
    return region.contains(p)


def ball_inside(region: Region, center: Point2D, radius: float, margin: float = 0.0) -> bool:
    """True if the closed Euclidean ball lies inside ``region`` with ``margin`` to spare.

    The wedge boundaries are light rays, whose Euclidean distance from a point
    is ``depth/sqrt(2)``; so the ball fits iff ``depth > sqrt(2)*(radius+margin)``.
    """
    return bool(region.depth(center.t, center.x1) > SQRT2 * (radius + margin))


def ball_extreme_points(center: Point2D, radius: float, count: int = 64) -> list[Point2D]:
    phi = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
    # the four light-like directions are where wedge boundaries touch first
    phi = np.concatenate([phi, np.pi / 4 + np.pi / 2 * np.arange(4)])
    return [Point2D(center.t + radius * math.cos(a), center.x1 + radius * math.sin(a)) for a in phi]


# ---------------------------------------------------------------- kinematics


@dataclass(frozen=True)
class Conventions:
    """Sign conventions the construction leaves open.

    ``metric_sign`` multiplies the Minkowski product ``p0*t - p1*x1``;
    ``ft_sign`` is the sign in the exponent of the Fourier transform.
    Both default to +1; flipping either mirrors space-time.
    """

    metric_sign: int = 1
    ft_sign: int = 1

    def __post_init__(self):
        if self.metric_sign not in (1, -1) or self.ft_sign not in (1, -1):
            raise ValueError("convention signs must be +1 or -1")

    @property
    def phase_sign(self) -> int:
        return self.metric_sign * self.ft_sign


DEFAULT_CONVENTIONS = Conventions()


def minkowski_dot(p, x, conv: Conventions = DEFAULT_CONVENTIONS):
    """``p.x`` for arrays whose last axis holds ``(p0, p1)`` and ``(t, x1)``."""
    p = np.asarray(p)
    x = np.asarray(x)
    return conv.metric_sign * (p[..., 0] * x[..., 0] - p[..., 1] * x[..., 1])


def momentum(theta, mu: float = 1.0) -> np.ndarray:
    """On-shell momentum ``mu*(cosh theta, sinh theta)``; last axis is (p0, p1)."""
    if mu <= 0:
        raise ValueError("mass must be positive")
    theta = np.asarray(theta)
    return mu * np.stack([np.cosh(theta), np.sinh(theta)], axis=-1)


def total_momentum(zeta, mu: float = 1.0) -> np.ndarray:
    """Sum of on-shell momenta over the last axis of ``zeta``.

    An empty tuple gives the zero vector.
    """
    zeta = np.asarray(zeta)
    if zeta.shape[-1] == 0:
        return np.zeros(zeta.shape[:-1] + (2,), dtype=np.result_type(zeta.dtype, float))
    return momentum(zeta, mu).sum(axis=-2)


def mass_shell_defect(theta, mu: float = 1.0):
    """Deviation of ``p0^2 - p1^2`` from ``mu^2``, scaled by ``|p0|^2 + |p1|^2``.

    For large ``|Re theta|`` the difference cancels catastrophically, so the
    defect is measured against the size of the terms being subtracted.
    """
    p = momentum(theta, mu)
    p0, p1 = p[..., 0], p[..., 1]
    scale = np.abs(p0) ** 2 + np.abs(p1) ** 2
    return np.abs(p0 * p0 - p1 * p1 - mu**2) / scale


# ----------------------------------------------------------------- S and omega


class ScatteringKind(str, Enum):
    ISING = "ising"


@dataclass(frozen=True)
class ScatteringFunction:
    kind: ScatteringKind = ScatteringKind.ISING

    def __call__(self, theta):
        theta = np.asarray(theta)
        return np.full(theta.shape, -1.0 + 0j)


ISING = ScatteringFunction()


def scattering_S(theta):
    return ISING(theta)


class OmegaKind(str, Enum):
    LOG = "log"
    POWER = "power"


@dataclass(frozen=True)
class OmegaIndicatrix:
    """Weight ``omega: [0, inf) -> [0, inf)``.

    ``LOG``: ``ell*log(1+p)`` with ``ell > 0``; ``POWER``: ``p**alpha`` with
    ``0 < alpha < 1``.
    """

    kind: OmegaKind
    param: float

    def __post_init__(self):
        if self.kind is OmegaKind.LOG and not self.param > 0:
            raise ValueError("log weight needs ell > 0")
        if self.kind is OmegaKind.POWER and not 0 < self.param < 1:
            raise ValueError("power weight needs 0 < alpha < 1")

    @classmethod
    def log(cls, ell: float) -> "OmegaIndicatrix":
        return cls(OmegaKind.LOG, float(ell))

    @classmethod
    def power(cls, alpha: float) -> "OmegaIndicatrix":
        return cls(OmegaKind.POWER, float(alpha))

    def __call__(self, p):
        return omega_eval(self, p)

    def label(self) -> str:
        return f"{self.kind.value}({self.param:g})"


def omega_eval(omega: OmegaIndicatrix, p):
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ValueError("omega is only defined for p >= 0")
    if omega.kind is OmegaKind.LOG:
        out = omega.param * np.log1p(p)
    else:
        out = p**omega.param
    return out if out.ndim else float(out)
