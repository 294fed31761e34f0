"""Commutator harness for omega-locality, convention arbitration and the density probe.

An observable ``A`` is omega-local in ``O_{x,y} = W_x & W'_y`` when it
commutes with ``phi(f)`` for ``f`` supported in the left wedge ``W'_x`` and
with ``phi'(g)`` for ``g`` supported in the right wedge ``W_y``. On the grid
the commutators are small rather than zero; the verdict combines an absolute
threshold on the relative commutator norms with a contrast against control
bumps overlapping the double cone.

Invariance of the field domains under the observable's exponentiated
smeared fields has no finite-dimensional counterpart and is not checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DEFAULT_CONVENTIONS,
    Conventions,
    DoubleCone,
    OmegaIndicatrix,
    Side,
    Wedge,
    ball_inside,
)
from .fock import (
    FockSpace,
    FockVector,
    RapidityGrid,
    TruncatedFockOperator,
    TruncationError,
    assemble_observable,
)
from .fock import field as smeared_field
from .fock import spectral_norm
from .formfactors import BoundaryPrescription, BoundaryVariant
from .testfunctions import BumpFunction, domega_membership


class GeometryError(ValueError):
    pass


class NoPassingConvention(RuntimeError):
    def __init__(self, report):
        super().__init__("no candidate convention passes the locality harness")
        self.report = report


class MultiplePassing(RuntimeError):
    def __init__(self, report):
        super().__init__("more than one candidate convention passes the locality harness")
        self.report = report


def commutator_norm(A: TruncatedFockOperator, B: TruncatedFockOperator, k_cap: int,
                    relative: bool = False, **power_kw) -> float:
    """``||Q_k (AB - BA) Q_k||``; with ``relative`` divided by ``||Q_k A Q_k|| ||Q_k B Q_k||``.

    Exact on the truncation only if the Fock space reaches
    ``k_cap + min(span A, span B)`` particles, where the span is the largest
    particle-number change of an operator; otherwise raises
    :class:`TruncationError`.
    """
    need = k_cap + min(A.particle_span, B.particle_span)
    if A.space.K < need:
        raise TruncationError(f"commutator on sectors <= {k_cap} needs cap {need}, have {A.space.K}")
    C = (A @ B - B @ A).to_sparse(k_cap)
    val = spectral_norm(C, **power_kw)
    if not relative:
        return val
    den = spectral_norm(A.to_sparse(k_cap), **power_kw) * spectral_norm(B.to_sparse(k_cap), **power_kw)
    return val / den if den > 0 else 0.0


def left_complement(region: DoubleCone) -> Wedge:
    """``W'_x``: the left wedge with edge at the double cone's left tip."""
    return Wedge(region.left_edge, Side.LEFT)


def right_complement(region: DoubleCone) -> Wedge:
    """``W_y``: the right wedge with edge at the double cone's right tip."""
    return Wedge(region.right_edge, Side.RIGHT)


def overlaps(region: DoubleCone, b: BumpFunction) -> bool:
    """True if the support ball of ``b`` meets the double cone."""
    return bool(region.depth(b.center.t, b.center.x1) > -math.sqrt(2) * b.radius)


@dataclass
class LocalityVerdict:
    observable: str
    region: DoubleCone
    left_norms: list
    right_norms: list
    control_norms: list
    contrast: float
    passed: bool
    status: str  # "pass" | "fail" | "inconclusive"
    separations: list = field(default_factory=list)  # (distance, norm, is_control) rows

    @property
    def battery_max(self) -> float:
        return max(self.left_norms + self.right_norms, default=0.0)

    def as_dict(self) -> dict:
        return {
            "observable": self.observable,
            "region": [[self.region.left_edge.t, self.region.left_edge.x1],
                       [self.region.right_edge.t, self.region.right_edge.x1]],
            "left_norms": self.left_norms,
            "right_norms": self.right_norms,
            "control_norms": self.control_norms,
            "contrast": self.contrast,
            "pass": self.passed,
            "status": self.status,
        }


@dataclass(frozen=True)
class HarnessConfig:
    N: int = 24
    theta_max: float = 3.0
    k_cap: int = 3
    mu: float = 1.0
    tau: float = 1e-3
    rho_min: float = 10.0
    margin: float = 0.1
    control_floor: float = 1e-8
    check_domega: bool = True

    @property
    def grid(self) -> RapidityGrid:
        return RapidityGrid(self.N, self.theta_max)


def _separation(region: DoubleCone, b: BumpFunction) -> float:
    # light-cone depth of the bump centre outside the double cone
    return float(-region.depth(b.center.t, b.center.x1))


def check_battery(region: DoubleCone, left, right, omega: OmegaIndicatrix | None,
                  margin: float = 0.1, check_domega: bool = True, mu: float = 1.0):
    """Geometric and D^omega preconditions for the two batteries."""
    if not left and not right:
        raise GeometryError("empty battery")
    for wedge, batt, name in ((left_complement(region), left, "left"), (right_complement(region), right, "right")):
        for b in batt:
            if not ball_inside(wedge, b.center, b.radius, margin):
                raise GeometryError(f"{name} battery bump {b} is not inside {wedge} with margin {margin}")
            if check_domega and omega is not None:
                rep = domega_membership(b, omega, mu=mu)
                if not rep.passed:
                    raise GeometryError(f"{name} battery bump {b} fails the D^omega scan: {rep.verdict} {rep.detail}")


def locality_verdict(A: TruncatedFockOperator, region: DoubleCone, left_battery, right_battery,
                     controls, omega: OmegaIndicatrix | None, cfg: HarnessConfig = HarnessConfig(),
                     conv: Conventions = DEFAULT_CONVENTIONS, label: str = "") -> LocalityVerdict:
    """Relative commutators of ``A`` with ``phi(f)`` (left battery) and ``phi'(g)`` (right battery).

    Controls overlap the double cone and are paired with both fields; their
    smallest relative commutator over the largest battery value is the
    contrast. Pass iff every battery value is below ``tau`` and the contrast
    exceeds ``rho_min``. If the controls themselves are below
    ``control_floor`` (for instance ``A`` a multiple of the identity) the
    status is ``inconclusive``.
    """
    check_battery(region, left_battery, right_battery, omega, cfg.margin, cfg.check_domega, cfg.mu)
    for c in controls:
        if not overlaps(region, c):
            raise GeometryError(f"control bump {c} does not overlap the double cone")
    space, grid = A.space, cfg.grid
    if grid.N != space.N:
        raise ValueError("harness grid and operator disagree on the mode count")

    def rel(b, kind):
        F = smeared_field(b, kind, space, grid, cfg.mu, conv)
        return commutator_norm(A, F, cfg.k_cap, relative=True)

    left = [rel(b, "phi") for b in left_battery]
    right = [rel(b, "phi_prime") for b in right_battery]
    ctrl = [rel(c, kind) for c in controls for kind in ("phi", "phi_prime")]
    rows = [(_separation(region, b), v, False) for b, v in zip(left_battery, left)]
    rows += [(_separation(region, b), v, False) for b, v in zip(right_battery, right)]
    rows += [(_separation(region, c), v, True) for c, v in zip([c for c in controls for _ in range(2)], ctrl)]
    bmax = max(left + right, default=0.0)
    cmin = min(ctrl, default=0.0)
    contrast = cmin / bmax if bmax > 0 else math.inf
    if not ctrl or cmin < cfg.control_floor:
        status, ok = "inconclusive", False
    else:
        ok = bmax < cfg.tau and contrast > cfg.rho_min
        status = "pass" if ok else "fail"
    return LocalityVerdict(label or A.meta.get("family", "A"), region, left, right, ctrl,
                           float(contrast), ok, status, rows)


# ------------------------------------------------------------------ arbiter


@dataclass(frozen=True)
class ConventionCandidate:
    """A choice of boundary-value variant and sign conventions, applied to the
    observable and the fields alike."""

    label: str
    presc: BoundaryPrescription = BoundaryPrescription()
    conv: Conventions = DEFAULT_CONVENTIONS


def boundary_candidates(base: BoundaryPrescription = BoundaryPrescription()) -> list[ConventionCandidate]:
    out = []
    for v in BoundaryVariant:
        out.append(ConventionCandidate(v.value, BoundaryPrescription(v, base.eps0, base.ladder, base.tol,
                                                                    base.coincidence, base.pv_points)))
    return out


@dataclass
class ArbiterReport:
    selected: str | None
    verdicts: dict

    def as_dict(self) -> dict:
        return {"selected": self.selected, "verdicts": {k: v.as_dict() for k, v in self.verdicts.items()}}


def convention_arbiter(candidates, family, region: DoubleCone, left_battery, right_battery, controls,
                       omega: OmegaIndicatrix | None, cfg: HarnessConfig = HarnessConfig(),
                       raise_on_ambiguity: bool = True) -> ArbiterReport:
    """Run the harness once per candidate and select the unique passing one.

    Raises :class:`NoPassingConvention` or :class:`MultiplePassing` (carrying
    the full report) unless ``raise_on_ambiguity`` is False.
    """
    candidates = list(candidates)
    if len(candidates) < 2:
        raise ValueError("the arbiter needs at least two candidates")
    space = FockSpace(cfg.N, cfg.k_cap + 1)
    verdicts = {}
    for cand in candidates:
        A = assemble_observable(family, space, cfg.grid, presc=cand.presc, conv=cand.conv)
        verdicts[cand.label] = locality_verdict(A, region, left_battery, right_battery, controls, omega,
                                                cfg, conv=cand.conv, label=cand.label)
    passing = [k for k, v in verdicts.items() if v.passed]
    report = ArbiterReport(passing[0] if len(passing) == 1 else None, verdicts)
    if raise_on_ambiguity and not passing:
        raise NoPassingConvention(report)
    if raise_on_ambiguity and len(passing) > 1:
        raise MultiplePassing(report)
    return report


# ------------------------------------------------------------ Reeh-Schlieder


@dataclass
class RankReport:
    rank: int
    count: int
    singular_values: list
    sector_ranks: dict
    reachable_dim: int
    parities: list

    def as_dict(self) -> dict:
        return {"rank": self.rank, "count": self.count, "sector_ranks": self.sector_ranks,
                "reachable_dim": self.reachable_dim, "parities": self.parities,
                "singular_values": self.singular_values}


def reeh_schlieder_rank(families, grid: RapidityGrid, K: int, r: float, threshold: float = 1e-12,
                        presc: BoundaryPrescription = BoundaryPrescription()) -> RankReport:
    """Numerical rank of the Gram matrix of ``{A_i Omega}`` in the truncated Fock space.

    Every family's test function must lie in the double cone of radius ``r``.
    Each vector is normalized before the Gram matrix is formed; the rank
    counts Gram eigenvalues above ``threshold`` times the largest.
    """
    region = DoubleCone.standard(r)
    for fam in families:
        g = fam.g
        if not ball_inside(region, g.center, g.radius):
            raise GeometryError(f"{fam.label()} is not localized in the double cone of radius {r}")
    space = FockSpace(grid.N, K)
    vac = FockVector.vacuum(grid, space)
    cols, parities = [], set()
    for fam in families:
        A = assemble_observable(fam, space, grid, presc=presc)
        vec = A.apply(vac).orthonormal()
        v = np.concatenate([vec.get(k, np.zeros(space.dim(k))) for k in range(space.K + 1)])
        nv = np.linalg.norm(v)
        if nv > 0:
            cols.append(v / nv)
        parities.update(k % 2 for k in range(space.K + 1) if np.any(vec.get(k, 0) != 0))
    if not cols:
        return RankReport(0, len(families), [], {}, 0, [])
    V = np.array(cols).T
    G = V.conj().T @ V
    ev = np.sort(np.linalg.eigvalsh(G))[::-1]
    rank = int(np.sum(ev > threshold * ev[0]))
    offs = space.offsets()
    sector_ranks = {}
    for k in range(space.K + 1):
        blk = V[offs[k]:offs[k + 1]]
        s = np.linalg.svd(blk, compute_uv=False) if blk.size else np.zeros(0)
        sector_ranks[k] = int(np.sum(s**2 > threshold * ev[0])) if s.size else 0
    reachable = sum(space.dim(k) for k in range(space.K + 1) if k % 2 in parities)
    return RankReport(rank, len(families), [float(x) for x in ev], sector_ranks, reachable, sorted(parities))
