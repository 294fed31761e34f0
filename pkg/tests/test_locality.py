import numpy as np
import pytest

from conftest import even_family
from isingobs.core import Conventions, DoubleCone, Point2D
from isingobs.fock import FockSpace, RapidityGrid, TruncationError, assemble_observable, creator, field, identity
from isingobs.formfactors import EvenTerminating, OddTower
from isingobs.laurent import PowerSumTower, SymmetricLaurentPolynomial
from isingobs.locality import (
    ConventionCandidate,
    GeometryError,
    HarnessConfig,
    MultiplePassing,
    NoPassingConvention,
    boundary_candidates,
    check_battery,
    commutator_norm,
    convention_arbiter,
    left_complement,
    locality_verdict,
    overlaps,
    reeh_schlieder_rank,
    right_complement,
)
from isingobs.testfunctions import BumpFunction

REGION = DoubleCone.standard(0.5)
LEFT = [BumpFunction(Point2D(0.0, -1.5), 0.4)]
RIGHT = [BumpFunction(Point2D(0.0, 1.5), 0.4)]
CONTROL = [BumpFunction(Point2D(0.0, 0.0), 0.4)]
SMALL = HarnessConfig(N=6, theta_max=3.0, k_cap=2, check_domega=False)


@pytest.fixture
def small_space():
    return FockSpace(SMALL.N, SMALL.k_cap + 1)


def test_complement_wedges():
    assert left_complement(REGION).contains(Point2D(0, -1.5))
    assert right_complement(REGION).contains(Point2D(0, 1.5))
    assert overlaps(REGION, CONTROL[0]) and not overlaps(REGION, LEFT[0])


def test_trivial_commutators(small_space, bump):
    grid = SMALL.grid
    F = field(bump, "phi", small_space, grid)
    assert commutator_norm(F, identity(small_space), 2) == 0.0
    assert commutator_norm(F, F, 2) < 1e-12
    zd = creator(small_space, grid, np.ones(SMALL.N))
    assert commutator_norm(zd, zd, 2) == 0.0


def test_commutator_norm_is_antisymmetric(small_space, even1):
    grid = SMALL.grid
    A = assemble_observable(even1, small_space, grid)
    F = field(LEFT[0], "phi", small_space, grid)
    assert commutator_norm(A, F, 2) == commutator_norm(F, A, 2)


def test_commutator_truncation_guard(even1):
    space = FockSpace(SMALL.N, 2)
    A = assemble_observable(even1, space, SMALL.grid)
    F = field(LEFT[0], "phi", space, SMALL.grid)
    with pytest.raises(TruncationError):
        commutator_norm(A, F, 2)


def test_battery_geometry_checks():
    with pytest.raises(GeometryError):
        check_battery(REGION, [], [], None)
    with pytest.raises(GeometryError):
        check_battery(REGION, RIGHT, [], None)  # right-side bump offered as a left battery member
    with pytest.raises(GeometryError):
        check_battery(REGION, [BumpFunction(Point2D(0.0, -1.0), 0.4)], [], None)  # margin violated


def test_controls_must_overlap(small_space, even1):
    A = assemble_observable(even1, small_space, SMALL.grid)
    with pytest.raises(GeometryError):
        locality_verdict(A, REGION, LEFT, RIGHT, LEFT, None, SMALL)


def test_identity_is_inconclusive(small_space):
    v = locality_verdict(identity(small_space), REGION, LEFT, RIGHT, CONTROL, None, SMALL)
    assert v.status == "inconclusive" and not v.passed
    assert len(v.separations) == len(LEFT) + len(RIGHT) + 2 * len(CONTROL)


def test_translation_covariance_probe(even1):
    # translate the observable and the batteries together; report-only beyond 1e-10
    a = Point2D(0.0, 0.1)
    space = FockSpace(SMALL.N, SMALL.k_cap + 1)
    v0 = locality_verdict(assemble_observable(even1, space, SMALL.grid), REGION, LEFT, RIGHT, CONTROL, None, SMALL)
    fam = EvenTerminating(1, even1.poly, even1.g.translated(a), 0.7)
    shifted = DoubleCone.standard(0.5, a)
    v1 = locality_verdict(assemble_observable(fam, space, SMALL.grid), shifted,
                          [b.translated(a) for b in LEFT], [b.translated(a) for b in RIGHT],
                          [c.translated(a) for c in CONTROL], None, SMALL)
    assert np.allclose(v0.left_norms + v0.right_norms, v1.left_norms + v1.right_norms, rtol=1e-6)


def test_arbiter_needs_two_candidates(even1):
    with pytest.raises(ValueError):
        convention_arbiter(boundary_candidates()[:1], even1, REGION, LEFT, RIGHT, CONTROL, None, SMALL)


def test_arbiter_reports_when_nothing_passes(even1):
    # a six-node grid is far too coarse for tau = 1e-3
    with pytest.raises(NoPassingConvention) as info:
        convention_arbiter(boundary_candidates()[:2], even1, REGION, LEFT, RIGHT, CONTROL, None, SMALL)
    assert set(info.value.report.verdicts) == {"plus-ordered", "plus-reversed"}


def test_arbiter_ambiguity(even1):
    loose = HarnessConfig(N=6, theta_max=3.0, k_cap=2, tau=10.0, rho_min=0.0, check_domega=False)
    same = [ConventionCandidate("a"), ConventionCandidate("b")]
    with pytest.raises(MultiplePassing):
        convention_arbiter(same, even1, REGION, LEFT, RIGHT, CONTROL, None, loose)
    rep = convention_arbiter(same, even1, REGION, LEFT, RIGHT, CONTROL, None, loose, raise_on_ambiguity=False)
    assert rep.selected is None and set(rep.as_dict()["verdicts"]) == {"a", "b"}


def _members(rng, count, odd=False):
    out = []
    for _ in range(count):
        g = BumpFunction(Point2D(*rng.uniform(-0.1, 0.1, 2)), rng.uniform(0.1, 0.2))
        if odd:
            out.append(OddTower(PowerSumTower(int(rng.integers(0, 2))), g, 0.5))
        else:
            terms = (((int(rng.integers(-2, 3)),), complex(*rng.normal(size=2))),)
            out.append(EvenTerminating(1, SymmetricLaurentPolynomial(2, terms), g, 0.5))
    return out


def test_rank_respects_parity_and_grows(rng):
    grid = RapidityGrid(4, 3.0)
    evens = _members(rng, 8)
    one = reeh_schlieder_rank(evens[:3], grid, 2, 0.5)
    many = reeh_schlieder_rank(evens, grid, 2, 0.5)
    assert one.parities == [0] and one.sector_ranks[1] == 0
    assert one.rank <= many.rank <= many.reachable_dim
    mixed = reeh_schlieder_rank(evens + _members(rng, 4, odd=True), grid, 2, 0.5)
    assert mixed.parities == [0, 1] and mixed.rank > many.rank


def test_rank_geometry_check(bump):
    far = EvenTerminating(1, SymmetricLaurentPolynomial.constant(2), BumpFunction(Point2D(0, 0.3), 0.3), 0.9)
    with pytest.raises(GeometryError):
        reeh_schlieder_rank([far], RapidityGrid(4, 3.0), 2, 0.5)


def test_flipped_metric_changes_the_fields(small_space, bump):
    a = field(LEFT[0], "phi", small_space, SMALL.grid).to_matrix()
    b = field(LEFT[0], "phi", small_space, SMALL.grid, conv=Conventions(metric_sign=-1)).to_matrix()
    assert not np.allclose(a, b)
