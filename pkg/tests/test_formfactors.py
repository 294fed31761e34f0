import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from conftest import even_family
from isingobs.core import OmegaIndicatrix, Point2D, total_momentum
from isingobs.formfactors import (
    BoundaryPrescription,
    BoundaryVariant,
    ConstantFamily,
    DivergentTail,
    EvenTerminating,
    LocalizationError,
    OddTower,
    PoleProximityError,
    ZeroFamily,
    boundary_coefficient,
    eval_F,
    magnitude_scale,
    series_norm_details,
)
from isingobs.laurent import ExponentTower, PowerSumTower, SymmetricLaurentPolynomial
from isingobs.testfunctions import BumpFunction, fourier_transform

rap = st.floats(-2, 2)


def gt(g, z):
    return fourier_transform(g, total_momentum(np.asarray(z, dtype=complex)))


def test_even_two_point_closed_form(bump):
    fam = even_family(1, bump)
    z = np.array([0.3 + 0.2j, -0.5 - 0.1j])
    P = fam.poly.eval_log(z)
    ref = gt(bump, z) * P * 2 * np.sinh((z[0] - z[1]) / 2)
    assert complex(eval_F(fam, z)) == pytest.approx(complex(ref), rel=1e-13)


def test_even_vanishes_off_its_particle_number(bump):
    fam = even_family(1, bump)
    assert eval_F(fam, np.zeros(4)) == 0
    assert eval_F(fam, np.zeros(3)) == 0
    assert fam.nonzero(2) and not fam.nonzero(4)


def test_higher_even_members_cancel(bump, rng):
    # the sinh matrix has rank two, so F_{2k} is zero up to roundoff for k >= 2
    fam = even_family(2, bump)
    z = rng.normal(size=(10, 4)) + 0.5j * rng.normal(size=(10, 4))
    assert np.all(np.abs(eval_F(fam, z)) < 1e-12 * magnitude_scale(fam, z))


def test_odd_tower_closed_forms(odd, bump):
    z1 = np.array([0.4 + 0.3j])
    assert complex(eval_F(odd, z1)) == pytest.approx(complex(gt(bump, z1) * np.exp(z1[0])))
    z = np.array([0.4, -0.3 + 0.2j, 1.1 - 0.1j])
    tanh = np.prod([np.tanh((z[a] - z[b]) / 2) for a in range(3) for b in range(a + 1, 3)])
    ref = gt(bump, z) * np.exp(z).sum() * tanh / (2j * math.pi)
    assert complex(eval_F(odd, z)) == pytest.approx(complex(ref), rel=1e-12)


def test_odd_pole_guard(odd):
    with pytest.raises(PoleProximityError):
        eval_F(odd, np.array([0.0, 1j * np.pi, 0.5]))


def test_family_validation(bump):
    far = BumpFunction(Point2D(0.0, 2.0), 0.3)
    with pytest.raises(LocalizationError):
        OddTower(PowerSumTower(0), far, 0.5)
    with pytest.raises(ValueError):
        OddTower(ExponentTower(2), bump, 0.5)
    with pytest.raises(ValueError):
        EvenTerminating(1, SymmetricLaurentPolynomial.constant(3), bump, 0.5)
    with pytest.raises(ValueError):
        EvenTerminating(-1, SymmetricLaurentPolynomial.constant(0), bump, 0.5)


def test_control_families():
    assert eval_F(ZeroFamily(), np.zeros(2)) == 0
    c = ConstantFamily(2, 3.0)
    assert np.all(eval_F(c, np.zeros((4, 2))) == 3.0) and eval_F(c, np.zeros(3)) == 0


@given(st.lists(rap, min_size=2, max_size=2), st.lists(rap, min_size=1, max_size=1))
def test_scale_dominates_value(t, e):
    fam = OddTower(PowerSumTower(1), BumpFunction(Point2D(0, 0), 0.3), 0.5)
    z = np.array(t + [e[0] + 0.4j])
    assume(abs(t[0] - t[1]) > 1e-6)  # tanh zero: log of zero in the scale
    assert abs(eval_F(fam, z)) <= magnitude_scale(fam, z) * (1 + 1e-12)


def test_entire_boundary_value_is_direct(even1):
    th, et = np.array([0.3]), np.array([-0.2])
    bv = boundary_coefficient(even1, 1, 1, th, et)
    direct = eval_F(even1, np.array([0.3, -0.2 + 1j * np.pi]))
    assert complex(bv.value) == complex(direct) and not bv.singular


def test_reversed_variant_reverses_annihilators(even1):
    th = np.zeros((0,))
    et = np.array([0.3, -0.4])
    a = boundary_coefficient(even1, 0, 2, th, et, BoundaryPrescription(BoundaryVariant.PLUS_ORDERED)).value
    b = boundary_coefficient(even1, 0, 2, th, et, BoundaryPrescription(BoundaryVariant.PLUS_REVERSED)).value
    assert complex(a) == pytest.approx(-complex(b))


def test_odd_extrapolation_matches_small_offset(odd):
    th, et = np.array([0.3]), np.array([-0.4, 0.9])
    bv = boundary_coefficient(odd, 1, 2, th, et)
    eps = 1e-7
    near = eval_F(odd, np.concatenate([th, et + 1j * (np.pi - eps)]).astype(complex))
    assert complex(bv.value) == pytest.approx(complex(near), rel=1e-6)
    assert not bv.singular


def test_principal_value_at_coincidence(odd):
    # symmetric real-offset average with Richardson extrapolation as the oracle
    th, et = np.array([0.3]), np.array([0.3, -0.8])

    def sym(eps):
        vals = []
        for s in (1, -1):
            z = np.concatenate([th, et + 1j * np.pi + s * np.array([eps, 0.0])]).astype(complex)
            vals.append(complex(eval_F(odd, z)))
        return 0.5 * sum(vals)

    h = 1e-3
    ref = (4 * sym(h / 2) - sym(h)) / 3
    bv = boundary_coefficient(odd, 1, 2, th, et)
    assert bool(bv.singular)
    assert complex(bv.value) == pytest.approx(ref, rel=1e-6)


def test_double_coincidence_is_finite(odd):
    th, et = np.array([0.3, -0.5]), np.array([0.3, -0.5, 1.0])
    fam = OddTower(PowerSumTower(0), odd.g, 0.5)
    bv = boundary_coefficient(fam, 2, 3, th, et)
    assert np.isfinite(bv.value) and bv.spread < 1e-8 * max(abs(bv.value), 1e-300)


def test_shape_checks(odd):
    with pytest.raises(ValueError):
        boundary_coefficient(odd, 1, 2, np.zeros(2), np.zeros(2))


def test_even_surrogate_norm_refines(bump):
    fam = EvenTerminating(1, SymmetricLaurentPolynomial.constant(2), bump, 0.5)
    om = OmegaIndicatrix.log(4)
    a = series_norm_details(fam, 2, 0, om, nodes=32, theta_max=6.0).value
    b = series_norm_details(fam, 2, 0, om, nodes=48, theta_max=6.0).value
    assert a > 0 and abs(a - b) < 1e-6 * b


def test_growing_polynomial_hits_the_tail_check(even1):
    # x1^2/x2 grows like e^{2 theta}; log(4) damping cannot hold it at theta_max = 6
    with pytest.raises(DivergentTail):
        series_norm_details(even1, 2, 0, OmegaIndicatrix.log(4), nodes=32, theta_max=6.0)


def test_tail_detection(even1):
    with pytest.raises(DivergentTail):
        series_norm_details(even1, 1, 1, OmegaIndicatrix.log(0.5), nodes=16, theta_max=3.0)
