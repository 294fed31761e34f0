import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isingobs.core import (
    Conventions,
    DoubleCone,
    MalformedRegionError,
    OmegaIndicatrix,
    Point2D,
    Side,
    Wedge,
    ball_extreme_points,
    ball_inside,
    mass_shell_defect,
    momentum,
    omega_eval,
    scattering_S,
    total_momentum,
)

coords = st.floats(-5, 5, allow_nan=False)


def test_wedges_are_causal_complements():
    W = Wedge(Point2D(0, 0), Side.RIGHT)
    Wp = Wedge(Point2D(0, 0), Side.LEFT)
    assert W.contains(Point2D(0, 1)) and not W.contains(Point2D(0, -1))
    assert Wp.contains(Point2D(0, -1)) and not Wp.contains(Point2D(2, 1))
    # light-like boundary is excluded
    assert not W.contains(Point2D(1, 1))


def test_standard_double_cone():
    O = DoubleCone.standard(0.5)
    assert O.contains(Point2D(0, 0))
    assert O.contains(Point2D(0.4, 0)) and not O.contains(Point2D(0.6, 0))
    assert not O.contains(Point2D(0, 0.5))


def test_malformed_double_cone():
    with pytest.raises(MalformedRegionError):
        DoubleCone(Point2D(0, 1), Point2D(0, -1))
    with pytest.raises(MalformedRegionError):
        DoubleCone.standard(0.0)


@given(coords, coords, st.floats(0.01, 1.0))
def test_ball_inside_agrees_with_extreme_points(t, x, r):
    O = DoubleCone.standard(2.0)
    c = Point2D(t, x)
    inside = ball_inside(O, c, r)
    pts = ball_extreme_points(c, r)
    if inside:
        assert all(O.contains(p) for p in pts)
    elif O.depth(t, x) > math.sqrt(2) * r + 1e-9:
        pytest.fail("depth criterion inconsistent")


def test_ball_margin():
    W = Wedge(Point2D(0, 0))
    c = Point2D(0, 1.0)
    assert ball_inside(W, c, 0.6)
    assert not ball_inside(W, c, 0.6, margin=0.2)


@given(st.floats(-6, 6))
def test_mass_shell(theta):
    p = momentum(theta, 2.0)
    assert abs(p[0] ** 2 - p[1] ** 2 - 4.0) < 1e-9 * p[0] ** 2
    assert abs(mass_shell_defect(theta, 2.0)) < 1e-9 * p[0] ** 2


def test_total_momentum_of_pair_at_ipi_vanishes():
    z = np.array([0.3, 0.3 + 1j * np.pi])
    assert np.allclose(total_momentum(z), 0, atol=1e-15)


def test_scattering_is_minus_one():
    assert np.all(scattering_S(np.linspace(-3, 3, 7)) == -1)


def test_omega_indicatrix():
    assert omega_eval(OmegaIndicatrix.log(2.0), 0.0) == 0.0
    assert math.isclose(OmegaIndicatrix.log(2.0)(math.e - 1), 2.0)
    assert math.isclose(OmegaIndicatrix.power(0.5)(4.0), 2.0)
    with pytest.raises(ValueError):
        OmegaIndicatrix.power(1.0)
    with pytest.raises(ValueError):
        OmegaIndicatrix.log(0.0)
    with pytest.raises(ValueError):
        omega_eval(OmegaIndicatrix.log(1.0), -1.0)
    assert OmegaIndicatrix.power(0.4).label() == "power(0.4)"


@given(st.floats(0, 1e3), st.floats(0, 1e3))
def test_omega_monotone(a, b):
    lo, hi = sorted((a, b))
    for om in (OmegaIndicatrix.log(3.0), OmegaIndicatrix.power(0.3)):
        assert om(lo) <= om(hi)


def test_conventions_phase_sign():
    assert Conventions().phase_sign in (1, -1)
    assert Conventions(metric_sign=-1).phase_sign == -Conventions().phase_sign
