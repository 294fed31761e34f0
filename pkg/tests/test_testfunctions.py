import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from isingobs.core import Conventions, OmegaIndicatrix, Point2D
from isingobs.testfunctions import (
    BumpFunction,
    FourierCache,
    QuadratureOrderWarning,
    bump_profile,
    domega_membership,
    fourier_transform,
    fourier_transform_cartesian,
    frequency_part,
    radial_profile,
)

momenta = st.tuples(st.floats(-30, 30), st.floats(-30, 30))


def test_profile_support():
    s = np.array([-1.5, -1.0, 0.0, 0.5, 1.0, 2.0])
    out = bump_profile(s)
    assert out[0] == out[1] == out[-1] == out[-2] == 0
    assert out[2] == pytest.approx(np.exp(-1))
    assert BumpFunction(Point2D(1, 1), 0.2)(1.0, 1.3) == 0.0


def test_invalid_radius():
    with pytest.raises(ValueError):
        BumpFunction(Point2D(0, 0), 0.0)


def test_transform_at_zero_is_the_integral():
    b = BumpFunction(Point2D(0.3, -0.2), 0.4, amplitude=2.0)
    ref, _ = integrate.dblquad(lambda x, t: b(t, x), -0.1, 0.7, -0.6, 0.2, epsabs=1e-13)
    assert complex(fourier_transform(b, np.array([0.0, 0.0]))) == pytest.approx(ref, rel=1e-9)


@given(momenta)
def test_hankel_matches_cartesian_quadrature(p):
    # the tensor-product rule is the independent oracle for the radial reduction
    b = BumpFunction(Point2D(0.1, -0.05), 0.3)
    p = np.array(p)
    fast = complex(fourier_transform(b, p))
    ref = complex(np.ravel(fourier_transform_cartesian(b, p, order=160))[0])
    assert abs(fast - ref) < 1e-9 * abs(complex(fourier_transform(b, np.zeros(2))))


@given(momenta, st.floats(-2, 2), st.floats(-2, 2))
def test_translation_is_a_phase(p, a0, a1):
    b = BumpFunction(Point2D(0.0, 0.0), 0.3)
    a = Point2D(a0, a1)
    p = np.array(p)
    conv = Conventions()
    phase = np.exp(1j * conv.phase_sign * (p[0] * a0 - p[1] * a1))
    lhs = complex(fourier_transform(b.translated(a), p))
    rhs = phase * complex(fourier_transform(b, p))
    assert abs(lhs - rhs) < 1e-12


@given(momenta)
def test_reflection_flips_momentum(p):
    b = BumpFunction(Point2D(0.2, 0.1), 0.3)
    p = np.array(p)
    assert complex(fourier_transform(b.reflected(), p)) == pytest.approx(complex(fourier_transform(b, -p)), abs=1e-13)


def test_complex_momenta_are_analytic():
    # Cauchy-Riemann in p0 at a complex point
    b = BumpFunction(Point2D(0.1, 0.0), 0.3)
    p = np.array([1.0 + 0.5j, 0.7 - 0.2j])
    h = 1e-5
    d_re = (fourier_transform(b, p + [h, 0]) - fourier_transform(b, p - [h, 0])) / (2 * h)
    d_im = (fourier_transform(b, p + [1j * h, 0]) - fourier_transform(b, p - [1j * h, 0])) / (2j * h)
    assert abs(d_re - d_im) < 1e-7


def test_paley_wiener_growth_along_imaginary_axis():
    # unit support radius: |profile(i kappa)| grows no faster than e^kappa
    lam = np.array([5.0, 10.0, 20.0, 40.0])
    vals = np.abs(radial_profile(1j * lam))
    rate = np.diff(np.log(vals)) / np.diff(lam)
    assert np.all(rate < 1.05)


def test_frequency_parts():
    b = BumpFunction(Point2D(0.1, 0.2), 0.3)
    th = np.linspace(-2, 2, 5)
    fp = frequency_part(b, th, 1)
    fm = frequency_part(b, th, -1)
    assert np.allclose(fp * 2 * np.pi, [complex(fourier_transform(b, np.array([np.cosh(t), np.sinh(t)]))) for t in th])
    assert np.allclose(fm * 2 * np.pi, [complex(fourier_transform(b, -np.array([np.cosh(t), np.sinh(t)]))) for t in th])
    with pytest.raises(ValueError):
        frequency_part(b, th, 0)


def test_check_flag_warns_on_coarse_order():
    b = BumpFunction(Point2D(0.0, 0.0), 1.0)
    with pytest.warns(QuadratureOrderWarning):
        fourier_transform(b, np.array([0.0, 2.0e4]))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fourier_transform(b, np.array([0.0, 4.0]), check=True)


def test_cache_memo_and_freeze():
    b = BumpFunction(Point2D(0.0, 0.0), 0.3)
    c = FourierCache(order=64, table_kmax=50.0)
    v = c.lookup(b, (1.0, 0.5))
    assert len(c) == 1 and c.lookup(b, (1.0, 0.5)) == v
    c.freeze()
    c.lookup(b, (2.0, 0.5))
    assert c.frozen and len(c) == 1
    k = np.array([0.0, 3.3, 40.0, 70.0])
    assert np.allclose(c.profile_real(k), radial_profile(k).real, atol=1e-9)


def test_domega_scan_verdicts():
    battery = BumpFunction(Point2D(0.0, 1.5), 0.4)
    assert domega_membership(battery, OmegaIndicatrix.log(6)).passed
    assert domega_membership(battery, OmegaIndicatrix.power(0.4)).passed
    assert domega_membership(battery, OmegaIndicatrix.power(0.9)).verdict == "fail"
