import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isingobs.laurent import (
    ExponentTower,
    PowerSumTower,
    SymmetricLaurentPolynomial,
    ZeroArgumentError,
    descent_check,
    eval_poly,
    parse_polynomial,
)

cplx = st.complex_numbers(min_magnitude=0.2, max_magnitude=3, allow_nan=False, allow_infinity=False)


def test_parse_terms_and_constant():
    P = parse_polynomial("2:1,-1; 0.5j:")
    assert P.nvars == 2
    x = np.array([2.0, 3.0])
    expected = 2 * (2 / 3 + 3 / 2) + 0.5j
    assert complex(eval_poly(P, x)) == pytest.approx(expected)
    C = parse_polynomial("1:", nvars=4)
    assert complex(eval_poly(C, np.ones(4) * 1.7)) == 1


def test_parse_powersum():
    T = parse_polynomial("powersum(1)")
    assert isinstance(T, PowerSumTower) and T.exponent == 3
    member = parse_polynomial("powersum(1)", nvars=3)
    x = np.array([1.1, -0.4, 2.0])
    assert complex(eval_poly(member, x)) == pytest.approx(np.sum(x**3))


@pytest.mark.parametrize("text", ["", "x:1", "1:a", "1;2"])
def test_parse_errors(text):
    with pytest.raises(ValueError):
        parse_polynomial(text)


def test_too_many_exponents():
    with pytest.raises(ValueError):
        SymmetricLaurentPolynomial(1, (((1, 2), 1.0),))


@given(st.lists(cplx, min_size=3, max_size=3))
def test_polynomial_is_symmetric(xs):
    P = SymmetricLaurentPolynomial(3, (((2, -1), 1.0 - 0.5j), ((1, 1, 1), 2.0)))
    x = np.array(xs)
    vals = [complex(eval_poly(P, x[list(p)])) for p in itertools.permutations(range(3))]
    assert np.allclose(vals, vals[0], rtol=1e-12)


def test_orbit_expansion_matches_explicit_sum():
    P = SymmetricLaurentPolynomial(3, (((2, -1), 1.0),))
    x = np.array([1.3, 0.7 + 0.2j, -2.0])
    orbit = set(itertools.permutations((2, -1, 0)))
    ref = sum(np.prod(x ** np.array(e)) for e in orbit)
    assert complex(eval_poly(P, x)) == pytest.approx(ref)


def test_zero_argument():
    with pytest.raises(ZeroArgumentError):
        eval_poly(SymmetricLaurentPolynomial.constant(2), np.array([0.0, 1.0]))


@given(cplx, st.lists(cplx, min_size=3, max_size=3), st.integers(-2, 2))
def test_power_sum_descent(p, q, s):
    assert descent_check(PowerSumTower(s), 2, p, q) < 1e-10 * (1 + np.sum(np.abs(np.array(q)) ** abs(2 * s + 1)))


def test_even_exponent_breaks_descent():
    assert descent_check(ExponentTower(2), 1, 1.3, [0.5]) > 1.0
    with pytest.raises(ValueError):
        descent_check(PowerSumTower(0), 0, 1.0, [1.0])


def test_abs_terms_bounds_value():
    P = SymmetricLaurentPolynomial(2, (((1, -1), 1.0), ((), -2.0)))
    z = np.array([[0.3 + 0.1j, -0.2 + 1.0j]])
    assert np.abs(P.eval_log(z)) <= P.abs_terms_log(z) + 1e-15
