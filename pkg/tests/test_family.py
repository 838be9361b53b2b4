"""Tests for the family kernel: evaluation, poles and fixed-point formulas."""

import cmath
import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from tanpq.core.errors import (
    DegenerateInputError,
    MagnitudeOverflowError,
    PoleHitError,
)
from tanpq.core.family import (
    FamilyParams,
    asymptotic_values,
    evaluate,
    evaluate_derivative,
    fixed_point_multiplier,
    free_asymptotic_value,
    lambda_of_fixed_point,
    on_invariant_lines,
    pole_location,
    root_of_unity,
    stable_tan,
)

coords = st.floats(min_value=-1.1, max_value=1.1, allow_nan=False, allow_infinity=False)


def _away_from_poles_and_zeros(w, margin=0.1):
    # distance to pi/2 + m*pi and to m*pi along the real axis
    x = w.real % (math.pi / 2)
    return min(x, math.pi / 2 - x) > margin or abs(w.imag) > margin


def test_params_reject_non_positive():
    with pytest.raises(ValidationError):
        FamilyParams(p=0, q=1)
    with pytest.raises(ValidationError):
        FamilyParams(p=1, q=-2)


def test_params_parity(p11, p21, p23):
    assert p11.pq_odd and not p11.pq_even
    assert p21.pq_even
    assert p23.pq == 6


def test_root_of_unity_exact_quarter_turns():
    assert root_of_unity(1, 4) == 1j
    assert root_of_unity(2, 4) == -1
    assert root_of_unity(3, 6) == -1
    assert root_of_unity(-1, 4) == -1j


def test_stable_tan_matches_math_on_real_axis():
    assert stable_tan(0.3) == pytest.approx(math.tan(0.3), rel=1e-14)


def test_stable_tan_deep_in_upper_tract():
    assert abs(stable_tan(1 + 50j) - 1j) < 1e-12
    assert abs(stable_tan(1 - 50j) + 1j) < 1e-12
    assert abs(stable_tan(0.2 + 800j) - 1j) < 1e-12


def test_stable_tan_raises_at_pole():
    with pytest.raises(PoleHitError):
        stable_tan(math.pi / 2)
    with pytest.raises(PoleHitError):
        stable_tan(-math.pi / 2)


def test_evaluate_rejects_zero_lambda(p11):
    with pytest.raises(DegenerateInputError):
        evaluate(p11, 0, 1.0)


def test_evaluate_raises_on_overflow(p11):
    with pytest.raises(MagnitudeOverflowError):
        evaluate(p11, 2, 1e9)


def test_evaluate_tract_limit(p11, p23):
    # lambda * tan^p(z^q) -> lambda * i^p as Im z^q -> +inf
    assert abs(evaluate(p11, 2 + 1j, 0.3 + 25j) - (2 + 1j) * 1j) < 1e-12
    z = cmath.exp(1j * math.pi / 6) * 4.0  # z^3 = 64i
    assert abs(evaluate(p23, 1.5, z) + 1.5) < 1e-12


@settings(max_examples=200, deadline=None)
@given(x=coords, y=coords)
def test_odd_map_for_pq_odd(x, y):
    params = FamilyParams(p=1, q=3)
    z = complex(x, y)
    w = z**3
    assume(_away_from_poles_and_zeros(w) and abs(z) > 1e-3)
    lam = 0.7 - 1.3j
    assert evaluate(params, lam, -z) == pytest.approx(-evaluate(params, lam, z), rel=1e-13)


@settings(max_examples=200, deadline=None)
@given(x=coords, y=coords)
def test_rotation_law(x, y):
    params = FamilyParams(p=1, q=3)
    omega = root_of_unity(1, 3)
    z = complex(x, y)
    assume(_away_from_poles_and_zeros(z**3) and abs(z) > 1e-2)
    lam = 1.1 + 0.4j
    rotated = evaluate(params, omega * lam, omega * z)
    assert rotated == pytest.approx(omega * evaluate(params, lam, z), rel=1e-13)


@settings(max_examples=200, deadline=None)
@given(x=coords, y=coords)
def test_conjugation_law(x, y):
    params = FamilyParams(p=2, q=1)
    z = complex(x, y)
    assume(_away_from_poles_and_zeros(z) and abs(z) > 1e-3)
    lam = -0.4 + 2.2j
    value = evaluate(params, lam, z)
    assert evaluate(params, lam.conjugate(), z.conjugate()) == pytest.approx(value.conjugate(), rel=1e-13)


@pytest.mark.parametrize("pq", [(1, 1), (2, 1), (1, 2), (2, 3)])
def test_derivative_matches_finite_difference(pq):
    params = FamilyParams(p=pq[0], q=pq[1])
    lam, z, h = 0.8 + 0.3j, 0.4 + 0.2j, 1e-6
    numeric = (evaluate(params, lam, z + h) - evaluate(params, lam, z - h)) / (2 * h)
    assert evaluate_derivative(params, lam, z) == pytest.approx(numeric, rel=1e-6)


def test_free_asymptotic_value(p11, p21, p23):
    assert free_asymptotic_value(p11, 2) == 2j
    assert free_asymptotic_value(p21, 1 + 1j) == -(1 + 1j)
    assert free_asymptotic_value(p23, 3) == -3
    assert asymptotic_values(p11, 2) == (2j, -2j)
    assert asymptotic_values(p23, 3) == (-3,)


@pytest.mark.parametrize("m", [-3, -1, 0, 2])
def test_pole_location_roots(m):
    params = FamilyParams(p=1, q=3)
    base = math.pi / 2 + m * math.pi
    for j in range(3):
        pole = pole_location(params, m, j)
        assert pole.location**3 == pytest.approx(base, rel=1e-12)
    ratio = pole_location(params, m, 1).location / pole_location(params, m, 0).location
    assert ratio == pytest.approx(root_of_unity(1, 3), rel=1e-12)


def test_pole_location_branch_range(p23):
    with pytest.raises(ValueError):
        pole_location(p23, 0, 3)


def test_lambda_of_fixed_point_on_imaginary_axis(p11):
    # tan(iy) = i tanh(y), so lambda = y / tanh(y)
    for y in (0.5, 1.0, 3.0):
        lam = lambda_of_fixed_point(p11, 1j * y)
        assert lam == pytest.approx(y / math.tanh(y), rel=1e-13)


def test_lambda_of_fixed_point_degenerate(p11):
    with pytest.raises(DegenerateInputError):
        lambda_of_fixed_point(p11, 0)
    with pytest.raises(PoleHitError):
        lambda_of_fixed_point(p11, math.pi / 2)


def test_fixed_point_of_lambda_two(p11, y_star):
    z = 1j * y_star
    assert lambda_of_fixed_point(p11, z) == pytest.approx(2.0, rel=1e-12)
    mu = fixed_point_multiplier(p11, z)
    assert mu == pytest.approx(2 * y_star / math.sinh(2 * y_star), rel=1e-12)
    assert abs(mu - 0.1664) < 1e-3
    assert mu == pytest.approx(evaluate_derivative(p11, 2, z), rel=1e-10)


def test_fixed_point_multiplier_underflows_deep_in_tract(p11):
    assert fixed_point_multiplier(p11, 1000j) == 0


wide = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)
tall = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False, allow_infinity=False)
pairs = st.sampled_from([(1, 1), (2, 1), (1, 2), (2, 3), (1, 3)])


@settings(max_examples=300, deadline=None)
@given(x=wide, y=tall)
def test_stable_tan_matches_sine_over_cosine(x, y):
    w = complex(x, y)
    assume(_away_from_poles_and_zeros(w, margin=0.2))
    assert stable_tan(w) == pytest.approx(cmath.sin(w) / cmath.cos(w), rel=1e-13)


def test_stable_tan_is_exact_on_the_axes():
    for x in (0.3, -1.2, 7.9, 1e3):
        t = stable_tan(x)
        assert t.imag == 0.0
        assert t.real == pytest.approx(math.tan(x), rel=1e-14)
    for y in (0.4, -2.5, 40.0):
        t = stable_tan(complex(0.0, y))
        assert t.real == 0.0
        assert t.imag == pytest.approx(math.tanh(y), rel=1e-14)


def test_real_orbits_stay_real(p21):
    assert evaluate(p21, -0.8, 0.7).imag == 0.0
    assert evaluate_derivative(p21, -0.8, 0.7).imag == 0.0
    # imaginary z^q: tan is imaginary, its square real
    assert evaluate(p21, 1.5, 2.0j).imag == 0.0


def test_invariant_lines(p11, p23):
    assert on_invariant_lines(p11, -2j, 0.7)
    assert on_invariant_lines(p11, 2, 0)
    assert not on_invariant_lines(p11, 1 + 1j, 0.7)
    omega = root_of_unity(1, 6)
    assert on_invariant_lines(p23, -3 * omega, -3 * omega)
    assert not on_invariant_lines(p23, -3 * omega, 1 + 0.5j)


@pytest.mark.parametrize("pq", [(1, 1), (2, 1), (1, 2), (2, 3)])
@pytest.mark.parametrize("theta", [0.3, 1.9, -2.4])
def test_multiplier_small_z_limit(pq, theta):
    params = FamilyParams(p=pq[0], q=pq[1])
    z = (1e-6) ** (1.0 / params.q) * cmath.exp(1j * theta)
    assert abs(fixed_point_multiplier(params, z) - params.pq) < 1e-5


@settings(max_examples=200, deadline=None)
@given(pq=pairs, x=coords, y=coords)
def test_lambda_of_fixed_point_round_trip(pq, x, y):
    params = FamilyParams(p=pq[0], q=pq[1])
    z = complex(x, y)
    assume(abs(z) > 0.05 and _away_from_poles_and_zeros(z**params.q, margin=0.05))
    lam = lambda_of_fixed_point(params, z)
    assert abs(evaluate(params, lam, z) - z) < 1e-12 * max(1.0, abs(z))


@settings(max_examples=200, deadline=None)
@given(x=coords, y=coords)
def test_derivative_is_even_for_pq_odd(x, y):
    params = FamilyParams(p=1, q=3)
    z = complex(x, y)
    assume(_away_from_poles_and_zeros(z**3) and abs(z) > 1e-3)
    lam = 0.7 - 1.3j
    assert evaluate_derivative(params, lam, -z) == pytest.approx(evaluate_derivative(params, lam, z), rel=1e-13)
