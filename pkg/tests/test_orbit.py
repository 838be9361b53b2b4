"""Tests for orbit iteration, cycle refinement and parameter classification."""

import cmath
import math

import numpy as np
import pytest
from pydantic import ValidationError

from tanpq.core.errors import DegenerateInputError, RefinementError
from tanpq.core.family import FamilyParams, evaluate, evaluate_derivative, root_of_unity
from tanpq.core.orbit import (
    CODE_ATTRACTED,
    ClassTag,
    CycleInfo,
    CycleMode,
    OrbitBudget,
    OutcomeTag,
    chain_multiplier,
    classify_many,
    classify_parameter,
    classify_seeds,
    cycle_log_modulus,
    cycle_multiplier,
    iterate_orbit,
    refine_cycle,
)


def test_budget_rejects_warmup_beyond_max_iter():
    with pytest.raises(ValidationError):
        OrbitBudget(max_iter=100, warmup=100)
    deep = OrbitBudget.deep()
    assert deep.max_iter > OrbitBudget().max_iter


def test_lambda_two_has_attracting_fixed_point(p11, y_star):
    result = classify_parameter(p11, 2)
    assert result.tag == ClassTag.SHELL
    assert result.period == 1 and result.raw_period == 1
    assert result.mode == CycleMode.TWO_CYCLES
    assert abs(result.multiplier - 0.1664) < 1e-3
    assert result.multiplier == pytest.approx(2 * y_star / math.sinh(2 * y_star), rel=1e-9)
    assert result.cycle.points[0] == pytest.approx(1j * y_star, abs=1e-10)


def test_negated_lambda_doubles_the_cycle(p11):
    base = classify_parameter(p11, 2)
    neg = classify_parameter(p11, -2)
    assert neg.tag == ClassTag.SHELL
    assert neg.mode == CycleMode.DOUBLED
    assert neg.period == 1 and neg.raw_period == 2
    assert neg.cycle.self_symmetric
    assert neg.multiplier == pytest.approx(base.multiplier**2, rel=1e-8)


def test_small_lambda_is_captured(p11, p23):
    assert classify_parameter(p11, 0.5).tag == ClassTag.CAPTURE
    assert classify_parameter(p23, 0.3).tag == ClassTag.CAPTURE


def test_period_two_center_is_virtual(p11):
    result = classify_parameter(p11, -1j * math.pi / 2)
    assert result.tag == ClassTag.VIRTUAL
    assert result.order == 1


def test_puncture_is_undecided(p11):
    assert classify_parameter(p11, 0).tag == ClassTag.UNDECIDED


def test_iterate_orbit(p11, y_star):
    outcome = iterate_orbit(p11, 2, 2j)
    assert outcome.tag == OutcomeTag.ATTRACTED
    assert outcome.cycle.period == 1
    assert outcome.cycle.points[0] == pytest.approx(1j * y_star, abs=1e-10)

    at_pole = iterate_orbit(p11, 2, math.pi / 2)
    assert at_pole.tag == OutcomeTag.PREPOLE
    assert at_pole.order == 1

    with pytest.raises(DegenerateInputError):
        iterate_orbit(p11, 0, 1j)


def test_rotation_preserves_classification(p23):
    omega = cmath.exp(2j * math.pi / 3)
    lam = -6 * cmath.exp(1j * math.pi / 6)
    base = classify_parameter(p23, lam)
    rotated = classify_parameter(p23, omega * lam)
    assert base.tag == ClassTag.SHELL
    assert (rotated.tag, rotated.period, rotated.mode) == (base.tag, base.period, base.mode)
    assert rotated.multiplier == pytest.approx(base.multiplier, rel=1e-9)


def test_refine_cycle_collapses_to_minimal_period(p11, y_star):
    cycle = refine_cycle(p11, 2, 1.9j, 2)
    assert cycle.period == 1
    assert cycle.points[0] == pytest.approx(1j * y_star, abs=1e-10)
    assert not cycle.self_symmetric


def test_refine_cycle_fails_at_pole(p11):
    with pytest.raises(RefinementError):
        refine_cycle(p11, 2, math.pi / 2, 1)
    with pytest.raises(ValueError):
        refine_cycle(p11, 2, 1j, 0)


@pytest.mark.parametrize("lam", [2, -2, 3 + 1j])
def test_closed_form_multiplier_matches_chain_rule(p11, lam):
    result = classify_parameter(p11, lam)
    assert result.tag == ClassTag.SHELL
    cycle = result.cycle
    assert cycle_multiplier(p11, cycle) == pytest.approx(result.multiplier, rel=1e-12)
    assert chain_multiplier(p11, lam, cycle) == pytest.approx(result.multiplier, rel=1e-9)
    assert cycle_log_modulus(p11, cycle) == pytest.approx(math.log(abs(result.multiplier)), rel=1e-9)


def test_batch_matches_single_classification(p11):
    lams = [2, -2, 0.5, -1j * math.pi / 2, 3 + 1j]
    batch = classify_many(p11, lams)
    assert len(batch) == len(lams)
    for i, lam in enumerate(lams):
        single = classify_parameter(p11, lam)
        item = batch.item(i, p11, lam)
        assert item.key == single.key
        assert item.raw_period == single.raw_period
        if single.multiplier is None:
            assert item.multiplier is None
        else:
            assert item.multiplier == pytest.approx(single.multiplier, rel=1e-14)


def test_batch_is_order_independent(p21):
    rng = np.random.default_rng(7)
    lams = rng.uniform(-4, 4, 64) + 1j * rng.uniform(-4, 4, 64)
    forward = classify_many(p21, lams)
    perm = rng.permutation(64)
    shuffled = classify_many(p21, lams[perm])
    np.testing.assert_array_equal(forward.codes[perm], shuffled.codes)
    np.testing.assert_array_equal(forward.periods[perm], shuffled.periods)
    np.testing.assert_array_equal(forward.multipliers[perm], shuffled.multipliers)


def test_classify_seeds_in_dynamical_plane(p11):
    batch = classify_seeds(p11, 2, [2j, -2j, 0.5j])
    assert np.all(batch.codes == CODE_ATTRACTED)
    assert np.all(batch.periods == 1)
    with pytest.raises(DegenerateInputError):
        classify_seeds(p11, 0, [1j])


@pytest.mark.parametrize("lam", [-0.8162508514287228, -0.8, -3.7, 2.4])
def test_real_parameters_carry_no_shell(p21, lam):
    # real orbits never reach a tract, so no float cycle can close through one
    assert not classify_parameter(p21, lam).is_shell()


def test_zero_seed_is_captured_only_when_zero_attracts(p11, p21):
    assert iterate_orbit(p11, 2, 0).tag == OutcomeTag.UNDECIDED
    assert iterate_orbit(p11, -1.5j, 0).tag == OutcomeTag.UNDECIDED
    assert iterate_orbit(p11, 0.5, 0).tag == OutcomeTag.CAPTURED
    assert iterate_orbit(p21, 5, 0).tag == OutcomeTag.CAPTURED


@pytest.mark.parametrize(
    "pq, lam",
    [((1, 1), 2), ((1, 1), -2), ((1, 1), 3 + 1j), ((2, 3), -6 * cmath.exp(1j * math.pi / 6))],
)
def test_reported_cycles_close(pq, lam):
    params = FamilyParams(p=pq[0], q=pq[1])
    result = classify_parameter(params, lam)
    assert result.is_shell()
    start = result.cycle.points[0]
    z = start
    for _ in range(result.cycle.period):
        z = evaluate(params, lam, z)
    assert abs(z - start) <= 1e-9 * max(1.0, abs(start))
    assert chain_multiplier(params, lam, result.cycle) == pytest.approx(cycle_multiplier(params, result.cycle), rel=1e-9)


def test_rotated_multipliers_agree_or_stay_undecided(p23):
    lam = 1.21556 + 1.79284j
    results = [(root_of_unity(k, 3) * lam, classify_parameter(p23, root_of_unity(k, 3) * lam)) for k in range(3)]
    shells = [(mu_lam, pc) for mu_lam, pc in results if pc.is_shell()]
    for mu_lam, pc in shells:
        closed = cycle_multiplier(p23, pc.cycle)
        assert chain_multiplier(p23, mu_lam, pc.cycle) == pytest.approx(closed, rel=1e-9)
    if len(shells) > 1:
        first = shells[0][1]
        for _, pc in shells[1:]:
            assert pc.key == first.key
            assert pc.multiplier == pytest.approx(first.multiplier, rel=1e-9)


def test_refine_cycle_keeps_doubled_period_four(p11):
    flanks = [-1j * (math.pi / 2 + s * 0.05) for s in (-1, 1)]
    candidates = [(lam, classify_parameter(p11, lam)) for lam in flanks]
    lam, found = next((lam, pc) for lam, pc in candidates if pc.mode == CycleMode.DOUBLED)
    assert found.raw_period == 4 and found.period == 2
    cycle = refine_cycle(p11, lam, found.cycle.points[0], 4)
    assert cycle.period == 4
    assert cycle.self_symmetric
    for z in cycle.points:
        assert min(abs(z + w) for w in cycle.points) < 1e-9 * max(1.0, abs(z))


def test_refined_points_are_polished(p11):
    cycle = refine_cycle(p11, -2, 1.9j, 2)
    assert cycle.period == 2 and cycle.self_symmetric
    for i, z in enumerate(cycle.points):
        following = cycle.points[(i + 1) % cycle.period]
        assert abs(evaluate(p11, -2, z) - following) <= 1e-12 * max(1.0, abs(following))


def test_multiplier_deep_in_tract(p11):
    cycle = CycleInfo(period=1, points=(1 + 50j,), multiplier=0j)
    mu = cycle_multiplier(p11, cycle)
    assert math.isfinite(mu.real) and math.isfinite(mu.imag)
    assert 0 < abs(mu) < 1e-20
    assert cycle_log_modulus(p11, cycle) == pytest.approx(math.log(2 * abs(2 + 100j)) - 100, rel=1e-12)


def test_fixed_point_refinement_converges_quadratically(p11, y_star):
    target = 1j * y_star
    seed = target + 0.1
    cycle = refine_cycle(p11, 2, seed, 1)
    assert cycle.points[0] == pytest.approx(target, abs=1e-12)

    # the Newton step refine_cycle takes on f(z) - z
    errors, z = [], seed
    while abs(z - target) > 1e-13 and len(errors) < 8:
        errors.append(abs(z - target))
        z = z - (evaluate(p11, 2, z) - z) / (evaluate_derivative(p11, 2, z) - 1)
    assert len(errors) >= 3
    orders = [math.log(errors[k + 2] / errors[k + 1]) / math.log(errors[k + 1] / errors[k]) for k in range(len(errors) - 2)]
    assert max(orders) >= 1.8
