import itertools
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from bounds import harmonic
from errors import BadParameters, CapExceeded, InvalidSlot, TooLarge, ZeroOptimum
from sampling import DrawSequence, RandomSource
from slot_allocation import allocation_cost, opt_cost, validate_instance
from strategies import (
    EvaluationResult,
    FcfsPolicy,
    GameState,
    OpeningPolicy,
    SlotPolicy,
    TablePolicy,
    competitive_ratio,
    exact_expected_cost,
    fcfs_allocate,
    fcfs_policy,
    monte_carlo_expected_cost,
    monte_carlo_stream_cost,
    optimal_stateless_value,
    simulate_request_stream,
)


def random_instance(rng, n, exact=False):
    if exact:
        weights = [Fraction(int(w)) for w in rng.integers(1, 20, size=n)]
        costs = sorted(Fraction(int(c)) for c in rng.integers(0, 10, size=n))
    else:
        weights = (1.0 - rng.random(n)).tolist()
        costs = np.sort(rng.random(n)).tolist()
    return validate_instance(weights, costs)


def random_table_policy(inst, rng):
    n = inst.n
    table = {}
    for k in range(1, n + 1):
        for unseen in itertools.combinations(range(n), k):
            for vacant in itertools.combinations(range(n), k):
                unseen_mask = sum(1 << i for i in unseen)
                vacant_mask = sum(1 << j for j in vacant)
                table[(unseen_mask, vacant_mask)] = int(rng.choice(vacant))
    return TablePolicy(table)


class OccupiedSlotPolicy(SlotPolicy):
    name = 'broken'

    def choose(self, inst, state):
        return max(set(range(inst.n)) - state.vacant, default=inst.n)


@pytest.mark.parametrize("vacant, expected", [({0, 1, 2}, 0), ({2, 4}, 2), ({6}, 6)])
def test_fcfs_picks_cheapest_vacant_slot(vacant, expected):
    inst = validate_instance([1] * 7, range(7))
    state = GameState(frozenset(range(len(vacant))), frozenset(vacant))
    assert fcfs_policy().choose(inst, state) == expected


def test_game_state_sizes_must_match():
    with pytest.raises(BadParameters):
        GameState(frozenset({0, 1}), frozenset({0}))


@pytest.mark.parametrize("weights, costs, order, expected", [
    ((2, 1), (0, 1), (1, 0), 2),
    ((2, 1), (0, 1), (0, 1), 1),
    ((3, 1, 2), (0, 1, 2), (2, 0, 1), 5),
])
def test_fcfs_allocate(weights, costs, order, expected):
    inst = validate_instance(weights, costs)
    allocation = fcfs_allocate(inst, DrawSequence(order))
    assert allocation.items_by_slot() == order
    assert allocation_cost(inst, allocation) == expected


def test_exact_expected_cost_examples():
    assert exact_expected_cost(validate_instance((2, 1), (0, 1)), exact=True).expected_cost == Fraction(4, 3)
    assert exact_expected_cost(validate_instance((1, 1), (0, 1)), exact=True).expected_cost == 1
    constant = validate_instance((2, 1), (5, 5))
    assert exact_expected_cost(constant, exact=True).expected_cost == 15
    assert exact_expected_cost(constant, OpeningPolicy((1,)), exact=True).expected_cost == 15
    assert exact_expected_cost(constant).stderr == 0


def test_exact_limits():
    with pytest.raises(TooLarge):
        exact_expected_cost(validate_instance([1] * 21, range(21)))
    with pytest.raises(TooLarge):
        exact_expected_cost(validate_instance([1] * 11, range(11)), OpeningPolicy((1,)))
    with pytest.raises(TooLarge):
        optimal_stateless_value(validate_instance([1] * 11, range(11)))


def test_fcfs_recursion_agrees_with_general_recursion():
    rng = np.random.default_rng(21)
    for _ in range(20):
        inst = random_instance(rng, int(rng.integers(1, 7)), exact=True)
        fast = exact_expected_cost(inst, exact=True).expected_cost
        general = exact_expected_cost(inst, OpeningPolicy(()), exact=True).expected_cost
        assert fast == general


def test_optimal_stateless_examples():
    value, policy = optimal_stateless_value(validate_instance((2, 1), (0, 1)), exact=True)
    assert value == Fraction(4, 3)
    for (unseen_mask, vacant_mask), slot in policy.table.items():
        assert slot == (vacant_mask & -vacant_mask).bit_length() - 1

    value, policy = optimal_stateless_value(validate_instance((1, 1), (0, 1)), exact=True)
    assert value == 1
    assert policy.table[(0b11, 0b11)] == 0

    value, policy = optimal_stateless_value(validate_instance((3,), (2,)))
    assert value == 6
    assert policy.table == {(1, 1): 0}


def test_fcfs_is_optimal_among_stateless_policies():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        inst = random_instance(rng, int(rng.integers(2, 8)))
        value, _ = optimal_stateless_value(inst)
        assert value == pytest.approx(exact_expected_cost(inst).expected_cost, abs=1e-9)


def test_fcfs_is_optimal_exact_rational():
    rng = np.random.default_rng(2025)
    for _ in range(20):
        inst = random_instance(rng, int(rng.integers(2, 6)), exact=True)
        value, _ = optimal_stateless_value(inst, exact=True)
        assert value == exact_expected_cost(inst, exact=True).expected_cost


def test_random_stateless_policies_never_beat_fcfs():
    rng = np.random.default_rng(31)
    for _ in range(30):
        inst = random_instance(rng, int(rng.integers(2, 6)), exact=True)
        fcfs = exact_expected_cost(inst, exact=True).expected_cost
        other = exact_expected_cost(inst, random_table_policy(inst, rng), exact=True).expected_cost
        assert other >= fcfs


def test_cost_is_linear_in_the_cost_vector():
    rng = np.random.default_rng(41)
    for _ in range(100):
        n = int(rng.integers(1, 7))
        weights = (1.0 - rng.random(n)).tolist()
        c1 = np.sort(rng.random(n))
        c2 = np.sort(rng.random(n))
        alpha, beta = rng.random(2) * 3
        e1 = exact_expected_cost(validate_instance(weights, c1.tolist())).expected_cost
        e2 = exact_expected_cost(validate_instance(weights, c2.tolist())).expected_cost
        mixed = exact_expected_cost(validate_instance(weights, (alpha * c1 + beta * c2).tolist())).expected_cost
        assert mixed == pytest.approx(alpha * e1 + beta * e2, rel=1e-9, abs=1e-12)


def test_playing_the_cheapest_slot_first_never_hurts():
    rng = np.random.default_rng(51)
    for _ in range(40):
        inst = random_instance(rng, int(rng.integers(2, 6)), exact=True)
        for first in range(inst.n):
            late = exact_expected_cost(inst, OpeningPolicy((first,)), exact=True).expected_cost
            early = exact_expected_cost(inst, OpeningPolicy((0, first)), exact=True).expected_cost
            assert early <= late


def test_invalid_slot_is_reported():
    inst = validate_instance((1, 1), (0, 1))
    with pytest.raises(InvalidSlot):
        exact_expected_cost(inst, OccupiedSlotPolicy())
    with pytest.raises(InvalidSlot):
        simulate_request_stream(inst, OccupiedSlotPolicy(), RandomSource(0))


def test_monte_carlo_constant_costs():
    inst = validate_instance((2, 1, 3), (5, 5, 5))
    result = monte_carlo_expected_cost(inst, trials=5000, rng=RandomSource(1))
    assert result.expected_cost == 30
    assert result.stderr == 0
    assert result.trials == 5000


def test_monte_carlo_single_trial_is_degenerate():
    result = monte_carlo_expected_cost(validate_instance((2, 1), (0, 1)), trials=1, rng=RandomSource(1))
    assert result.degenerate
    assert result.stderr == 0
    with pytest.raises(BadParameters):
        monte_carlo_expected_cost(validate_instance((2, 1), (0, 1)), trials=0)


def test_monte_carlo_matches_exact():
    inst = validate_instance((2, 1), (0, 1))
    result = monte_carlo_expected_cost(inst, trials=10 ** 6, rng=RandomSource(7))
    assert abs(result.expected_cost - 4 / 3) <= 4 * result.stderr
    assert result.method == 'mc'


def test_monte_carlo_general_policy_matches_exact():
    inst = validate_instance((5, 3, 2, 1), (0, 1, 3, 4))
    policy = OpeningPolicy((2,))
    exact = exact_expected_cost(inst, policy).expected_cost
    result = monte_carlo_expected_cost(inst, policy, trials=20000, rng=RandomSource(8))
    assert abs(result.expected_cost - exact) <= 4 * result.stderr


def test_monte_carlo_is_independent_of_thread_count():
    inst = validate_instance((4, 3, 2, 1, 1), (0, 1, 2, 2, 3))
    one = monte_carlo_expected_cost(inst, trials=9000, rng=RandomSource(9), threads=1)
    many = monte_carlo_expected_cost(inst, trials=9000, rng=RandomSource(9), threads=4)
    assert one == many


def test_simulate_request_stream_single_item():
    outcome = simulate_request_stream(validate_instance((1,), (0,)), FcfsPolicy(), RandomSource(0))
    assert dict(outcome.allocation.slot_of) == {0: 0}
    assert outcome.total_requests == 1


def test_simulate_request_stream_first_occurrence_order():
    inst = validate_instance((2, 1), (0, 1))
    rng = RandomSource(3)
    outcomes = [simulate_request_stream(inst, FcfsPolicy(), rng) for _ in range(6000)]
    heavy_first = Counter(outcome.allocation.slot_of[0] for outcome in outcomes)[0]
    assert heavy_first / 6000 == pytest.approx(2 / 3, abs=0.03)
    assert all(outcome.total_requests >= 2 for outcome in outcomes)


def test_simulate_request_stream_cap():
    with pytest.raises(CapExceeded):
        simulate_request_stream(validate_instance((1, 1, 1, 1), (0, 1, 2, 3)), FcfsPolicy(), RandomSource(0), cap=2)


@pytest.mark.slow
def test_stream_simulator_agrees_with_exact_cost():
    inst = validate_instance((3, 2, 1), (0, 1, 2))
    exact = exact_expected_cost(inst).expected_cost
    result = monte_carlo_stream_cost(inst, trials=10 ** 5, rng=RandomSource(10))
    assert abs(result.expected_cost - exact) <= 4 * result.stderr
    assert result.mean_requests > 3


def test_competitive_ratio():
    inst = validate_instance((2, 1), (0, 1))
    assert competitive_ratio(inst, exact_expected_cost(inst, exact=True), exact=True) == Fraction(4, 3)
    flat = validate_instance((1, 1, 1), (0, 1, 2))
    assert competitive_ratio(flat, exact_expected_cost(flat)) == pytest.approx(1.0)
    zeros = validate_instance((2, 1), (0, 0))
    with pytest.raises(ZeroOptimum):
        competitive_ratio(zeros, exact_expected_cost(zeros))


def test_evaluation_result_rejects_negative_stderr():
    with pytest.raises(BadParameters):
        EvaluationResult(1.0, stderr=-1.0)


def test_ratio_at_most_one_plus_harmonic_on_zero_one_costs():
    rng = np.random.default_rng(61)
    for _ in range(500):
        n = int(rng.integers(2, 8))
        k = int(rng.integers(1, n))
        inst = validate_instance((1.0 - rng.random(n)).tolist(), [0] * k + [1] * (n - k))
        ratio = competitive_ratio(inst, exact_expected_cost(inst))
        assert ratio <= 1 + harmonic(k) + 1e-12


def test_ratio_at_most_two_on_concave_costs():
    rng = np.random.default_rng(62)
    for _ in range(500):
        n = int(rng.integers(2, 8))
        steps = np.sort(1.0 - rng.random(n - 1))[::-1]
        costs = np.concatenate(([0.0], np.cumsum(steps))).tolist()
        inst = validate_instance((1.0 - rng.random(n)).tolist(), costs)
        assert competitive_ratio(inst, exact_expected_cost(inst)) <= 2 + 1e-12


@pytest.mark.slow
def test_monte_carlo_ratio_bound_at_scale():
    rng = np.random.default_rng(63)
    n, k = 200, 20
    inst = validate_instance((1.0 - rng.random(n)).tolist(), [0] * k + [1] * (n - k))
    result = monte_carlo_expected_cost(inst, trials=10 ** 5, rng=RandomSource(64))
    opt = opt_cost(inst).cost
    assert result.expected_cost / opt <= 1 + harmonic(k) + 4 * result.stderr / opt
