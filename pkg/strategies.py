#!/usr/bin/env python3
"""
Slot policies and their evaluation.

A stateless policy picks a vacant slot from the game state (W, V): the items
not yet requested and the slots still vacant. FCFS picks the cheapest vacant
slot, i.e. the j-th distinct item requested goes to slot j.

Expected cost is evaluated through the compact game: draw the items without
replacement from f; before each draw the policy commits to a slot, and the
drawn item pays f_i * c_slot. Evaluators:
    exact_expected_cost        recursion over game states (FCFS over subsets)
    optimal_stateless_value    DP minimizing over the slot choice at every state
    monte_carlo_expected_cost  sampled draw sequences, run in seeded blocks
    simulate_request_stream    the original i.i.d. request model
"""

import functools
import itertools
import math
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import FrozenSet, NamedTuple, Optional

import numpy as np
from tqdm import tqdm

import config
from errors import BadParameters, CapExceeded, InvalidSlot, TooLarge, ZeroOptimum
from sampling import RandomSource, draw_batch, draw_prefix_batch
from slot_allocation import Allocation, as_numbers, opt_cost


def _bits(mask):
    """Indices of the set bits of mask, ascending."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _mask_of(indices):
    mask = 0
    for i in indices:
        mask |= 1 << i
    return mask


@dataclass(frozen=True)
class GameState:
    unseen: FrozenSet[int]
    vacant: FrozenSet[int]

    def __post_init__(self):
        if len(self.unseen) != len(self.vacant):
            raise BadParameters(
                f"{len(self.unseen)} unseen items but {len(self.vacant)} vacant slots"
            )

    @classmethod
    def initial(cls, n):
        everything = frozenset(range(n))
        return cls(everything, everything)

    @classmethod
    def from_masks(cls, unseen_mask, vacant_mask):
        return cls(frozenset(_bits(unseen_mask)), frozenset(_bits(vacant_mask)))

    def masks(self):
        return _mask_of(self.unseen), _mask_of(self.vacant)


class SlotPolicy(ABC):
    """Deterministic stateless policy: (instance, game state) -> vacant slot."""

    name = 'policy'

    @abstractmethod
    def choose(self, inst, state):
        """Return the slot for the next newly requested item."""

    def choose_mask(self, inst, unseen_mask, vacant_mask):
        return self.choose(inst, GameState.from_masks(unseen_mask, vacant_mask))


class FcfsPolicy(SlotPolicy):
    """First come, first served: the cheapest (lowest-index) vacant slot."""

    name = 'fcfs'

    def choose(self, inst, state):
        return min(state.vacant)

    def choose_mask(self, inst, unseen_mask, vacant_mask):
        return (vacant_mask & -vacant_mask).bit_length() - 1


def fcfs_policy():
    return FcfsPolicy()


class TablePolicy(SlotPolicy):
    """Policy read from a table keyed by (unseen mask, vacant mask)."""

    name = 'optimal-dp'

    def __init__(self, table):
        self.table = dict(table)

    def choose(self, inst, state):
        return self.choose_mask(inst, *state.masks())

    def choose_mask(self, inst, unseen_mask, vacant_mask):
        try:
            return self.table[(unseen_mask, vacant_mask)]
        except KeyError:
            raise InvalidSlot(f"No table entry for state ({unseen_mask:b}, {vacant_mask:b})")


class OpeningPolicy(SlotPolicy):
    """Plays a fixed sequence of slots for the first items, then FCFS."""

    name = 'opening'

    def __init__(self, opening):
        self.opening = tuple(opening)

    def choose(self, inst, state):
        step = inst.n - len(state.vacant)
        if step < len(self.opening) and self.opening[step] in state.vacant:
            return self.opening[step]
        return min(state.vacant)


def _checked_choice(policy, inst, unseen_mask, vacant_mask):
    slot = policy.choose_mask(inst, unseen_mask, vacant_mask)
    if not 0 <= slot < inst.n or not (vacant_mask >> slot) & 1:
        raise InvalidSlot(f"{policy.name} chose slot {slot}, which is not vacant")
    return slot


@dataclass(frozen=True)
class EvaluationResult:
    expected_cost: float
    stderr: float = 0.0
    trials: int = 0
    std: float = 0.0
    method: str = 'exact'
    degenerate: bool = False
    mean_requests: Optional[float] = None

    def __post_init__(self):
        if self.stderr < 0:
            raise BadParameters("stderr cannot be negative")

    def to_dict(self):
        data = {
            'expected_cost': float(self.expected_cost),
            'stderr': float(self.stderr),
            'trials': self.trials,
            'method': self.method,
            'degenerate': self.degenerate,
        }
        if self.mean_requests is not None:
            data['mean_requests'] = self.mean_requests
        return data


def fcfs_allocate(inst, seq):
    """Put the t-th item of the draw sequence in slot t."""
    if len(seq) != inst.n:
        raise BadParameters(f"Draw sequence has {len(seq)} items, instance has {inst.n}")
    return Allocation.from_order(tuple(seq))


class StreamOutcome(NamedTuple):
    allocation: Allocation
    total_requests: int


def default_request_cap(inst):
    """ceil(50 * (sum f / min f) * max(1, ln n)), well above the coupon-collector mean."""
    weights = inst.f.weights
    spread = float(sum(weights)) / float(min(weights))
    return math.ceil(config.REQUEST_CAP_FACTOR * spread * max(1.0, math.log(inst.n)))


def simulate_request_stream(inst, policy, rng, cap=None):
    """
    Play the i.i.d. request model until every item has been requested.

    Requests are drawn from the normalized frequencies; each first request of
    an item asks the policy for a slot given the current (W, V); repeats
    change nothing.

    Returns:
        StreamOutcome(allocation, total_requests)
    """
    n = inst.n
    cap = default_request_cap(inst) if cap is None else cap
    cum = np.cumsum(np.asarray(inst.f.weights, dtype=np.float64))
    chunk = max(64, 4 * n)

    unseen_mask = vacant_mask = (1 << n) - 1
    slot_of = {}
    requests = 0
    while unseen_mask:
        size = min(chunk, cap - requests)
        if size <= 0:
            raise CapExceeded(f"{len(slot_of)} of {n} items seen after {requests} requests (cap {cap})")
        draws = np.minimum(np.searchsorted(cum, rng.random(size) * cum[-1], side='right'), n - 1)
        for item in draws.tolist():
            requests += 1
            if (unseen_mask >> item) & 1:
                slot = _checked_choice(policy, inst, unseen_mask, vacant_mask)
                slot_of[item] = slot
                unseen_mask ^= 1 << item
                vacant_mask ^= 1 << slot
                if not unseen_mask:
                    break
    return StreamOutcome(Allocation(slot_of, n), requests)


def _fcfs_exact(inst, exact):
    """E[cost] of FCFS by recursion over the set W of unseen items."""
    n = inst.n
    weights = as_numbers(inst.f.weights, exact)
    costs = as_numbers(inst.c.costs, exact)
    size = 1 << n
    values = [0] * size
    weight_sum = [0] * size
    for mask in range(1, size):
        low = mask & -mask
        weight_sum[mask] = weight_sum[mask ^ low] + weights[low.bit_length() - 1]
        slot = n - bin(mask).count('1')
        acc = 0
        for item in _bits(mask):
            acc += weights[item] * (weights[item] * costs[slot] + values[mask ^ (1 << item)])
        values[mask] = acc / weight_sum[mask]
    return values[size - 1]


def _policy_exact(inst, policy, exact):
    weights = as_numbers(inst.f.weights, exact)
    costs = as_numbers(inst.c.costs, exact)

    @functools.lru_cache(maxsize=None)
    def value(unseen_mask, vacant_mask):
        if not unseen_mask:
            return 0
        slot = _checked_choice(policy, inst, unseen_mask, vacant_mask)
        rest_slots = vacant_mask ^ (1 << slot)
        total = 0
        acc = 0
        for item in _bits(unseen_mask):
            total += weights[item]
            acc += weights[item] * (weights[item] * costs[slot] + value(unseen_mask ^ (1 << item), rest_slots))
        return acc / total

    full = (1 << inst.n) - 1
    return value(full, full)


def exact_expected_cost(inst, policy=None, exact=False):
    """
    Exact expected cost of a stateless policy (FCFS when policy is None).

    E(W, V) = sum over i in W of (f_i / f(W)) * (f_i * c_s + E(W - i, V - s)),
    s = policy(W, V), E(empty, empty) = 0.
    """
    policy = policy or FcfsPolicy()
    if isinstance(policy, FcfsPolicy):
        if inst.n > config.FCFS_EXACT_LIMIT:
            raise TooLarge(f"Exact FCFS evaluation is limited to n <= {config.FCFS_EXACT_LIMIT}")
        cost = _fcfs_exact(inst, exact)
    else:
        if inst.n > config.POLICY_EXACT_LIMIT:
            raise TooLarge(f"Exact policy evaluation is limited to n <= {config.POLICY_EXACT_LIMIT}")
        cost = _policy_exact(inst, policy, exact)
    return EvaluationResult(cost, method='exact')


def _masks_by_size(n):
    by_size = [[] for _ in range(n + 1)]
    for k in range(n + 1):
        for combo in itertools.combinations(range(n), k):
            by_size[k].append(_mask_of(combo))
    return by_size


def optimal_stateless_value(inst, exact=False):
    """
    Minimum expected cost over deterministic stateless policies, by DP over
    game states (W, V) with |W| = |V|.

    value(W, V) = min over j in V of
        sum over i in W of (f_i / f(W)) * (f_i * c_j + value(W - i, V - j)).

    Returns:
        (value, TablePolicy) with ties broken toward the lowest slot index.
    """
    n = inst.n
    if n > config.POLICY_EXACT_LIMIT:
        raise TooLarge(f"The DP is limited to n <= {config.POLICY_EXACT_LIMIT}")
    weights = as_numbers(inst.f.weights, exact)
    costs = as_numbers(inst.c.costs, exact)
    by_size = _masks_by_size(n)

    best = {(0, 0): 0}
    table = {}
    for k in range(1, n + 1):
        for unseen_mask in by_size[k]:
            items = list(_bits(unseen_mask))
            total = sum(weights[i] for i in items)
            square_share = sum(weights[i] * weights[i] for i in items) / total
            for vacant_mask in by_size[k]:
                best_value = best_slot = None
                for slot in _bits(vacant_mask):
                    rest_slots = vacant_mask ^ (1 << slot)
                    future = sum(weights[i] * best[(unseen_mask ^ (1 << i), rest_slots)] for i in items)
                    candidate = costs[slot] * square_share + future / total
                    # Near-ties go to the lower slot
                    if best_value is None or (
                        candidate < best_value if exact
                        else candidate < best_value - 1e-12 * max(1.0, abs(best_value))
                    ):
                        best_value, best_slot = candidate, slot
                best[(unseen_mask, vacant_mask)] = best_value
                table[(unseen_mask, vacant_mask)] = best_slot

    full = (1 << n) - 1
    return best[(full, full)], TablePolicy(table)


def _fcfs_block_costs(inst, rng, size):
    weights = np.asarray(inst.f.weights, dtype=np.float64)
    costs = np.asarray(inst.c.costs, dtype=np.float64)
    m = inst.c.non_maximum_count
    if m <= config.PREFIX_SAMPLING_LIMIT:
        # Slots from m on all cost c_max, so only the first m draws matter
        top = costs[-1]
        prefix = draw_prefix_batch(inst.f, m, rng, size)
        return top * weights.sum() - ((top - costs[:m]) * weights[prefix]).sum(axis=1)
    orders = draw_batch(inst.f, rng, size)
    return weights[orders] @ costs


def _policy_block_costs(inst, policy, rng, size):
    weights = inst.f.weights
    costs = inst.c.costs
    full = (1 << inst.n) - 1
    results = np.empty(size)
    for row, order in enumerate(draw_batch(inst.f, rng, size).tolist()):
        unseen_mask = vacant_mask = full
        total = 0.0
        for item in order:
            slot = _checked_choice(policy, inst, unseen_mask, vacant_mask)
            total += weights[item] * costs[slot]
            unseen_mask ^= 1 << item
            vacant_mask ^= 1 << slot
        results[row] = total
    return results


def _block_stats(samples):
    mean = float(samples.mean())
    return len(samples), mean, float(((samples - mean) ** 2).sum())


def _merge_stats(a, b):
    """Combine (count, mean, sum of squared deviations) of two blocks."""
    count_a, mean_a, m2_a = a
    count_b, mean_b, m2_b = b
    count = count_a + count_b
    delta = mean_b - mean_a
    mean = mean_a + delta * count_b / count
    return count, mean, m2_a + m2_b + delta * delta * count_a * count_b / count


def _summarize(stats, method, mean_requests=None):
    count, mean, m2 = stats
    if count <= 1:
        return EvaluationResult(mean, 0.0, count, 0.0, method, degenerate=True, mean_requests=mean_requests)
    std = math.sqrt(max(m2, 0.0) / (count - 1))
    return EvaluationResult(mean, std / math.sqrt(count), count, std, method, mean_requests=mean_requests)


def monte_carlo_expected_cost(inst, policy=None, trials=config.DEFAULT_TRIALS, rng=None,
                              progress=False, threads=None):
    """
    Sample mean of the allocation cost over `trials` independent draw sequences.

    Trials run in fixed blocks, each with its own stream spawned from rng, so the
    result does not depend on how many threads run them.
    """
    if trials < 1:
        raise BadParameters("Monte Carlo needs at least one trial")
    if rng is None:
        rng = RandomSource(config.DEFAULT_SEED)
    policy = policy or FcfsPolicy()

    sizes = [config.MC_BLOCK_SIZE] * (trials // config.MC_BLOCK_SIZE)
    if trials % config.MC_BLOCK_SIZE:
        sizes.append(trials % config.MC_BLOCK_SIZE)
    streams = rng.spawn(len(sizes))

    def run_block(stream, size):
        if isinstance(policy, FcfsPolicy):
            return _block_stats(_fcfs_block_costs(inst, stream, size))
        return _block_stats(_policy_block_costs(inst, policy, stream, size))

    with ThreadPoolExecutor(max_workers=threads or config.THREADS) as executor:
        blocks = list(tqdm(executor.map(run_block, streams, sizes), total=len(sizes),
                           desc=f"Monte Carlo ({policy.name})", disable=not progress))

    stats = blocks[0]
    for block in blocks[1:]:
        stats = _merge_stats(stats, block)
    return _summarize(stats, 'mc')


def monte_carlo_stream_cost(inst, policy=None, trials=1000, rng=None, cap=None, progress=False):
    """Mean allocation cost (and mean request count) of the i.i.d. request model."""
    if trials < 1:
        raise BadParameters("Monte Carlo needs at least one trial")
    if rng is None:
        rng = RandomSource(config.DEFAULT_SEED)
    policy = policy or FcfsPolicy()
    weights = inst.f.weights
    costs = inst.c.costs

    samples = np.empty(trials)
    requests = 0
    for t in tqdm(range(trials), desc="Request streams", disable=not progress):
        outcome = simulate_request_stream(inst, policy, rng, cap=cap)
        samples[t] = sum(weights[i] * costs[s] for i, s in outcome.allocation.slot_of.items())
        requests += outcome.total_requests
    return _summarize(_block_stats(samples), 'stream', mean_requests=requests / trials)


def competitive_ratio(inst, result, exact=False):
    """Expected cost over the offline optimum."""
    optimum = opt_cost(inst, exact=exact).cost
    if optimum == 0:
        raise ZeroOptimum("The offline optimum is 0, so the ratio is undefined")
    return result.expected_cost / optimum
