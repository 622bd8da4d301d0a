#!/usr/bin/env python3
"""
Sampling without replacement from a frequency distribution.

Sequential sampling draws the next item with probability f_i / (weight still
remaining). The merge sampler permutes two parts of the item set separately
and interleaves them, taking the head of a part with probability proportional
to the part's remaining weight; its output has the same distribution. Exact
oracles enumerate permutations for small n, and the batched samplers feed the
Monte Carlo evaluators.
"""

import itertools
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

import config
from errors import NotAPermutation, TooLarge
from slot_allocation import as_numbers


@dataclass(frozen=True)
class DrawSequence:
    """Position t holds the t-th distinct item drawn."""

    order: Tuple[int, ...]

    def __post_init__(self):
        order = tuple(int(i) for i in self.order)
        if sorted(order) != list(range(len(order))):
            raise NotAPermutation(f"{order} is not a permutation of 0..{len(order) - 1}")
        object.__setattr__(self, 'order', order)

    def __len__(self):
        return len(self.order)

    def __iter__(self):
        return iter(self.order)

    def positions(self):
        """Tuple mapping each item to its 0-based position."""
        where = [0] * len(self.order)
        for position, item in enumerate(self.order):
            where[item] = position
        return tuple(where)


class RandomSource:
    """Seeded numpy generator; identical seeds give identical draws."""

    def __init__(self, seed=0, seed_sequence=None):
        self._seed_sequence = seed_sequence if seed_sequence is not None else np.random.SeedSequence(seed)
        self.seed = self._seed_sequence.entropy
        self.generator = np.random.default_rng(self._seed_sequence)

    def random(self, size=None):
        return self.generator.random(size)

    def spawn(self, count):
        """Independent child sources, one per block or worker."""
        return [RandomSource(seed_sequence=child) for child in self._seed_sequence.spawn(count)]


def _weights_of(f):
    return np.asarray(f.weights, dtype=np.float64)


def draw_without_replacement(f, rng):
    """
    Draw a full permutation of the items by sampling from f without replacement.

    Each draw inverts the cumulative weight of the items still remaining.
    """
    weights = _weights_of(f)
    remaining = list(range(f.n))
    order = []
    while remaining:
        cum = np.cumsum(weights[remaining])
        target = rng.random() * cum[-1]
        pick = min(int(np.searchsorted(cum, target, side='right')), len(remaining) - 1)
        order.append(remaining.pop(pick))
    return DrawSequence(tuple(order))


def draw_batch(f, rng, size):
    """
    `size` independent draw sequences as a (size, n) array.

    Item i gets an exponential key with rate f_i; sorting the keys orders the
    items exactly as sequential sampling without replacement would.
    """
    weights = _weights_of(f)
    keys = rng.generator.standard_exponential((size, f.n)) / weights
    return np.argsort(keys, axis=1, kind='stable')


def draw_prefix_batch(f, m, rng, size):
    """
    First m positions of `size` independent draw sequences, as a (size, m) array.

    Draw t picks a point in the weight still remaining and maps it back onto the
    full cumulative axis by stepping over the intervals of items already drawn.
    """
    weights = _weights_of(f)
    n = f.n
    m = min(m, n)
    cum = np.cumsum(weights)
    starts = cum - weights
    total = cum[-1]
    chosen = np.empty((size, m), dtype=np.int64)
    removed = np.zeros(size)

    for t in range(m):
        rows = np.arange(size)
        picks = np.empty(size, dtype=np.int64)
        while rows.size:
            target = rng.random(rows.size) * (total - removed[rows])
            if t:
                taken = np.sort(chosen[rows, :t], axis=1)
                for k in range(t):
                    item = taken[:, k]
                    target = np.where(target >= starts[item], target + weights[item], target)
            pick = np.minimum(np.searchsorted(cum, target, side='right'), n - 1)
            # Rounding can land on an item already drawn; redraw those rows
            clash = (chosen[rows, :t] == pick[:, None]).any(axis=1) if t else np.zeros(rows.size, bool)
            picks[rows[~clash]] = pick[~clash]
            rows = rows[clash]
        chosen[:, t] = picks
        removed += weights[picks]
    return chosen


def _merge_permute(items, weights, rng):
    """Mergesort-shaped sampler: permute both halves, then merge by weight."""
    if len(items) <= 1:
        return list(items)
    middle = len(items) // 2
    return _merge(_merge_permute(items[:middle], weights, rng),
                  _merge_permute(items[middle:], weights, rng), weights, rng)


def _merge(left, right, weights, rng):
    merged = []
    left_weight = math.fsum(weights[i] for i in left)
    right_weight = math.fsum(weights[i] for i in right)
    left_at = right_at = 0
    while left_at < len(left) and right_at < len(right):
        if rng.random() * (left_weight + right_weight) < left_weight:
            item = left[left_at]
            left_at += 1
            left_weight -= weights[item]
        else:
            item = right[right_at]
            right_at += 1
            right_weight -= weights[item]
        merged.append(item)
    merged.extend(left[left_at:])
    merged.extend(right[right_at:])
    return merged


def _split(n, part):
    part = sorted(set(int(i) for i in part))
    for item in part:
        if not 0 <= item < n:
            raise NotAPermutation(f"Item {item} is outside 0..{n - 1}")
    members = set(part)
    rest = [i for i in range(n) if i not in members]
    return part, rest


def merge_sample(f, part, rng):
    """
    Sample a draw sequence by permuting `part` and its complement separately,
    then merging them weight-proportionally.

    An empty side degenerates to the plain mergesort-shaped sampler.
    """
    weights = f.weights
    part, rest = _split(f.n, part)
    if not part or not rest:
        return DrawSequence(tuple(_merge_permute(list(range(f.n)), weights, rng)))
    merged = _merge(_merge_permute(part, weights, rng), _merge_permute(rest, weights, rng), weights, rng)
    return DrawSequence(tuple(merged))


def _merge_outcomes(left, right, weights):
    """Every interleaving of two fixed sequences with its coin-flip probability."""
    if not left or not right:
        yield tuple(left) + tuple(right), 1
        return
    left_weight = sum(weights[i] for i in left)
    right_weight = sum(weights[i] for i in right)
    take_left = left_weight / (left_weight + right_weight)
    for tail, prob in _merge_outcomes(left[1:], right, weights):
        yield (left[0],) + tail, take_left * prob
    for tail, prob in _merge_outcomes(left, right[1:], weights):
        yield (right[0],) + tail, (1 - take_left) * prob


def _permute_distribution(items, weights):
    if len(items) <= 1:
        return {tuple(items): 1}
    middle = len(items) // 2
    return _combine(_permute_distribution(items[:middle], weights),
                    _permute_distribution(items[middle:], weights), weights)


def _combine(left_dist, right_dist, weights):
    dist = {}
    for left, left_prob in left_dist.items():
        for right, right_prob in right_dist.items():
            for merged, prob in _merge_outcomes(left, right, weights):
                dist[merged] = dist.get(merged, 0) + left_prob * right_prob * prob
    return dist


def merge_distribution(f, part, exact=False):
    """Exact distribution of merge_sample, by enumerating every branch."""
    if f.n > config.EXACT_ENUMERATION_LIMIT:
        raise TooLarge(f"Branch enumeration is limited to n <= {config.EXACT_ENUMERATION_LIMIT}")
    weights = as_numbers(f.weights, exact)
    part, rest = _split(f.n, part)
    if not part or not rest:
        return _permute_distribution(list(range(f.n)), weights)
    return _combine(_permute_distribution(part, weights), _permute_distribution(rest, weights), weights)


def permutation_probability(f, seq, exact=False):
    """
    Probability that sampling without replacement yields seq:
    the product over t of f(i_t) / (f(i_t) + ... + f(i_n)).
    """
    order = seq.order if isinstance(seq, DrawSequence) else DrawSequence(tuple(seq)).order
    if len(order) != f.n:
        raise NotAPermutation(f"Sequence has {len(order)} items, distribution has {f.n}")
    weights = as_numbers(f.weights, exact)
    prob = 1
    tail = sum(weights)
    for item in order:
        prob *= weights[item] / tail
        tail -= weights[item]
    return prob


def exact_order_distribution(f, exact=False):
    """Probability of every draw order, keyed by order tuple."""
    if f.n > config.EXACT_ENUMERATION_LIMIT:
        raise TooLarge(f"Enumerating {f.n}! orders is over the n <= {config.EXACT_ENUMERATION_LIMIT} limit")
    return {
        order: permutation_probability(f, DrawSequence(order), exact=exact)
        for order in itertools.permutations(range(f.n))
    }


def expected_rank_frequencies(f, exact=False):
    """E[f(i_j)] for every position j, by exact enumeration."""
    weights = as_numbers(f.weights, exact)
    expectations = [0] * f.n
    for order, prob in exact_order_distribution(f, exact=exact).items():
        for position, item in enumerate(order):
            expectations[position] += prob * weights[item]
    return expectations


def expected_rank_frequency(f, j, exact=False, rng=None, trials=config.DEFAULT_TRIALS):
    """
    E[f(i_j)], the expected weight of the item drawn at position j (0-based).

    Exact for n within the enumeration limit; otherwise a Monte Carlo mean
    over `trials` draw sequences (exact mode has no fallback).
    """
    if not 0 <= j < f.n:
        raise IndexError(f"Position {j} is outside 0..{f.n - 1}")
    if f.n <= config.EXACT_ENUMERATION_LIMIT:
        return expected_rank_frequencies(f, exact=exact)[j]
    if exact:
        raise TooLarge(f"Exact mode is limited to n <= {config.EXACT_ENUMERATION_LIMIT}")
    rng = rng or RandomSource(config.DEFAULT_SEED)
    weights = _weights_of(f)
    total = 0.0
    done = 0
    while done < trials:
        size = min(config.MC_BLOCK_SIZE, trials - done)
        prefix = draw_prefix_batch(f, j + 1, rng, size) if j < config.PREFIX_SAMPLING_LIMIT else draw_batch(f, rng, size)
        total += float(weights[prefix[:, j]].sum())
        done += size
    return total / trials


def expected_position(f, i, exact=False):
    """
    E[j_i], the expected 1-based position of item i.

    Item h precedes item i with probability f_h / (f_i + f_h), so
    E[j_i] = 1 + sum over h != i of f_h / (f_i + f_h).
    """
    weights = as_numbers(f.weights, exact)
    return 1 + sum(weights[h] / (weights[i] + weights[h]) for h in range(f.n) if h != i)
