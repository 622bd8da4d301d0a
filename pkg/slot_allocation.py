#!/usr/bin/env python3
"""
Online Slot Allocation instance model.

An instance pairs item frequencies f (positive, not necessarily normalized)
with slot costs c_0 <= c_1 <= ... <= c_{n-1}. Items and slots are 0-based.
This module validates instances, computes the offline optimum and the cost of
any allocation, classifies cost vectors, and loads/saves instance files.
"""

import json
import math
import os
import sys
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from types import MappingProxyType
from typing import Mapping, NamedTuple, Optional, Tuple

from errors import (
    DecreasingCosts,
    EmptyDistribution,
    InstanceFileError,
    InvalidAllocation,
    LengthMismatch,
    NegativeCost,
    NonFiniteCost,
    NonPositiveWeight,
    OutputWriteError,
    PartialAllocation,
)


def as_numbers(values, exact=False):
    """Return values as a tuple of Fractions (exact mode) or floats."""
    if exact:
        return tuple(Fraction(v) for v in values)
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class FrequencyDistribution:
    """Positive item weights f_0..f_{n-1}; stored unnormalized."""

    weights: Tuple[float, ...]

    def __post_init__(self):
        weights = tuple(self.weights)
        if not weights:
            raise EmptyDistribution("A frequency distribution needs at least one item.")
        for i, w in enumerate(weights):
            if not w > 0 or (isinstance(w, float) and math.isinf(w)):
                raise NonPositiveWeight(f"Weight of item {i} must be a positive finite number, got {w!r}.")
        object.__setattr__(self, 'weights', weights)

    @property
    def n(self):
        return len(self.weights)

    @property
    def total(self):
        return sum(self.weights)

    def normalize(self, exact=False):
        """Return the weights scaled to sum to 1."""
        weights = as_numbers(self.weights, exact)
        if exact:
            total = sum(weights)
        else:
            total = math.fsum(weights)
        return tuple(w / total for w in weights)

    def sorted_desc(self):
        """Item indices by decreasing weight, ties to the lower index."""
        return sorted(range(self.n), key=lambda i: (-self.weights[i], i))


@dataclass(frozen=True)
class CostVector:
    """Non-decreasing, non-negative slot costs."""

    costs: Tuple[float, ...]

    def __post_init__(self):
        costs = tuple(self.costs)
        for j, cost in enumerate(costs):
            if not math.isfinite(cost):
                raise NonFiniteCost(f"Cost of slot {j} is not a finite number ({cost!r}).")
            if cost < 0:
                raise NegativeCost(f"Cost of slot {j} is negative ({cost!r}).")
        for j in range(len(costs) - 1):
            if costs[j] > costs[j + 1]:
                raise DecreasingCosts(
                    f"Costs must be non-decreasing: c[{j}]={costs[j]!r} > c[{j + 1}]={costs[j + 1]!r}."
                )
        object.__setattr__(self, 'costs', costs)

    @property
    def n(self):
        return len(self.costs)

    @property
    def max(self):
        return self.costs[-1] if self.costs else 0

    @property
    def non_maximum_count(self):
        """K, the number of slots cheaper than the most expensive one."""
        top = self.max
        return sum(1 for cost in self.costs if cost < top)


@dataclass(frozen=True)
class Instance:
    f: FrequencyDistribution
    c: CostVector
    # Original slot index of each sorted slot, when costs were sorted on load
    cost_order: Optional[Tuple[int, ...]] = None
    name: str = ''

    def __post_init__(self):
        if self.f.n != self.c.n:
            raise LengthMismatch(f"Got {self.f.n} frequencies but {self.c.n} costs.")

    @property
    def n(self):
        return self.f.n

    def to_dict(self):
        data = {'f': list(self.f.weights), 'c': list(self.c.costs)}
        if self.name:
            data['name'] = self.name
        return data


@dataclass(frozen=True)
class Allocation:
    """Injective map item -> slot."""

    slot_of: Mapping[int, int]
    n: int = field(default=0)

    def __post_init__(self):
        slot_of = dict(self.slot_of)
        n = self.n or len(slot_of)
        for item, slot in slot_of.items():
            if not 0 <= item < n or not 0 <= slot < n:
                raise InvalidAllocation(f"Pair item {item} -> slot {slot} is outside [0, {n}).")
        if len(set(slot_of.values())) != len(slot_of):
            raise InvalidAllocation("Two items share a slot.")
        object.__setattr__(self, 'slot_of', MappingProxyType(slot_of))
        object.__setattr__(self, 'n', n)

    @classmethod
    def from_order(cls, order):
        """Allocation putting the t-th item of order into slot t."""
        return cls({item: slot for slot, item in enumerate(order)}, len(order))

    @property
    def is_total(self):
        return len(self.slot_of) == self.n

    def items_by_slot(self):
        """Tuple where position j holds the item in slot j."""
        if not self.is_total:
            raise PartialAllocation(f"Only {len(self.slot_of)} of {self.n} items have slots.")
        order = [0] * self.n
        for item, slot in self.slot_of.items():
            order[slot] = item
        return tuple(order)


class OfflineOptimum(NamedTuple):
    cost: float
    allocation: Allocation


class CostClass(Enum):
    ZERO_ONE = 'zero-one'
    CONCAVE = 'concave'
    LOGARITHMIC = 'logarithmic'
    GENERAL = 'general'


def validate_instance(f, c, sort_costs=False, name=''):
    """
    Build a validated Instance from raw weights and costs.

    Args:
        f: FrequencyDistribution or sequence of positive weights
        c: CostVector or sequence of non-negative costs
        sort_costs (bool): sort c ascending instead of rejecting it, and record
            the original slot order in Instance.cost_order

    Returns:
        Instance
    """
    dist = f if isinstance(f, FrequencyDistribution) else FrequencyDistribution(tuple(f))
    raw_costs = c.costs if isinstance(c, CostVector) else tuple(c)
    if len(raw_costs) != dist.n:
        raise LengthMismatch(f"Got {dist.n} frequencies but {len(raw_costs)} costs.")

    cost_order = None
    if sort_costs:
        cost_order = tuple(sorted(range(len(raw_costs)), key=lambda j: (raw_costs[j], j)))
        raw_costs = tuple(raw_costs[j] for j in cost_order)
        if cost_order == tuple(range(len(raw_costs))):
            cost_order = None

    return Instance(dist, CostVector(raw_costs), cost_order=cost_order, name=name)


def opt_cost(inst, exact=False):
    """
    Offline optimum: the most frequent item goes in the cheapest slot.

    Ties go lowest item index to lowest slot index, so the returned allocation
    is deterministic.
    """
    weights = as_numbers(inst.f.weights, exact)
    costs = as_numbers(inst.c.costs, exact)
    order = inst.f.sorted_desc()
    cost = sum(costs[slot] * weights[item] for slot, item in enumerate(order))
    return OfflineOptimum(cost, Allocation.from_order(order))


def allocation_cost(inst, allocation, exact=False):
    """Sum over items of f_i * c(slot of i)."""
    if allocation.n != inst.n or not allocation.is_total:
        raise PartialAllocation(
            f"Allocation covers {len(allocation.slot_of)} items of {allocation.n}; instance has {inst.n}."
        )
    weights = as_numbers(inst.f.weights, exact)
    costs = as_numbers(inst.c.costs, exact)
    return sum(weights[item] * costs[slot] for item, slot in allocation.slot_of.items())


def _is_concave(costs):
    return all(
        costs[j + 2] - costs[j + 1] <= costs[j + 1] - costs[j]
        for j in range(len(costs) - 2)
    )


def _matches_log_template(costs, slack):
    # c_j = log2 j + O(log log j), ranks j = 1..n
    for rank, cost in enumerate(costs, start=1):
        log_rank = math.log2(rank)
        if abs(cost - log_rank) > slack * (1 + math.log2(1 + log_rank)):
            return False
    return True


def classify_cost_vector(c, log_slack=None):
    """
    Most specific class of a cost vector.

    Logarithmic is only reported when the caller asks for the template check by
    passing log_slack: every c_j must lie within log_slack * (1 + log2(1 + log2 j))
    of log2 j. Otherwise the order is Concave, then ZeroOne, then General.
    """
    costs = c.costs if isinstance(c, CostVector) else tuple(c)
    if log_slack is not None and costs and _matches_log_template(costs, log_slack):
        return CostClass.LOGARITHMIC
    if _is_concave(costs):
        return CostClass.CONCAVE
    if all(cost in (0, 1) for cost in costs):
        return CostClass.ZERO_ONE
    return CostClass.GENERAL


def load_instance(filename, sort_costs=False):
    """Load an instance from a JSON file of the form {"f": [...], "c": [...]}."""
    try:
        with open(filename, 'r') as file:
            data = json.load(file)
    except FileNotFoundError:
        raise InstanceFileError(f"{filename} file not found.")
    except json.JSONDecodeError:
        raise InstanceFileError(f"{filename} is not a valid JSON file.")

    if not isinstance(data, dict) or 'f' not in data or 'c' not in data:
        raise InstanceFileError(f"{filename} must hold an object with 'f' and 'c' lists.")
    return validate_instance(data['f'], data['c'], sort_costs=sort_costs, name=data.get('name', ''))


def save_instance(inst, filename):
    """Save an instance to a JSON file."""
    try:
        directory = os.path.dirname(filename)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(filename, 'w') as file:
            json.dump(inst.to_dict(), file, indent=2)
    except OSError as exc:
        raise OutputWriteError(f"Could not write {filename}: {exc}") from exc
    print(f"Saved instance to {filename}", file=sys.stderr)
