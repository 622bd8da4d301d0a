#!/usr/bin/env python3
"""
Bounds on the cost of FCFS and of online Huffman coding, and the instances
that show the ratio bounds are tight.

Upper bounds:
    general costs      ratio <= 1 + H_K, K = number of non-maximum costs
    concave costs      ratio <= 2
    log-like costs     E[cost] <= H + a*log2(1 + H) + b   (per unit weight)
    universal code     E[length] <= H + 2*log2(1 + H) + 2
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from scipy.stats import entropy as scipy_entropy

from errors import BadParameters
from sampling import exact_order_distribution, expected_position
from slot_allocation import CostClass, CostVector, FrequencyDistribution, classify_cost_vector, validate_instance


class BoundKind(Enum):
    GENERAL_HK = 'general'
    CONCAVE_2 = 'concave'
    LOG_ENTROPY = 'log'
    OHC_GUARANTEE = 'ohc'


@dataclass(frozen=True)
class BoundReport:
    """A bound on the competitive ratio (is_ratio) or on the expected cost itself."""

    kind: BoundKind
    value: float
    parameters: dict = field(default_factory=dict)
    is_ratio: bool = True

    def __post_init__(self):
        if self.is_ratio and self.value < 1:
            raise BadParameters(f"A ratio bound below 1 is meaningless ({self.value})")

    def to_dict(self):
        return {
            'kind': self.kind.value,
            'value': float(self.value),
            'parameters': {k: float(v) if isinstance(v, Fraction) else v for k, v in self.parameters.items()},
            'is_ratio': self.is_ratio,
        }


def harmonic(k, exact=False):
    """H_k = 1 + 1/2 + ... + 1/k, with H_0 = 0."""
    if k < 0:
        raise BadParameters(f"Harmonic numbers need k >= 0, got {k}")
    if exact:
        return sum((Fraction(1, j) for j in range(1, k + 1)), Fraction(0))
    return math.fsum(1.0 / j for j in range(1, k + 1))


def _weights(f):
    return f.weights if isinstance(f, FrequencyDistribution) else FrequencyDistribution(tuple(f)).weights


def entropy(f):
    """Base-2 entropy of f / sum(f)."""
    return float(scipy_entropy([float(w) for w in _weights(f)], base=2))


def general_cost_bound(c):
    costs = c if isinstance(c, CostVector) else CostVector(tuple(c))
    k = costs.non_maximum_count
    return BoundReport(BoundKind.GENERAL_HK, 1 + harmonic(k), {'K': k})


def concave_cost_bound(c):
    costs = c if isinstance(c, CostVector) else CostVector(tuple(c))
    if classify_cost_vector(costs) != CostClass.CONCAVE:
        raise BadParameters(f"The ratio-2 bound needs concave costs, got {costs.costs}")
    return BoundReport(BoundKind.CONCAVE_2, 2.0, {})


def log_entropy_bound(f, c, slope=2.0):
    """
    Expected-cost bound for costs of the form c_j <= log2 j + a*log2(1 + log2 j) + b.

    The intercept b is the least constant that makes the inequality hold for c
    (ranks j are 1-based). The right-hand side is concave in j, so
    E[c(j_i)] <= b + g(1/q_i) with g the same template, and Jensen's inequality
    over q gives H + a*log2(1 + H) + b per unit weight. The reported value is
    scaled by sum(f) so it compares directly with the expected cost.
    """
    weights = _weights(f)
    costs = c.costs if isinstance(c, CostVector) else tuple(c)
    if slope < 0:
        raise BadParameters(f"Slope must be non-negative, got {slope}")
    intercept = max(
        cost - math.log2(rank) - slope * math.log2(1 + math.log2(rank))
        for rank, cost in enumerate(costs, start=1)
    )
    h = entropy(weights)
    per_unit = h + slope * math.log2(1 + h) + intercept
    return BoundReport(
        BoundKind.LOG_ENTROPY,
        per_unit * math.fsum(float(w) for w in weights),
        {'entropy': h, 'slope': slope, 'intercept': intercept},
        is_ratio=False,
    )


def ohc_guarantee(h):
    """H + 2*log2(1 + H) + 2."""
    if h < 0:
        raise BadParameters(f"Entropy cannot be negative, got {h}")
    return h + 2 * math.log2(1 + h) + 2


def ohc_guarantee_report(h):
    return BoundReport(BoundKind.OHC_GUARANTEE, ohc_guarantee(h), {'entropy': h}, is_ratio=False)


def five_h_bound(h):
    """The simplified 5H form of the guarantee; it dominates the additive form only for H >= 1."""
    if h < 1:
        raise BadParameters(f"5H does not bound the guarantee below H = 1 (got H = {h})")
    return 5 * h


def kraft_sum(lengths):
    """Sum of 2^-l, smallest terms first."""
    lengths = list(lengths)
    if not lengths:
        raise BadParameters("Kraft sum of an empty code")
    for length in lengths:
        if int(length) != length or length < 1:
            raise BadParameters(f"Code lengths must be positive integers, got {length}")
    return math.fsum(math.ldexp(1.0, -int(length)) for length in sorted(lengths, reverse=True))


def lower_bound_instance_general(k, n, eps):
    """
    K unit-weight items and n - K items of weight eps/(n - K); costs are K
    zeros then ones. The offline optimum is eps.
    """
    if not 0 < k < n:
        raise BadParameters(f"Need 0 < K < n, got K={k}, n={n}")
    if not eps > 0:
        raise BadParameters(f"Need eps > 0, got {eps}")
    rest = n - k
    weights = [1] * k + [eps / rest] * rest
    costs = [0] * k + [1] * rest
    return validate_instance(weights, costs, name=f"lowerbound-general-K{k}-n{n}-eps{eps}")


def lower_bound_instance_concave(n, eps):
    """f = (1, eps, ..., eps), c = (0, 1, ..., 1)."""
    if n < 2:
        raise BadParameters(f"Need n >= 2, got {n}")
    if not eps > 0:
        raise BadParameters(f"Need eps > 0, got {eps}")
    return validate_instance([1] + [eps] * (n - 1), [0] + [1] * (n - 1),
                             name=f"lowerbound-concave-n{n}-eps{eps}")


def concave_lower_bound_ratio(n, eps):
    """2 / (1 + (n - 1) eps): FCFS's ratio on the concave instance is at least this."""
    return 2 / (1 + (n - 1) * eps)


def concave_instance_ratio(n, eps):
    """
    Exact FCFS ratio on the concave instance.

    The big item goes first with probability 1/(1 + (n-1) eps), leaving cost
    (n-1) eps; otherwise the cost is 1 + (n-2) eps.
    """
    return (2 + (n - 2) * eps) / (1 + (n - 1) * eps)


def general_lower_bound_estimate(k, n, eps):
    """
    Estimate of FCFS's ratio on the general lower-bound instance.

    Some small item lands among the first K slots with probability about
    1 - prod_{l<K} (K-l)/(K-l+eps), pushing a big item to a unit cost; the
    small items left over pay (n'-K)/n' of eps. Tends to 1 + H_K.
    """
    if not 0 < k < n:
        raise BadParameters(f"Need 0 < K < n, got K={k}, n={n}")
    rest = n - k
    stay = 1.0
    for step in range(k):
        stay *= (k - step) / (k - step + eps)
    return (1 - stay) / eps + (rest - k) / rest


def expected_rank_bound(f, i):
    """
    (E[j_i], 1/q_i): the expected 1-based position of item i and its bound.
    """
    dist = f if isinstance(f, FrequencyDistribution) else FrequencyDistribution(tuple(f))
    if not 0 <= i < dist.n:
        raise IndexError(f"Item {i} is outside 0..{dist.n - 1}")
    share = float(dist.weights[i]) / math.fsum(float(w) for w in dist.weights)
    return expected_position(dist, i), 1 / share


def expected_function_of_position(f, i, func):
    """E[func(j_i)] over the exact order distribution (j_i is 1-based)."""
    total = 0.0
    for order, prob in exact_order_distribution(f).items():
        total += prob * func(order.index(i) + 1)
    return total


def applicable_bounds(inst, choice='general', log_slope=2.0):
    """
    Bounds for an instance, chosen explicitly: general, concave, log, all or none.

    'all' reports the general and log bounds, plus the concave one when c is concave.
    """
    if choice == 'none':
        return []
    if choice == 'general':
        return [general_cost_bound(inst.c)]
    if choice == 'concave':
        return [concave_cost_bound(inst.c)]
    if choice == 'log':
        return [log_entropy_bound(inst.f, inst.c, log_slope)]
    if choice == 'all':
        reports = [general_cost_bound(inst.c)]
        if classify_cost_vector(inst.c) == CostClass.CONCAVE:
            reports.append(concave_cost_bound(inst.c))
        reports.append(log_entropy_bound(inst.f, inst.c, log_slope))
        return reports
    raise BadParameters(f"Unknown bound choice '{choice}'")


def bound_satisfied(report, result, opt, slack_stderr=4.0):
    """
    Whether an evaluation respects a bound, allowing slack_stderr standard errors
    for Monte Carlo results.
    """
    slack = slack_stderr * float(result.stderr) + 1e-9
    if report.is_ratio:
        return float(result.expected_cost) <= float(report.value) * float(opt) + slack
    return float(result.expected_cost) <= float(report.value) + slack
