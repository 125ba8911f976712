"""Pandora's Box primitives: value distributions, reservation values and
Weitzman's search policy, plus exact expectation oracles used to check it.

Box indices are 0-based throughout.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

PROB_TOL = 1e-12
MAX_DOUBLINGS = 200
ENUMERATION_BUDGET = 10**6


class BudgetExceeded(RuntimeError):
    """Raised when an exact enumeration would exceed its size budget."""


@dataclass(frozen=True)
class UniformInterval:
    lower: float
    upper: float

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ValueError("uniform bounds must be finite")
        if self.lower > self.upper:
            raise ValueError(f"lower={self.lower} exceeds upper={self.upper}")

    @property
    def mean(self) -> float:
        return 0.5 * (self.lower + self.upper)


@dataclass(frozen=True)
class Discrete:
    """Finite distribution given as ``(value, probability)`` pairs."""

    support: tuple

    def __post_init__(self):
        support = tuple((float(v), float(p)) for v, p in self.support)
        if not support:
            raise ValueError("discrete support must be non-empty")
        for v, p in support:
            if not math.isfinite(v):
                raise ValueError(f"support value {v} is not finite")
            if not p > 0:
                raise ValueError(f"probability {p} is not strictly positive")
        total = math.fsum(p for _, p in support)
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "support", support)

    @property
    def values(self) -> np.ndarray:
        return np.array([v for v, _ in self.support])

    @property
    def probs(self) -> np.ndarray:
        return np.array([p for _, p in self.support])

    @property
    def mean(self) -> float:
        return math.fsum(v * p for v, p in self.support)


@dataclass(frozen=True)
class Empirical:
    samples: tuple

    def __post_init__(self):
        samples = tuple(float(s) for s in self.samples)
        if not samples:
            raise ValueError("empirical distribution needs at least one sample")
        if not all(math.isfinite(s) for s in samples):
            raise ValueError("empirical samples must be finite")
        object.__setattr__(self, "samples", samples)

    @property
    def mean(self) -> float:
        return math.fsum(self.samples) / len(self.samples)


DistributionSpec = Union[UniformInterval, Discrete, Empirical]


@dataclass(frozen=True)
class BoxSpec:
    cost: float
    dist: DistributionSpec

    def __post_init__(self):
        if not self.cost >= 0:
            raise ValueError(f"box cost must be nonnegative, got {self.cost}")


@dataclass(frozen=True)
class WeitzmanOutcome:
    opened: tuple
    selected_value: float
    open_cost_paid: float
    total_cost: float


def approximate_cost(dist: DistributionSpec, sigma: float) -> float:
    """Expected shortfall ``E[max(sigma - v, 0)]`` of ``sigma`` under ``dist``.

    Closed form for uniform and discrete distributions, plug-in sample
    average for empirical ones.
    """
    sigma = float(sigma)
    if isinstance(dist, UniformInterval):
        a, b = dist.lower, dist.upper
        if sigma <= a:
            return 0.0
        if sigma >= b:
            return sigma - dist.mean
        return (sigma - a) ** 2 / (2.0 * (b - a))
    if isinstance(dist, Discrete):
        return math.fsum(p * max(sigma - v, 0.0) for v, p in dist.support)
    if isinstance(dist, Empirical):
        return math.fsum(max(sigma - s, 0.0) for s in dist.samples) / len(dist.samples)
    raise TypeError(f"unsupported distribution {type(dist).__name__}")


def _bracket(dist, cost):
    """Find ``lo < hi`` with ``c(lo) < cost <= c(hi)`` by doubling steps."""
    lo = hi = float(dist.mean)
    step = 1.0
    doublings = 0
    while approximate_cost(dist, hi) < cost:
        hi = lo + step
        step *= 2.0
        doublings += 1
        if doublings > MAX_DOUBLINGS:
            raise ArithmeticError("bracket expansion failed upward; inputs not finite?")
    step = 1.0
    lo = hi - step
    while approximate_cost(dist, lo) >= cost:
        hi = lo
        step *= 2.0
        lo = hi - step
        doublings += 1
        if doublings > MAX_DOUBLINGS:
            raise ArithmeticError("bracket expansion failed downward; inputs not finite?")
    return lo, hi


def reservation_value(dist: DistributionSpec, cost: float) -> float:
    """Solve ``approximate_cost(dist, sigma) == cost`` for ``sigma``.

    The shortfall function is continuous and nondecreasing, so bisection on
    an expanded bracket always converges. On a flat segment the smallest
    root is returned.
    """
    if not cost > 0:
        raise ValueError(f"cost must be positive, got {cost}")
    if not math.isfinite(cost):
        raise ArithmeticError("cost must be finite")
    lo, hi = _bracket(dist, cost)
    # invariant: c(lo) < cost <= c(hi); hi converges to the infimum root
    while True:
        if hi - lo <= 1e-15 * max(1.0, abs(lo), abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if approximate_cost(dist, mid) >= cost:
            hi = mid
        else:
            lo = mid
    r_lo = cost - approximate_cost(dist, lo)
    r_hi = approximate_cost(dist, hi) - cost
    return lo if r_lo < r_hi else hi


def weitzman_run(costs: Sequence[float], sigmas: Sequence[float],
                 values: Sequence[float]) -> WeitzmanOutcome:
    """Play Weitzman's policy on one realization of box values.

    Boxes are opened in ascending ``sigmas`` (ties by index). After each
    opening the search stops iff the best value so far is strictly below
    the next reservation value; past the last box it always stops.
    """
    n = len(costs)
    if n == 0 or len(sigmas) != n or len(values) != n:
        raise ValueError(
            f"costs, sigmas and values must be equal-length and non-empty "
            f"(got {len(costs)}, {len(sigmas)}, {len(values)})")
    order = sorted(range(n), key=lambda i: (sigmas[i], i))
    opened = []
    v_min = math.inf
    paid = 0.0
    for pos, box in enumerate(order):
        opened.append(box)
        paid += costs[box]
        v_min = min(v_min, values[box])
        next_sigma = sigmas[order[pos + 1]] if pos + 1 < n else math.inf
        if v_min < next_sigma:
            break
    v_min = float(v_min)
    paid = float(paid)
    return WeitzmanOutcome(tuple(opened), v_min, paid, v_min + paid)


def _require_discrete(boxes):
    for b in boxes:
        if not isinstance(b.dist, Discrete):
            raise TypeError("exact expectations need Discrete distributions")


def expected_weitzman_cost_exact(boxes: Sequence[BoxSpec],
                                 sigmas: Sequence[float]) -> float:
    """Exact expected cost of Weitzman's policy with the given ``sigmas``.

    Enumerates the product of the discrete supports.
    """
    _require_discrete(boxes)
    if len(sigmas) != len(boxes):
        raise ValueError("one sigma per box is required")
    size = math.prod(len(b.dist.support) for b in boxes)
    if size > ENUMERATION_BUDGET:
        raise BudgetExceeded(f"{size} joint outcomes exceed {ENUMERATION_BUDGET}")
    costs = [b.cost for b in boxes]
    terms = []
    for combo in itertools.product(*(b.dist.support for b in boxes)):
        prob = math.prod(p for _, p in combo)
        outcome = weitzman_run(costs, sigmas, [v for v, _ in combo])
        terms.append(prob * outcome.total_cost)
    return math.fsum(terms)


def bruteforce_optimal_cost(boxes: Sequence[BoxSpec], max_boxes: int = 4,
                            max_support: int = 4) -> float:
    """Optimal adaptive expected cost by dynamic programming.

    State is (set of opened boxes, best value so far). From each state the
    policy either stops with the best value or pays to open a closed box.
    """
    _require_discrete(boxes)
    n = len(boxes)
    if n == 0:
        raise ValueError("need at least one box")
    if n > max_boxes or any(len(b.dist.support) > max_support for b in boxes):
        raise BudgetExceeded(
            f"brute force limited to {max_boxes} boxes with support <= {max_support}")
    costs = [b.cost for b in boxes]
    supports = [b.dist.support for b in boxes]
    full = (1 << n) - 1

    @lru_cache(maxsize=None)
    def value(opened: int, best: float) -> float:
        stop = best if opened else math.inf
        if opened == full:
            return stop
        result = stop
        for i in range(n):
            if opened & (1 << i):
                continue
            cont = costs[i] + math.fsum(
                p * value(opened | (1 << i), min(best, v)) for v, p in supports[i])
            result = min(result, cont)
        return result

    return value(0, math.inf)
