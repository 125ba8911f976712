"""Randomized property suites behind ``contextual-pandora verify``.

Every suite is seeded, returns a :class:`SuiteResult` and never raises on
a violated property; the worst residual is reported instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (BoxSpec, Discrete, Empirical, UniformInterval,
                   approximate_cost, bruteforce_optimal_cost,
                   expected_weitzman_cost_exact, reservation_value)
from .env import EnvConfig, generate_stream
from .loss import lq_loss, lq_loss_grad, regression_loss, regression_loss_grad
from .oracle import (CostlyFeedbackOracle, FtrlOracle, ftrl_eta,
                     ftrl_regret_bound, solve_ftrl)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    cases: int
    worst: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"[{status}] {self.name}: {self.cases} cases, worst residual {self.worst:.3e}{extra}"


def random_discrete(rng, max_support=3, low=0.0, high=10.0) -> Discrete:
    k = int(rng.integers(1, max_support + 1))
    values = rng.uniform(low, high, size=k)
    probs = rng.dirichlet(np.ones(k))
    probs = probs / probs.sum()
    return Discrete(tuple(zip(values, probs)))


def random_instance(rng, max_boxes=3, max_support=3):
    n = int(rng.integers(1, max_boxes + 1))
    return [BoxSpec(float(rng.uniform(0.1, 3.0)), random_discrete(rng, max_support))
            for _ in range(n)]


def random_distribution(rng):
    kind = rng.integers(3)
    if kind == 0:
        a = rng.uniform(-5, 5)
        return UniformInterval(a, a + rng.uniform(0, 10))
    if kind == 1:
        return random_discrete(rng, max_support=6, low=-5, high=5)
    return Empirical(tuple(rng.normal(0, 3, size=int(rng.integers(1, 50)))))


def weitzman_optimality(cases=200, seed=0, perturb=0.0) -> SuiteResult:
    """Weitzman at exact reservation values vs. the brute-force optimum.

    ``perturb`` shifts every reservation value; it exists as a negative
    control and should make the suite fail.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        boxes = random_instance(rng)
        sigmas = [reservation_value(b.dist, b.cost) + perturb for b in boxes]
        gap = abs(expected_weitzman_cost_exact(boxes, sigmas) - bruteforce_optimal_cost(boxes))
        worst = max(worst, gap)
    return SuiteResult("weitzman-optimality", worst <= 1e-9, cases, worst)


def reservation_roundtrip(cases=1000, seed=1) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        dist = random_distribution(rng)
        c = float(rng.uniform(0.01, 5.0))
        worst = max(worst, abs(approximate_cost(dist, reservation_value(dist, c)) - c))
    return SuiteResult("reservation", worst <= 1e-9, cases, worst)


def robustness(cases=500, seed=2) -> SuiteResult:
    """Cost with perturbed reservation values stays within the L1 error of
    the implied approximate costs; residual is the excess over that bound."""
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for _ in range(cases):
        boxes = random_instance(rng)
        star = [reservation_value(b.dist, b.cost) for b in boxes]
        noisy = [s + rng.normal(0, rng.choice([0.1, 1.0, 5.0])) for s in star]
        lhs = expected_weitzman_cost_exact(boxes, noisy)
        rhs = expected_weitzman_cost_exact(boxes, star) + math.fsum(
            abs(approximate_cost(b.dist, s) - b.cost) for b, s in zip(boxes, noisy))
        worst = max(worst, lhs - rhs)
    return SuiteResult("robustness", worst <= 1e-9, cases, worst)


def _expected_lq(dist: Discrete, sigma, c):
    return math.fsum(p * float(lq_loss(sigma - v, c)) for v, p in dist.support)


def lq_excess_loss(cases=500, seed=3) -> SuiteResult:
    """Excess expected loss dominates half the squared approximate-cost error."""
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for _ in range(cases):
        dist = random_discrete(rng, max_support=5)
        c = float(rng.uniform(0.1, 3.0))
        star = reservation_value(dist, c)
        sigma = star + rng.normal(0, rng.choice([0.1, 1.0, 5.0]))
        excess = _expected_lq(dist, sigma, c) - _expected_lq(dist, star, c)
        gap = approximate_cost(dist, sigma) - approximate_cost(dist, star)
        worst = max(worst, 0.5 * gap * gap - excess)
    return SuiteResult("lq-excess-loss", worst <= 1e-9, cases, worst)


def gradient_check(cases=1000, seed=4, h=1e-6) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    done = 0
    while done < cases:
        d = int(rng.integers(1, 8))
        w = rng.normal(0, 2, size=d)
        x = rng.normal(size=d)
        x *= rng.random() ** (1 / d) / np.linalg.norm(x)
        y = float(rng.uniform(-5, 5))
        c = float(rng.uniform(0.1, 3.0))
        if abs(w @ x - y) <= 1e-3:
            continue
        g = regression_loss_grad(w, x, y, c)
        fd = np.empty(d)
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            fd[j] = (regression_loss(w + e, x, y, c) - regression_loss(w - e, x, y, c)) / (2 * h)
        worst = max(worst, float(np.linalg.norm(g - fd) / np.linalg.norm(g)))
        done += 1
    return SuiteResult("gradient", worst <= 1e-6, cases, worst)


def realizable_sequence(seed, T=300, d=5, M=4.0, c=1.0):
    """Contexts and values of one box of the synthetic environment."""
    stream = generate_stream(EnvConfig(n_boxes=1, dim=d, horizon=T, cost=c,
                                       norm_bound=M, seed=seed))
    X = np.array([r.contexts[0] for r in stream])
    y = np.array([r.realized_values[0] for r in stream])
    return X, y


def batch_minimum(X, y, c, M) -> float:
    w = solve_ftrl(X, y, c, M, math.inf, tol=1e-12, max_iter=200_000)
    return float(np.sum(lq_loss(X @ w - y, c)))


def ftrl_regret(X, y, c, M) -> float:
    oracle = FtrlOracle(X.shape[1], M, c, ftrl_eta(M, c, len(y)))
    total = 0.0
    for t in range(len(y)):
        w = oracle.predict(t)
        total += float(lq_loss(w @ X[t] - y[t], c))
        oracle.update(X[t], y[t])
    return total - batch_minimum(X, y, c, M)


def ftrl_regret_suite(cases=50, seed=5, T=300, M=4.0, c=1.0) -> SuiteResult:
    bound = ftrl_regret_bound(M, c, T)
    worst = -math.inf
    for s in range(cases):
        X, y = realizable_sequence(seed * 1000 + s, T=T, M=M, c=c)
        worst = max(worst, ftrl_regret(X, y, c, M) - bound)
    return SuiteResult("ftrl-regret", worst <= 0.0, cases, worst,
                       detail=f"bound {bound:.1f}, residual = regret - bound")


def costly_regret(X, y, c, M, k, seed) -> tuple[float, int]:
    """Loss regret plus paid feedback of the costly-feedback wrapper."""
    T = len(y)
    n_int = -(-T // k)
    oracle = CostlyFeedbackOracle(FtrlOracle(X.shape[1], M, c, ftrl_eta(M, c, n_int)),
                                  k, T, seed)
    total = 0.0
    for t in range(T):
        w = oracle.predict(t)
        total += float(lq_loss(w @ X[t] - y[t], c))
        if oracle.wants_feedback(t):
            oracle.update(X[t], y[t])
    return total - batch_minimum(X, y, c, M) + c * oracle.requests, oracle.requests


def costly_regret_suite(cases=20, seed=6, T=240, k=6, M=4.0, c=1.0) -> SuiteResult:
    n_int = -(-T // k)
    bound = k * ftrl_regret_bound(M, c, n_int) + c * n_int
    totals = []
    for s in range(cases):
        X, y = realizable_sequence(seed * 1000 + s, T=T, M=M, c=c)
        total, requests = costly_regret(X, y, c, M, k, seed=s)
        if requests != n_int:
            return SuiteResult("costly-regret", False, s + 1, math.inf,
                               detail=f"{requests} requests, expected {n_int}")
        totals.append(total)
    mean = float(np.mean(totals))
    return SuiteResult("costly-regret", mean <= bound, cases, mean - bound,
                       detail=f"mean {mean:.1f} vs bound {bound:.1f}")


SUITES: dict[str, Callable[[], SuiteResult]] = {
    "weitzman-optimality": weitzman_optimality,
    "reservation": reservation_roundtrip,
    "robustness": robustness,
    "lq-excess-loss": lq_excess_loss,
    "gradient": gradient_check,
    "ftrl-regret": ftrl_regret_suite,
    "costly-regret": costly_regret_suite,
}


def run_suites(selector: str = "all") -> list[SuiteResult]:
    if selector == "all":
        names = list(SUITES)
    elif selector in SUITES:
        names = [selector]
    else:
        raise KeyError(f"unknown suite {selector!r}; choose from all, {', '.join(SUITES)}")
    return [SUITES[name]() for name in names]
