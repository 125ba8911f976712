"""Synthetic realizable environment and the least-squares baseline.

Each box carries a hidden vector ``w*``. In every round a context ``x`` in
the unit ball is drawn for each box, its reservation value is set to
``<w*, x>`` and the box value is drawn from ``Uniform[0, B]`` with ``B``
chosen so that this uniform law has exactly that reservation value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import UniformInterval, weitzman_run
from .cpb import CpbConfig, RegretTrace, RoundInstance

MAX_RESAMPLES = 10_000
RIDGE = 1e-8


@dataclass(frozen=True)
class EnvConfig:
    n_boxes: int = 10
    dim: int = 5
    horizon: int = 300
    cost: float = 1.0
    norm_bound: float = 4.0
    seed: int = 0
    sigma_margin: float = 0.1

    def __post_init__(self):
        if self.n_boxes < 1 or self.dim < 1 or self.horizon < 1:
            raise ValueError("n_boxes, dim and horizon must be >= 1")
        if not (self.cost > 0 and self.norm_bound > 0 and self.sigma_margin > 0):
            raise ValueError("cost, norm_bound and sigma_margin must be positive")
        if self.norm_bound < self.cost + self.sigma_margin:
            raise ValueError("norm_bound must be at least cost + sigma_margin "
                             "for any context to reach a feasible reservation value")


@dataclass(frozen=True)
class GroundTruth:
    wstar: np.ndarray  # shape (n_boxes, dim)


def _rng(seed, *keys) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *keys]))


def sample_unit_ball(d: int, rng: np.random.Generator, radius: float = 1.0) -> np.ndarray:
    direction = rng.standard_normal(d)
    direction /= np.linalg.norm(direction)
    return radius * rng.random() ** (1.0 / d) * direction


def sample_wstar(d: int, M: float, seed) -> np.ndarray:
    """Uniform draw from the ``d``-ball of radius ``M``."""
    if d < 1 or not M > 0:
        raise ValueError("need d >= 1 and M > 0")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return sample_unit_ball(d, rng, radius=M)


def make_ground_truth(config: EnvConfig) -> GroundTruth:
    """One ``w*`` per box; vectors too short to reach ``cost + margin`` are redrawn."""
    rng = _rng(config.seed, 0)
    need = config.cost + config.sigma_margin
    rows = []
    for _ in range(config.n_boxes):
        w = sample_wstar(config.dim, config.norm_bound, rng)
        while np.linalg.norm(w) < need:
            w = sample_wstar(config.dim, config.norm_bound, rng)
        rows.append(w)
    return GroundTruth(np.array(rows))


def uniform_bound_for_target(sigma: float, c: float) -> float:
    """Right end ``B`` such that ``Uniform[0, B]`` has reservation value ``sigma``
    at opening cost ``c``."""
    if not sigma > c:
        raise ValueError(f"sigma={sigma} <= cost={c}: no Uniform[0, B] reaches it")
    if sigma >= 2 * c:
        return sigma * sigma / (2 * c)
    return 2 * (sigma - c)


def _feasible_context(w, need, rng):
    d = len(w)
    for _ in range(MAX_RESAMPLES):
        x = sample_unit_ball(d, rng)
        if w @ x >= need:
            return x
    x = need / float(w @ w) * w
    if np.linalg.norm(x) > 1.0:
        raise RuntimeError("w* too short for a feasible context")
    return x


def generate_round(truth: GroundTruth, config: EnvConfig, t: int):
    """Round ``t`` of the stream; a pure function of ``(truth, config, t)``."""
    rng = _rng(config.seed, 1, t)
    need = config.cost + config.sigma_margin
    contexts, values, sigmas, dists = [], [], [], []
    for w in truth.wstar:
        x = _feasible_context(w, need, rng)
        sigma = float(w @ x)
        B = uniform_bound_for_target(sigma, config.cost)
        contexts.append(x)
        sigmas.append(sigma)
        dists.append(UniformInterval(0.0, B))
        values.append(float(rng.uniform(0.0, B)))
    return RoundInstance(
        contexts=np.array(contexts),
        realized_values=np.array(values),
        true_sigmas=np.array(sigmas),
        dists=tuple(dists),
    )


def generate_stream(config: EnvConfig, truth: GroundTruth | None = None):
    truth = make_ground_truth(config) if truth is None else truth
    return [generate_round(truth, config, t) for t in range(config.horizon)]


def baseline_predict(history, x_new) -> float:
    """Least-squares fit of value on context (no intercept), evaluated at ``x_new``."""
    x_new = np.asarray(x_new, dtype=float)
    if len(history) == 0:
        return 0.0
    X = np.array([h[0] for h in history], dtype=float)
    v = np.array([h[1] for h in history], dtype=float)
    return float(_ridge_fit(X.T @ X, X.T @ v) @ x_new)


def _ridge_fit(gram, moment):
    return np.linalg.solve(gram + RIDGE * np.eye(len(moment)), moment)


class LinearRegressionBaseline:
    """Per-box incremental version of :func:`baseline_predict`.

    Keeps the sufficient statistics ``X^T X`` and ``X^T v`` so each
    prediction is one small solve.
    """

    def __init__(self, dim: int):
        self.dim = dim
        self._gram = np.zeros((dim, dim))
        self._moment = np.zeros(dim)
        self.n_observations = 0

    def predict_sigma(self, x) -> float:
        if self.n_observations == 0:
            return 0.0
        return float(_ridge_fit(self._gram, self._moment) @ np.asarray(x, dtype=float))

    def observe(self, x, v: float) -> None:
        x = np.asarray(x, dtype=float)
        self._gram += np.outer(x, x)
        self._moment += v * x
        self.n_observations += 1


def baseline_run(env_stream, config: CpbConfig) -> RegretTrace:
    """Play Weitzman's policy on least-squares value predictions.

    In bandit mode a box's value is only learned when the play opened it;
    the baseline never opens boxes just to observe them.
    """
    if len(env_stream) != config.horizon:
        raise ValueError(f"stream has {len(env_stream)} rounds, horizon is {config.horizon}")
    learners = [LinearRegressionBaseline(config.dim) for _ in range(config.n_boxes)]
    round_cost, opt_cost = [], []
    for inst in env_stream:
        X, values = inst.contexts, inst.realized_values
        sigmas = [b.predict_sigma(x) for b, x in zip(learners, X)]
        outcome = weitzman_run(config.costs, sigmas, values)
        seen = range(config.n_boxes) if config.feedback == "full" else outcome.opened
        for i in seen:
            learners[i].observe(X[i], values[i])
        round_cost.append(outcome.total_cost)
        opt_cost.append(weitzman_run(config.costs, inst.true_sigmas, values).total_cost)
    return RegretTrace(np.array(round_cost), np.array(opt_cost))
