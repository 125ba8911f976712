"""Contextual Pandora's Box driver.

Each box owns an online regression oracle. Per round the oracles predict
weight vectors, the predicted reservation values ``<w, x>`` drive one play
of Weitzman's policy, and the oracles are then fed the observed values.
Regret is measured against Weitzman's policy run on the true reservation
values over the same realized values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import WeitzmanOutcome, weitzman_run
from .oracle import CostlyFeedbackOracle, FtrlOracle, ftrl_eta, interval_size

FEEDBACK_MODES = ("full", "bandit")


@dataclass(frozen=True)
class CpbConfig:
    n_boxes: int
    dim: int
    horizon: int
    costs: tuple
    norm_bound: float
    feedback: str = "full"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "costs", tuple(float(c) for c in self.costs))
        if self.n_boxes < 1 or self.dim < 1 or self.horizon < 1:
            raise ValueError("n_boxes, dim and horizon must be >= 1")
        if len(self.costs) != self.n_boxes:
            raise ValueError(f"expected {self.n_boxes} costs, got {len(self.costs)}")
        if not all(c > 0 for c in self.costs):
            raise ValueError("costs must be positive")
        if not self.norm_bound > 0:
            raise ValueError("norm_bound must be positive")
        if self.feedback not in FEEDBACK_MODES:
            raise ValueError(f"feedback must be one of {FEEDBACK_MODES}, got {self.feedback!r}")


@dataclass(frozen=True)
class RoundInstance:
    contexts: np.ndarray         # (n, d), rows of norm <= 1
    realized_values: np.ndarray  # (n,)
    true_sigmas: np.ndarray      # (n,), hidden from the learner
    dists: tuple                 # n distributions, hidden from the learner


@dataclass(frozen=True)
class RoundResult:
    predicted_sigmas: np.ndarray
    outcome: WeitzmanOutcome
    extra_open_cost: float
    round_cost: float
    opt_cost: float


@dataclass(frozen=True)
class RegretTrace:
    round_cost: np.ndarray
    opt_cost: np.ndarray

    @property
    def cum_cost(self) -> np.ndarray:
        return np.cumsum(self.round_cost)

    @property
    def cum_opt_cost(self) -> np.ndarray:
        return np.cumsum(self.opt_cost)

    @property
    def cum_regret(self) -> np.ndarray:
        return np.cumsum(self.round_cost - self.opt_cost)

    @classmethod
    def from_results(cls, results: Sequence[RoundResult]) -> "RegretTrace":
        return cls(np.array([r.round_cost for r in results]),
                   np.array([r.opt_cost for r in results]))


def _check_instance(instance: RoundInstance, config: CpbConfig) -> None:
    if instance.contexts.shape != (config.n_boxes, config.dim):
        raise ValueError(f"contexts have shape {instance.contexts.shape}, "
                         f"expected {(config.n_boxes, config.dim)}")
    if len(instance.realized_values) != config.n_boxes or \
            len(instance.true_sigmas) != config.n_boxes:
        raise ValueError("values and sigmas must have one entry per box")


def optimal_round_cost(instance: RoundInstance, config: CpbConfig) -> float:
    return weitzman_run(config.costs, instance.true_sigmas,
                        instance.realized_values).total_cost


def cpb_round(oracles, instance: RoundInstance, config: CpbConfig,
              t: int) -> RoundResult:
    """Play round ``t`` and feed the oracles; mutates ``oracles``."""
    if len(oracles) != config.n_boxes:
        raise ValueError(f"expected {config.n_boxes} oracles, got {len(oracles)}")
    _check_instance(instance, config)
    X = instance.contexts
    values = instance.realized_values
    W = np.array([o.predict(t) for o in oracles])
    if W.shape != X.shape:
        raise ValueError(f"oracle predictions have shape {W.shape}, contexts {X.shape}")
    sigmas = np.einsum("ij,ij->i", W, X)
    outcome = weitzman_run(config.costs, sigmas, values)

    extra = 0.0
    if config.feedback == "full":
        for i, o in enumerate(oracles):
            o.update(X[i], values[i])
    else:
        opened = set(outcome.opened)
        for i, o in enumerate(oracles):
            if o.wants_feedback(t):
                if i not in opened:
                    extra += config.costs[i]
                o.update(X[i], values[i])

    return RoundResult(
        predicted_sigmas=sigmas,
        outcome=outcome,
        extra_open_cost=extra,
        round_cost=outcome.total_cost + extra,
        opt_cost=optimal_round_cost(instance, config),
    )


def box_seed(seed: int, box: int) -> int:
    """64-bit seed for box ``box``'s feedback sampler."""
    ss = np.random.SeedSequence([int(seed), 2, box])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_oracles(config: CpbConfig) -> list:
    """One FTRL oracle per box, wrapped for costly feedback in bandit mode.

    A wrapped oracle only sees ``ceil(T / k)`` observations, so its
    regularizer is tuned for that many rounds.
    """
    T, M = config.horizon, config.norm_bound
    oracles = []
    for i, c in enumerate(config.costs):
        if config.feedback == "full":
            oracles.append(FtrlOracle(config.dim, M, c, ftrl_eta(M, c, T)))
        else:
            k = interval_size(T, c, M)
            inner_T = -(-T // k)
            inner = FtrlOracle(config.dim, M, c, ftrl_eta(M, c, inner_T))
            oracles.append(CostlyFeedbackOracle(inner, k, T, box_seed(config.seed, i)))
    return oracles


def cpb_run(env_stream: Sequence[RoundInstance], config: CpbConfig,
            oracles=None) -> RegretTrace:
    if len(env_stream) != config.horizon:
        raise ValueError(f"stream has {len(env_stream)} rounds, horizon is {config.horizon}")
    if oracles is None:
        oracles = make_oracles(config)
    results = [cpb_round(oracles, inst, config, t) for t, inst in enumerate(env_stream)]
    return RegretTrace.from_results(results)
