"""Online regression oracles for the linear-quadratic loss.

Every oracle exposes the same three calls, driven once per round ``t``
(0-based) by the search driver::

    w = oracle.predict(t)
    if oracle.wants_feedback(t):
        oracle.update(x, y)

:class:`FtrlOracle` is the full-information learner (it always asks for
feedback). :class:`CostlyFeedbackOracle` wraps it for the setting where
each observation has to be paid for.
"""

from __future__ import annotations

import math

import numpy as np

from .loss import lq_loss, lq_loss_grad

NORM_SLACK = 1e-12


def ftrl_eta(M: float, c: float, T: int) -> float:
    """Regularizer scale ``sqrt(M) / (max(c, M) * sqrt(2T))``."""
    if not (M > 0 and c > 0 and T >= 1):
        raise ValueError("need M > 0, c > 0, T >= 1")
    return math.sqrt(M) / (max(c, M) * math.sqrt(2 * T))


def ftrl_regret_bound(M: float, c: float, T: float) -> float:
    """Worst-case regret ``max(M, c) * sqrt(2 M T)`` of the tuned FTRL oracle."""
    return max(M, c) * math.sqrt(2 * M * T)


def interval_size(T: int, c: float, M: float) -> int:
    """Feedback interval length ``(T c^2 / (2 M L^2))^(1/3)``, ``L = max(M, c)``,
    rounded to nearest and clamped into ``[1, T]``."""
    if not (T >= 1 and c > 0 and M > 0):
        raise ValueError("need T >= 1, c > 0, M > 0")
    L = max(M, c)
    k = round((T * c * c / (2 * M * L * L)) ** (1.0 / 3.0))
    return int(min(max(k, 1), T))


def project_ball(w: np.ndarray, M: float) -> np.ndarray:
    norm = float(np.linalg.norm(w))
    if norm > M:
        return w * (M / norm)
    return w


def ftrl_objective(w, X, y, c, eta) -> float:
    obj = float(np.sum(lq_loss(X @ w - y, c)))
    if math.isfinite(eta):
        obj += float(w @ w) / (2.0 * eta)
    return obj


def solve_ftrl(X, y, c, M, eta, w0=None, tol=1e-8, max_iter=10_000,
               trace=None):
    """Minimize ``sum_i H_c(<w, x_i> - y_i) + |w|^2 / (2 eta)`` over ``|w| <= M``.

    Projected gradient descent with step ``1 / (len(y) + 1/eta)``, which
    bounds the smoothness constant whenever all ``|x_i| <= 1``. Pass
    ``eta=math.inf`` to drop the regularizer (batch comparator). Stops
    once a step moves ``w`` by at most ``tol`` or after ``max_iter`` steps.
    If ``trace`` is a list, the objective at every iterate is appended.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    d = X.shape[1]
    w = np.zeros(d) if w0 is None else project_ball(np.array(w0, dtype=float), M)
    inv_eta = 0.0 if math.isinf(eta) else 1.0 / eta
    if len(y) == 0 and inv_eta == 0.0:
        return w
    step = 1.0 / (len(y) + inv_eta)
    if trace is not None:
        trace.append(ftrl_objective(w, X, y, c, eta))
    for _ in range(max_iter):
        grad = X.T @ lq_loss_grad(X @ w - y, c) + inv_eta * w
        w_next = project_ball(w - step * grad, M)
        moved = float(np.linalg.norm(w_next - w))
        w = w_next
        if trace is not None:
            trace.append(ftrl_objective(w, X, y, c, eta))
        if moved <= tol:
            break
    return w


class FtrlOracle:
    """Follow-the-regularized-leader with regularizer ``|w|^2 / (2 eta)``
    over the ball ``|w| <= norm_bound``.

    Deterministic; each prediction warm-starts from the previous one.
    """

    def __init__(self, dim: int, norm_bound: float, loss_cost: float,
                 eta: float, tol: float = 1e-8, max_iter: int = 10_000):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        if not (norm_bound > 0 and loss_cost > 0 and eta > 0):
            raise ValueError("norm_bound, loss_cost and eta must be positive")
        self.dim = dim
        self.norm_bound = float(norm_bound)
        self.loss_cost = float(loss_cost)
        self.eta = float(eta)
        self.tol = tol
        self.max_iter = max_iter
        self._X = np.empty((16, dim))
        self._y = np.empty(16)
        self._n = 0
        self.current_w = np.zeros(dim)
        self._stale = False

    @property
    def history(self):
        return [(self._X[i].copy(), float(self._y[i])) for i in range(self._n)]

    @property
    def n_observations(self) -> int:
        return self._n

    def predict(self, t: int | None = None) -> np.ndarray:
        if self._stale:
            self.current_w = solve_ftrl(
                self._X[:self._n], self._y[:self._n], self.loss_cost,
                self.norm_bound, self.eta, w0=self.current_w,
                tol=self.tol, max_iter=self.max_iter)
            self._stale = False
        return self.current_w.copy()

    def wants_feedback(self, t: int | None = None) -> bool:
        return True

    def update(self, x, y: float) -> None:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected context of shape ({self.dim},), got {x.shape}")
        if np.linalg.norm(x) > 1.0 + NORM_SLACK:
            raise ValueError("context norm exceeds 1")
        if self._n == len(self._y):
            self._X = np.concatenate([self._X, np.empty_like(self._X)])
            self._y = np.concatenate([self._y, np.empty_like(self._y)])
        self._X[self._n] = x
        self._y[self._n] = y
        self._n += 1
        self._stale = True


class CostlyFeedbackOracle:
    """Run a full-information oracle on paid-for feedback.

    The horizon is cut into consecutive intervals of ``interval_len`` rounds
    (the last one may be shorter). One prediction is fetched from ``inner``
    at the start of each interval and repeated for all of its rounds, and a
    single round of each interval, drawn uniformly from the wrapper's own
    seeded generator, is the one at which feedback is requested.
    """

    def __init__(self, inner, interval_len: int, horizon: int, seed: int):
        if not 1 <= interval_len <= horizon:
            raise ValueError("need 1 <= interval_len <= horizon")
        self.inner = inner
        self.interval_len = int(interval_len)
        self.horizon = int(horizon)
        self.seed = seed
        self._rng = np.random.default_rng(seed)
        self._interval = -1
        self.current_interval_w = None
        self.feedback_round_in_interval = None
        self.requests = 0

    @property
    def n_intervals(self) -> int:
        return -(-self.horizon // self.interval_len)

    def _enter(self, t: int) -> None:
        if not 0 <= t < self.horizon:
            raise ValueError(f"round {t} outside horizon {self.horizon}")
        idx = t // self.interval_len
        if idx == self._interval:
            return
        if idx < self._interval:
            raise ValueError("rounds must be visited in nondecreasing order")
        # intervals that were skipped entirely still consume one draw each
        while self._interval < idx:
            self._interval += 1
            start = self._interval * self.interval_len
            end = min(start + self.interval_len, self.horizon)
            self.feedback_round_in_interval = start + int(self._rng.integers(end - start))
        self.current_interval_w = self.inner.predict(t)

    def predict(self, t: int) -> np.ndarray:
        self._enter(t)
        return self.current_interval_w.copy()

    def wants_feedback(self, t: int) -> bool:
        self._enter(t)
        return t == self.feedback_round_in_interval

    def update(self, x, y: float) -> None:
        self.inner.update(x, y)
        self.requests += 1
