import math

import numpy as np
import pytest

from contextual_pandora.loss import lq_loss_grad
from contextual_pandora.oracle import (CostlyFeedbackOracle, FtrlOracle, ftrl_eta,
                                       ftrl_objective, ftrl_regret_bound,
                                       interval_size, solve_ftrl)
from contextual_pandora.verification import (batch_minimum, costly_regret,
                                             ftrl_regret, realizable_sequence)


class TestSchedules:
    def test_eta_values(self):
        assert ftrl_eta(4, 1, 300) == pytest.approx(2 / (4 * math.sqrt(600)))
        assert ftrl_eta(4, 1, 300) == pytest.approx(0.020412, abs=1e-6)
        assert ftrl_eta(1, 1, 2) == pytest.approx(0.5)

    def test_eta_at_tie(self):
        assert ftrl_eta(2.5, 2.5, 7) == pytest.approx(math.sqrt(2.5) / (2.5 * math.sqrt(14)))

    def test_eta_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            ftrl_eta(0, 1, 1)

    @pytest.mark.parametrize("T,c,M,k", [(300, 1, 4, 1), (10**6, 1, 1, 79)])
    def test_interval_size(self, T, c, M, k):
        assert interval_size(T, c, M) == k

    def test_interval_size_clamped(self):
        rng = np.random.default_rng(0)
        for _ in range(500):
            T = int(rng.integers(1, 10**6))
            k = interval_size(T, rng.uniform(0.01, 100), rng.uniform(0.01, 100))
            assert 1 <= k <= T


class TestFtrlOracle:
    def test_empty_history_predicts_zero(self):
        np.testing.assert_array_equal(FtrlOracle(3, 4.0, 1.0, 0.1).predict(0), np.zeros(3))

    def test_stationarity_interior(self):
        # objective H_1(w1 - 1) + |w|^2; below the kink w1 = c * eta = 0.5
        o = FtrlOracle(2, 4.0, 1.0, 0.5)
        o.update([1.0, 0.0], 1.0)
        w = o.predict(1)
        x = np.array([1.0, 0.0])
        residual = w @ x - 1.0
        np.testing.assert_allclose(lq_loss_grad(residual, 1.0) * x + w / 0.5, 0, atol=1e-7)
        np.testing.assert_allclose(w, [0.5, 0.0], atol=1e-7)

    def test_tiny_ball_collapses(self):
        o = FtrlOracle(2, 1e-9, 1.0, 10.0)
        o.update([0.6, 0.8], -3.0)
        assert np.linalg.norm(o.predict(1)) <= 1e-9 + 1e-12

    def test_rejects_long_context(self):
        o = FtrlOracle(2, 1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            o.update([1.0, 1.0], 0.0)
        assert o.n_observations == 0

    def test_order_independent(self):
        rng = np.random.default_rng(1)
        pairs = [(x / max(1, np.linalg.norm(x)), rng.uniform(0, 5)) for x in rng.normal(size=(20, 3))]
        a, b = FtrlOracle(3, 2.0, 1.0, 0.3), FtrlOracle(3, 2.0, 1.0, 0.3)
        for x, y in pairs:
            a.update(x, y)
        for x, y in reversed(pairs):
            b.update(x, y)
        np.testing.assert_allclose(a.predict(20), b.predict(20), atol=1e-7)

    def test_deterministic(self):
        X, y = realizable_sequence(3, T=50)
        preds = []
        for _ in range(2):
            o = FtrlOracle(5, 4.0, 1.0, 0.05)
            for t in range(50):
                o.update(X[t], y[t])
            preds.append(o.predict(50))
        np.testing.assert_array_equal(*preds)

    def test_always_wants_feedback(self):
        assert FtrlOracle(1, 1.0, 1.0, 1.0).wants_feedback(17)

    def test_predictions_stay_in_ball(self):
        X, y = realizable_sequence(4, T=200)
        o = FtrlOracle(5, 1.5, 1.0, 5.0)
        for t in range(200):
            assert np.linalg.norm(o.predict(t)) <= 1.5 + 1e-12
            o.update(X[t], y[t])

    def test_objective_gap_small(self):
        X, y = realizable_sequence(5, T=150)
        o = FtrlOracle(5, 4.0, 1.0, ftrl_eta(4, 1, 150))
        for t in range(150):
            o.update(X[t], y[t])
        w = o.predict(150)
        w_ref = solve_ftrl(X, y, 1.0, 4.0, o.eta, tol=1e-15, max_iter=100_000)
        gap = ftrl_objective(w, X, y, 1.0, o.eta) - ftrl_objective(w_ref, X, y, 1.0, o.eta)
        assert gap <= 1e-10


class TestSolver:
    def test_monotone_descent(self):
        X, y = realizable_sequence(6, T=120)
        trace = []
        solve_ftrl(X, y, 1.0, 4.0, 0.02, trace=trace)
        assert len(trace) > 2
        assert np.all(np.diff(trace) <= 1e-9)

    def test_monotone_descent_when_ball_binds(self):
        X, y = realizable_sequence(7, T=120)
        trace = []
        w = solve_ftrl(X, y, 1.0, 0.5, 10.0, trace=trace)
        assert np.linalg.norm(w) == pytest.approx(0.5)
        assert np.all(np.diff(trace) <= 1e-9)

    def test_batch_minimum_matches_scipy(self):
        from scipy.optimize import minimize

        X, y = realizable_sequence(8, T=100)
        f = lambda w: float(np.sum(np.where(X @ w - y > 0, 0.5 * (X @ w - y) ** 2, 0) - (X @ w - y)))
        ref = minimize(f, np.zeros(5), method="SLSQP", options={"ftol": 1e-14, "maxiter": 1000},
                       constraints=[{"type": "ineq", "fun": lambda w: 16 - w @ w}])
        assert batch_minimum(X, y, 1.0, 4.0) == pytest.approx(ref.fun, abs=1e-6)


def test_regret_within_standard_ftrl_bound():
    # With U = |w|^2 / (2 eta) the regularizer spans M^2 / (2 eta) on the ball.
    M, c, T = 4.0, 1.0, 300
    eta = ftrl_eta(M, c, T)
    bound = M * M / (2 * eta) + eta * max(M, c) ** 2 * T
    for s in range(10):
        X, y = realizable_sequence(100 + s, T=T)
        assert ftrl_regret(X, y, c, M) <= bound


def test_regret_grows_sublinearly():
    X, y = realizable_sequence(200, T=400)
    early = ftrl_regret(X[:100], y[:100], 1.0, 4.0)
    late = ftrl_regret(X, y, 1.0, 4.0)
    assert late / 400 < early / 100


class _Recorder:
    def __init__(self, d=2):
        self.calls = 0
        self.updates = []
        self.d = d

    def predict(self, t):
        self.calls += 1
        return np.full(self.d, float(self.calls))

    def wants_feedback(self, t):
        return True

    def update(self, x, y):
        self.updates.append((tuple(x), y))


class TestCostlyFeedback:
    def _requests(self, T, k, seed):
        o = CostlyFeedbackOracle(_Recorder(), k, T, seed)
        rounds = []
        for t in range(T):
            o.predict(t)
            if o.wants_feedback(t):
                o.update([0.0, 0.0], 1.0)
                rounds.append(t)
        return rounds, o

    @pytest.mark.parametrize("T,k,expected", [(6, 2, 3), (5, 2, 3), (7, 7, 1), (10, 3, 4)])
    def test_one_request_per_interval(self, T, k, expected):
        rounds, o = self._requests(T, k, seed=1)
        assert len(rounds) == expected == o.n_intervals == o.requests
        assert [r // k for r in rounds] == list(range(expected))

    def test_same_seed_same_pattern(self):
        assert self._requests(50, 4, 9)[0] == self._requests(50, 4, 9)[0]

    def test_feedback_round_uniform(self):
        counts = np.zeros(4)
        for seed in range(4000):
            o = CostlyFeedbackOracle(_Recorder(), 4, 4, seed)
            o.predict(0)
            counts[o.feedback_round_in_interval] += 1
        chi2 = np.sum((counts - 1000) ** 2 / 1000)
        assert chi2 < 16.27  # 0.999 quantile, 3 dof

    def test_prediction_constant_within_interval(self):
        o = CostlyFeedbackOracle(_Recorder(), 3, 9, 0)
        preds = [o.predict(t) for t in range(9)]
        for start in (0, 3, 6):
            for p in preds[start:start + 3]:
                np.testing.assert_array_equal(p, preds[start])
        assert o.inner.calls == 3

    def test_k_equal_one_matches_inner(self):
        X, y = realizable_sequence(9, T=40)
        plain = FtrlOracle(5, 4.0, 1.0, 0.1)
        wrapped = CostlyFeedbackOracle(FtrlOracle(5, 4.0, 1.0, 0.1), 1, 40, 3)
        for t in range(40):
            np.testing.assert_array_equal(plain.predict(t), wrapped.predict(t))
            assert wrapped.wants_feedback(t)
            plain.update(X[t], y[t])
            wrapped.update(X[t], y[t])

    def test_rejects_bad_interval(self):
        with pytest.raises(ValueError):
            CostlyFeedbackOracle(_Recorder(), 0, 5, 0)
        with pytest.raises(ValueError):
            CostlyFeedbackOracle(_Recorder(), 6, 5, 0)

    def test_round_outside_horizon(self):
        with pytest.raises(ValueError):
            CostlyFeedbackOracle(_Recorder(), 2, 4, 0).predict(4)

    def test_costly_regret_bound_on_average(self):
        M, c, T, k = 4.0, 1.0, 120, 4
        n_int = T // k
        bound = k * ftrl_regret_bound(M, c, n_int) + c * n_int
        totals = [costly_regret(*realizable_sequence(300 + s, T=T), c, M, k, seed=s)[0]
                  for s in range(20)]
        assert np.mean(totals) <= bound
