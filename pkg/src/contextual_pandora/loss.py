"""Linear-quadratic loss ``H_c(z) = relu(z)**2 / 2 - c*z`` and the
regression loss it induces on linear predictors.

For a box with opening cost ``c``, the expected loss ``E[H_c(sigma - v)]``
is minimized exactly at the box's reservation value.
"""

from __future__ import annotations

import numpy as np


def lq_loss(z, c):
    r = np.maximum(z, 0.0)
    return 0.5 * r * r - c * z


def lq_loss_grad(z, c):
    """Derivative of :func:`lq_loss`; at the kink the relu term counts as 0."""
    return np.maximum(z, 0.0) - c


def _residual(w, x, y):
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    if w.shape != x.shape:
        raise ValueError(f"dimension mismatch: w{w.shape} vs x{x.shape}")
    return float(w @ x) - y, x


def regression_loss(w, x, y: float, c: float) -> float:
    z, _ = _residual(w, x, y)
    return float(lq_loss(z, c))


def regression_loss_grad(w, x, y: float, c: float) -> np.ndarray:
    z, x = _residual(w, x, y)
    return float(lq_loss_grad(z, c)) * x
