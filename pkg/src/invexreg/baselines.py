"""Comparison methods: standard lasso, a Huber-loss adaptive lasso proxy,
and a trimmed robust-lasso proxy.

The adaptive and trimmed variants approximate the published methods they
stand in for (documented as *-proxy in benchmark output); they exist as
comparison curves, not reference implementations.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .model import Dataset

__all__ = ["BaselineConfig", "lasso", "adaptive_huber_lasso", "trimmed_lasso"]


@dataclass(frozen=True)
class BaselineConfig:
    method: str = "lasso"            # lasso | adahuber | trimmed
    lam: float = 1.0
    huber_delta: float | None = None  # None = 1.345 x MAD scale of stage-0 residuals
    trim_count: int = 0
    max_iters: int = 5000
    tol: float = 1e-10

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.huber_delta is not None and self.huber_delta <= 0:
            raise ValueError("huber_delta must be positive")
        if self.trim_count < 0:
            raise ValueError("trim_count must be >= 0")


def _fista_lasso(X, y, lam, weights=None, max_iters=5000, tol=1e-10,
                 sample_weights=None):
    """min sum w_i (y_i - <X_i, theta>)^2 + sum_j lam_j |theta_j|.

    lam_j = lam * weights_j (weights default to one).  Plain FISTA with
    adaptive restart; the stopping rule is the subgradient residual.
    """
    n, p = X.shape
    if sample_weights is not None:
        sw = np.sqrt(sample_weights)
        X = X * sw[:, None]
        y = y * sw
    lam_j = np.full(p, lam) if weights is None else lam * np.asarray(weights, float)
    L = 2.0 * float(np.linalg.norm(X, 2)) ** 2
    if L <= 0:
        return np.zeros(p)
    step = 1.0 / L
    theta = np.zeros(p)
    z = theta.copy()
    t_acc = 1.0
    for it in range(max_iters):
        g = 2.0 * (X.T @ (X @ z - y))
        w = z - step * g
        theta_new = np.sign(w) * np.maximum(np.abs(w) - step * lam_j, 0.0)
        if np.dot(z - theta_new, theta_new - theta) > 0:  # restart
            z = theta.copy()
            t_acc = 1.0
            g = 2.0 * (X.T @ (X @ z - y))
            w = z - step * g
            theta_new = np.sign(w) * np.maximum(np.abs(w) - step * lam_j, 0.0)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_acc * t_acc))
        z = theta_new + ((t_acc - 1.0) / t_new) * (theta_new - theta)
        theta, t_acc = theta_new, t_new
        if it % 10 == 0:
            g = 2.0 * (X.T @ (X @ theta - y))
            resid = np.where(theta != 0.0,
                             np.abs(g + lam_j * np.sign(theta)),
                             np.maximum(np.abs(g) - lam_j, 0.0))
            if resid.max(initial=0.0) <= tol * (1.0 + lam):
                break
    return theta


def lasso(data: Dataset, cfg: BaselineConfig) -> np.ndarray:
    """Standard lasso on all samples: sum of squared residuals + lam * ||theta||_1."""
    return _fista_lasso(data.X, data.y, cfg.lam,
                        max_iters=cfg.max_iters, tol=cfg.tol)


def _huber_weights(resid, delta):
    """IRLS weights for the Huber loss: 1 on the quadratic branch, delta/|r| beyond."""
    a = np.abs(resid)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(a <= delta, 1.0, delta / np.maximum(a, 1e-300))
    return w


def _mad_scale(resid) -> float:
    med = np.median(resid)
    return 1.4826 * float(np.median(np.abs(resid - med)))


def adaptive_huber_lasso(data: Dataset, cfg: BaselineConfig) -> np.ndarray:
    """Two-stage Huber-loss lasso with adaptive per-coordinate weights.

    Stage 1 minimizes the Huber loss of the residuals plus lam ||theta||_1
    by iteratively reweighted least squares wrapped around the weighted
    lasso solve.  When no huber_delta is configured, the residual scale
    (and with it delta = 1.345 x MAD) is re-estimated after each pass: the
    plain stage-0 fit can be wrecked by gross outliers, and the iteration
    contracts the scale back to the clean residuals.  Stage 2 re-solves
    with coordinate penalties lam / |theta_j| from the stage-1 estimate
    (capped at 1e6).
    """
    X, y = data.X, data.y
    theta = _fista_lasso(X, y, cfg.lam, max_iters=cfg.max_iters, tol=cfg.tol)

    def huber_stage(th, delta, coord_weights):
        for _ in range(50):
            w = _huber_weights(y - X @ th, delta)
            th_new = _fista_lasso(X, y, cfg.lam, weights=coord_weights,
                                  max_iters=cfg.max_iters, tol=cfg.tol,
                                  sample_weights=w)
            if np.linalg.norm(th_new - th) <= 1e-9 * (1.0 + np.linalg.norm(th)):
                return th_new
            th = th_new
        return th

    if cfg.huber_delta is not None:
        delta = cfg.huber_delta
        theta1 = huber_stage(theta, delta, None)
    else:
        delta = None
        theta1 = theta
        for _ in range(12):
            d_new = 1.345 * max(_mad_scale(y - X @ theta1), 1e-8)
            theta1 = huber_stage(theta1, d_new, None)
            if delta is not None and abs(d_new - delta) <= 1e-3 * delta:
                delta = d_new
                break
            delta = d_new

    inv = 1.0 / np.maximum(np.abs(theta1), 1e-12)
    coord_weights = np.minimum(inv, 1e6)
    return huber_stage(theta1, delta, coord_weights)


def trimmed_lasso(data: Dataset, cfg: BaselineConfig) -> tuple[np.ndarray, np.ndarray]:
    """Alternate lasso fits with dropping the largest-residual samples.

    Keeps n - trim_count samples each round; stops at a fixed point of the
    kept set or after max_iters rounds.  A cycling kept set triggers a
    warning and returns the last iterate.
    """
    n = data.n
    if cfg.trim_count >= n:
        raise ValueError("trim_count must be < n")
    keep_size = n - cfg.trim_count
    kept = np.ones(n, dtype=bool)
    if cfg.trim_count == 0:
        return lasso(data, cfg), kept
    theta = np.zeros(data.p)
    seen = []
    for _ in range(max(1, cfg.max_iters)):
        theta = _fista_lasso(data.X[kept], data.y[kept], cfg.lam,
                             max_iters=cfg.max_iters, tol=cfg.tol)
        resid = np.abs(data.y - data.X @ theta)
        order = np.argsort(resid, kind="stable")
        new_kept = np.zeros(n, dtype=bool)
        new_kept[order[:keep_size]] = True
        if np.array_equal(new_kept, kept):
            return theta, kept
        key = new_kept.tobytes()
        if key in seen:
            warnings.warn("trimmed lasso kept set is cycling; returning last iterate",
                          stacklevel=2)
            return theta, new_kept
        seen.append(key)
        kept = new_kept
    warnings.warn("trimmed lasso did not reach a fixed point", stacklevel=2)
    return theta, kept
