"""Synthetic data: clean linear-model samples plus loss-gap-separated outliers.

An outlier is a sample whose squared loss at the true parameter exceeds
every clean sample's loss by a strictly positive margin; the generator
enforces this by resampling offending outliers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import CLEAN, OUTLIER, Dataset, GroundTruthConfig

__all__ = [
    "GenSpec",
    "ResampleExhausted",
    "gen_theta_star",
    "gen_clean",
    "gen_outliers",
    "rho_gap",
    "generate",
]


class ResampleExhausted(RuntimeError):
    """Could not satisfy the outlier loss-gap margin within max_resamples."""


@dataclass(frozen=True, eq=False)
class GenSpec:
    ground_truth: GroundTruthConfig
    r: int
    n_outliers: int
    outlier_predictor_range: tuple[float, float] = (0.0, 1.0)
    outlier_response_range: tuple[float, float] = (0.0, 5.0)
    seed: int = 0
    max_resamples: int = 100
    # extra margin required on the realized loss gap; 0 keeps plain strict
    # positivity, larger values force well-separated instances.
    rho_min: float = 0.0

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("need at least one clean sample")
        if self.n_outliers < 0:
            raise ValueError("n_outliers must be >= 0")
        for lo, hi in (self.outlier_predictor_range, self.outlier_response_range):
            if hi < lo:
                raise ValueError("empty interval")


def _rngs(spec: GenSpec) -> dict[str, np.random.Generator]:
    """Independent named streams so each stage is reproducible on its own."""
    children = np.random.SeedSequence(spec.seed).spawn(4)
    names = ("theta", "clean", "outliers", "shuffle")
    return {name: np.random.default_rng(ss) for name, ss in zip(names, children)}


def _theta_star_with_flag(spec: GenSpec) -> tuple[np.ndarray, bool]:
    gt = spec.ground_truth
    rng = _rngs(spec)["theta"]
    theta = np.zeros(gt.p)
    support = rng.choice(gt.p, size=gt.k, replace=False)
    mags = rng.uniform(0.1, 1.1, size=gt.k)
    signs = rng.choice([-1.0, 1.0], size=gt.k)
    theta[support] = signs * mags
    l1 = np.abs(theta).sum()
    rescaled = l1 > gt.M > 0
    if rescaled:
        theta *= gt.M / l1
    return theta, rescaled


def gen_theta_star(spec: GenSpec) -> np.ndarray:
    """k-sparse parameter: support uniform, magnitudes uniform on [0.1, 1.1].

    Signs are random; if the L1 norm exceeds the budget M the vector is
    rescaled down to M (generate() records this in the dataset metadata).
    """
    return _theta_star_with_flag(spec)[0]


def _draw_clean(rng, gt: GroundTruthConfig, count: int, theta_star: np.ndarray):
    if gt.Sigma is None:
        X = rng.standard_normal((count, gt.p))
    else:
        L = np.linalg.cholesky(np.asarray(gt.Sigma, dtype=float)
                               + 1e-12 * np.eye(gt.p))
        X = rng.standard_normal((count, gt.p)) @ L.T
    e = rng.normal(0.0, gt.sigma_e, size=count) if gt.sigma_e > 0 else np.zeros(count)
    y = X @ theta_star + e
    return X, y


def gen_clean(spec: GenSpec, theta_star: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """r rows of Gaussian predictors and responses y = X theta* + e."""
    if not np.all(np.isfinite(theta_star)):
        raise ValueError("theta_star must be finite")
    rng = _rngs(spec)["clean"]
    return _draw_clean(rng, spec.ground_truth, spec.r, theta_star)


def _draw_outliers(rng, spec: GenSpec, count: int):
    plo, phi = spec.outlier_predictor_range
    rlo, rhi = spec.outlier_response_range
    X = rng.uniform(plo, phi, size=(count, spec.ground_truth.p))
    y = rng.uniform(rlo, rhi, size=count)
    return X, y


def gen_outliers(spec: GenSpec) -> tuple[np.ndarray, np.ndarray]:
    """Predictors and responses drawn i.i.d. uniform on the configured ranges."""
    rng = _rngs(spec)["outliers"]
    return _draw_outliers(rng, spec, spec.n_outliers)


def rho_gap(data: Dataset, theta_star: np.ndarray) -> float:
    """min over outliers of loss minus max over clean of loss, at theta_star.

    Returns +inf when either class is empty (nothing to separate).
    """
    res = data.y - data.X @ np.asarray(theta_star, dtype=float)
    losses = res * res
    clean, out = data.clean_mask, data.outlier_mask
    if not clean.any() or not out.any():
        return np.inf
    return float(losses[out].min() - losses[clean].max())


def generate(spec: GenSpec) -> Dataset:
    """Full dataset: clean + outliers, margin-enforced, shuffled, labeled."""
    rngs = _rngs(spec)
    gt = spec.ground_truth
    theta_star, rescaled = _theta_star_with_flag(spec)

    Xc, yc = _draw_clean(rngs["clean"], gt, spec.r, theta_star)
    clean_losses = (yc - Xc @ theta_star) ** 2
    max_clean = clean_losses.max()

    Xo, yo = _draw_outliers(rngs["outliers"], spec, spec.n_outliers)
    if spec.n_outliers > 0:
        for attempt in range(spec.max_resamples + 1):
            gaps = (yo - Xo @ theta_star) ** 2 - max_clean
            bad = gaps < spec.rho_min if spec.rho_min > 0 else gaps <= 0.0
            if not bad.any():
                break
            if attempt == spec.max_resamples:
                raise ResampleExhausted(
                    f"{int(bad.sum())} outliers still violate the loss-gap margin "
                    f"after {spec.max_resamples} resampling rounds")
            Xb, yb = _draw_outliers(rngs["outliers"], spec, int(bad.sum()))
            Xo[bad], yo[bad] = Xb, yb

    X = np.vstack([Xc, Xo]) if spec.n_outliers > 0 else Xc
    y = np.concatenate([yc, yo]) if spec.n_outliers > 0 else yc
    labels = np.array([CLEAN] * spec.r + [OUTLIER] * spec.n_outliers)

    perm = rngs["shuffle"].permutation(spec.r + spec.n_outliers)
    X, y, labels = X[perm], y[perm], labels[perm]

    meta = {"p": gt.p, "k": gt.k, "M": gt.M, "sigma": gt.sigma,
            "sigma_e": gt.sigma_e, "seed": spec.seed, "theta_rescaled": rescaled}
    data = Dataset(X=X, y=y, labels=labels, theta_star=theta_star, r=spec.r,
                   meta=meta)
    rho = rho_gap(data, theta_star)
    if spec.n_outliers > 0 and rho <= 0:
        raise ResampleExhausted("generated dataset violates the loss-gap margin")
    return Dataset(X=X, y=y, labels=labels, theta_star=theta_star, r=spec.r,
                   rho=rho, meta=meta)
