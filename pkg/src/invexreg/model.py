"""Core domain types and the lifting algebra.

The squared loss of a sample becomes a linear functional of a lifted
(p+1)x(p+1) matrix variable: f(x, y, theta) = <A, V> with A built from
(x, y) and V = [theta; 1][theta; 1]^T.  Everything downstream (solver,
duals, oracle) works in this lifted coordinate system.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CLEAN = "clean"
OUTLIER = "outlier"

__all__ = [
    "CLEAN",
    "OUTLIER",
    "Dataset",
    "GroundTruthConfig",
    "LiftedSample",
    "Vartheta",
    "squared_loss",
    "lift_sample",
    "lift_parameter",
    "extract_theta",
    "sample_losses",
    "objective",
    "save_dataset",
    "load_dataset",
]


@dataclass(frozen=True, eq=False)
class GroundTruthConfig:
    """Parameters of the clean generative model.

    sigma is the sub-Gaussian scale of the standardized predictors and only
    feeds theory-scale formulas; the sampled predictor law is Gaussian with
    covariance Sigma (identity when Sigma is None).
    """

    p: int
    k: int
    M: float
    sigma: float = 1.0
    sigma_e: float = 0.1
    Sigma: np.ndarray | None = None  # None means identity

    def __post_init__(self):
        if not (0 < self.k <= self.p):
            raise ValueError(f"need 0 < k <= p, got k={self.k}, p={self.p}")
        if self.M < 0:
            raise ValueError("M must be >= 0")
        if self.Sigma is not None:
            S = np.asarray(self.Sigma, dtype=float)
            if S.shape != (self.p, self.p):
                raise ValueError("Sigma must be p x p")
            if not np.allclose(S, S.T, atol=1e-10):
                raise ValueError("Sigma must be symmetric")
            if np.linalg.eigvalsh(S).min() < -1e-10:
                raise ValueError("Sigma must be positive semidefinite")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design matrix, responses and per-sample clean/outlier tags."""

    X: np.ndarray              # (n, p)
    y: np.ndarray              # (n,)
    labels: np.ndarray         # (n,) strings, CLEAN or OUTLIER
    theta_star: np.ndarray | None = None
    r: int = 0                 # number of clean samples
    rho: float | None = None   # realized loss gap, > 0 (inf if no outliers)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        labels = np.asarray(self.labels)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise ValueError("X must be (n, p) and y (n,) with matching n")
        if labels.shape[0] != X.shape[0]:
            raise ValueError("labels length must equal n")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "labels", labels)
        if self.theta_star is not None:
            ts = np.asarray(self.theta_star, dtype=float)
            if ts.shape != (X.shape[1],):
                raise ValueError("theta_star must have length p")
            object.__setattr__(self, "theta_star", ts)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def clean_mask(self) -> np.ndarray:
        return self.labels == CLEAN

    @property
    def outlier_mask(self) -> np.ndarray:
        return self.labels == OUTLIER


@dataclass(frozen=True, eq=False)
class LiftedSample:
    """One sample encoded as the symmetric rank-1 matrix A = z z^T, z = [x; -y]."""

    A: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        object.__setattr__(self, "A", A)


@dataclass(frozen=True, eq=False)
class Vartheta:
    """Lifted decision matrix: symmetric PSD with bottom-right entry fixed to 1."""

    V: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.V, dtype=float)
        if V.ndim != 2 or V.shape[0] != V.shape[1]:
            raise ValueError("V must be square")
        object.__setattr__(self, "V", V)

    @property
    def p(self) -> int:
        return self.V.shape[0] - 1

    def check(self, tol_psd: float = 1e-8) -> None:
        """Raise if the PSD-with-corner invariants are violated beyond tol."""
        corner = self.V[-1, -1]
        if abs(corner - 1.0) > tol_psd:
            raise ValueError(f"corner entry must be 1, got {corner}")
        if not np.allclose(self.V, self.V.T, atol=1e-9):
            raise ValueError("V must be symmetric")
        lo = np.linalg.eigvalsh(self.V)[0]
        if lo < -tol_psd:
            raise ValueError(f"min eigenvalue {lo} below -{tol_psd}")


def squared_loss(x: np.ndarray, y: float, theta: np.ndarray) -> float:
    """(y - <x, theta>)^2 for a single sample."""
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if x.shape != theta.shape:
        raise ValueError(f"dimension mismatch: x {x.shape} vs theta {theta.shape}")
    r = y - x @ theta
    return float(r * r)


def lift_sample(x: np.ndarray, y: float) -> LiftedSample:
    """Build A = [[x x^T, -x y], [-y x^T, y^2]] = z z^T with z = [x; -y]."""
    x = np.asarray(x, dtype=float)
    if not (np.all(np.isfinite(x)) and np.isfinite(y)):
        raise ValueError("non-finite input to lift_sample")
    z = np.concatenate([x, [-float(y)]])
    return LiftedSample(np.outer(z, z))


def lift_parameter(theta: np.ndarray) -> Vartheta:
    """Rank-1 feasible point [theta; 1][theta; 1]^T."""
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise ValueError("non-finite input to lift_parameter")
    z = np.concatenate([theta, [1.0]])
    return Vartheta(np.outer(z, z))


def extract_theta(vartheta: Vartheta, rank_tol: float = 1e-3) -> tuple[np.ndarray, float]:
    """Read theta off the last column of V and report the rank-1 defect.

    Returns (theta, rank1_gap) where rank1_gap = lambda_2 / lambda_1 of V
    (eigenvalues sorted descending).  Exact under rank-1 structure because
    the corner entry is pinned to 1.  Warns when the gap exceeds rank_tol.
    """
    V = vartheta.V
    theta = V[:-1, -1].copy()
    w = np.linalg.eigvalsh(V)  # ascending
    lam1, lam2 = w[-1], w[-2]
    if lam1 <= 0:
        raise ValueError("degenerate lifted matrix: leading eigenvalue is not positive")
    rank1_gap = float(max(lam2, 0.0) / lam1)
    if rank1_gap > rank_tol:
        warnings.warn(
            f"lifted matrix is far from rank one (gap {rank1_gap:.3g} > {rank_tol:.3g})",
            stacklevel=2,
        )
    return theta, rank1_gap


def sample_losses(X: np.ndarray, y: np.ndarray, V: np.ndarray) -> np.ndarray:
    """<A_i, V> for every row, without materializing the A_i.

    Expands to x_i^T V11 x_i - 2 y_i x_i^T v + y_i^2 V_corner where V11 is
    the leading p x p block and v the first p entries of the last column.
    """
    V11 = V[:-1, :-1]
    v = V[:-1, -1]
    quad = np.einsum("ij,jk,ik->i", X, V11, X)
    return quad - 2.0 * y * (X @ v) + (y * y) * V[-1, -1]


def objective(b: np.ndarray, vartheta: Vartheta, data: Dataset, lam: float) -> float:
    """sum_i b_i <A_i, V> + lam * ||V||_1 (entrywise, corner included)."""
    b = np.asarray(b, dtype=float)
    losses = sample_losses(data.X, data.y, vartheta.V)
    return float(b @ losses + lam * np.abs(vartheta.V).sum())


# ---------------------------------------------------------------------------
# Dataset serialization: CSV with header y,x1,...,xp,label plus a JSON sidecar.

_META_KEYS = ("p", "k", "M", "sigma", "sigma_e", "seed")


def save_dataset(data: Dataset, prefix: str | Path) -> tuple[Path, Path]:
    """Write <prefix>.csv and <prefix>.json; returns both paths."""
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    csv_path = prefix.with_suffix(".csv")
    json_path = prefix.with_suffix(".json")
    p = data.p
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["y"] + [f"x{j+1}" for j in range(p)] + ["label"])
        for i in range(data.n):
            w.writerow([repr(float(data.y[i]))]
                       + [repr(float(v)) for v in data.X[i]]
                       + [str(data.labels[i])])
    meta = {k: data.meta.get(k) for k in _META_KEYS}
    meta["p"] = p
    meta["n"] = data.n
    meta["r"] = data.r
    meta["rho"] = None if data.rho is None else (
        "inf" if np.isinf(data.rho) else float(data.rho))
    meta["theta_star"] = (None if data.theta_star is None
                          else [float(v) for v in data.theta_star])
    with open(json_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path


def load_dataset(prefix: str | Path) -> Dataset:
    """Read back a dataset written by save_dataset."""
    prefix = Path(prefix)
    csv_path = prefix.with_suffix(".csv")
    json_path = prefix.with_suffix(".json")
    with open(json_path) as fh:
        meta = json.load(fh)
    rows_y, rows_x, labels = [], [], []
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        p = len(header) - 2
        for row in reader:
            rows_y.append(float(row[0]))
            rows_x.append([float(v) for v in row[1:1 + p]])
            labels.append(row[-1])
    rho = meta.get("rho")
    if rho == "inf":
        rho = np.inf
    theta_star = meta.get("theta_star")
    return Dataset(
        X=np.asarray(rows_x, dtype=float),
        y=np.asarray(rows_y, dtype=float),
        labels=np.asarray(labels),
        theta_star=None if theta_star is None else np.asarray(theta_star, dtype=float),
        r=int(meta.get("r") or 0),
        rho=rho,
        meta={k: meta.get(k) for k in _META_KEYS},
    )
