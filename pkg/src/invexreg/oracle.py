"""Brute-force ground truth for tiny instances.

Enumerates every size-m subset of the samples and solves the inner
penalized regression on each, so solver output can be checked against the
true discrete-continuous optimum.  A test fixture, not a production path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .model import Dataset
from .solver import refit

__all__ = ["CombinatorialBlowup", "OracleResult", "enumerate_best_subset",
           "subset_objective", "grid_search_theta"]


class CombinatorialBlowup(RuntimeError):
    """C(n, m) exceeds the configured enumeration cap."""


@dataclass(eq=False)
class OracleResult:
    J_star: tuple[int, ...]
    theta_under: np.ndarray          # full p, zero-padded off the support
    objective: float
    per_subset_objectives: list[tuple[tuple[int, ...], float]] | None = None

    def to_dict(self) -> dict:
        return {
            "J_star": list(self.J_star),
            "theta_under": self.theta_under.tolist(),
            "objective": self.objective,
            "per_subset_objectives": None if self.per_subset_objectives is None
            else [[list(J), v] for J, v in self.per_subset_objectives],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def subset_objective(data: Dataset, rows: np.ndarray, theta: np.ndarray,
                     lam: float) -> float:
    """sum over rows of squared residual plus lam (||theta||_1 + 1)^2."""
    rows = np.asarray(rows, dtype=int)
    res = data.y[rows] - data.X[rows] @ theta
    return float(res @ res + lam * (np.abs(theta).sum() + 1.0) ** 2)


def _multistart_refit(data, rows, lam, support, rng):
    """Three starts (zero, least squares, perturbed LS) against prox stalls."""
    cols = np.arange(data.p) if support is None else np.asarray(support, dtype=int)
    Xs = data.X[np.asarray(rows, dtype=int)][:, cols]
    ys = data.y[np.asarray(rows, dtype=int)]
    theta_ls, *_ = np.linalg.lstsq(Xs, ys, rcond=None)
    starts = [np.zeros(cols.size), theta_ls,
              theta_ls + 0.1 * rng.standard_normal(cols.size)]
    best_theta, best_obj = None, np.inf
    for t0 in starts:
        theta = refit(data, np.asarray(rows, dtype=int), lam, support=support,
                      theta0=t0, tol=1e-10)
        obj = subset_objective(data, rows, theta, lam)
        if obj < best_obj:
            best_theta, best_obj = theta, obj
    return best_theta, best_obj


def enumerate_best_subset(data: Dataset, m: int, lam: float,
                          support: np.ndarray | None = None,
                          cap: int = 100_000,
                          keep_table: bool = False,
                          seed: int = 0) -> OracleResult:
    """Solve the subset-selection regression exactly by enumeration.

    Ties in the objective resolve to the lexicographically smallest subset
    (enumeration order), matching the deterministic reduction contract.
    """
    n = data.n
    if m > n:
        raise ValueError(f"m={m} exceeds n={n}")
    total = comb(n, m)
    if total > cap:
        raise CombinatorialBlowup(f"C({n},{m}) = {total} exceeds cap {cap}")
    rng = np.random.default_rng(seed)
    best = None
    table = [] if keep_table else None
    for J in combinations(range(n), m):
        rows = np.asarray(J, dtype=int)
        theta, obj = _multistart_refit(data, rows, lam, support, rng)
        if table is not None:
            table.append((J, obj))
        if best is None or obj < best[1] - 1e-12:
            best = (J, obj, theta)
    J_star, objective, theta = best
    return OracleResult(J_star=tuple(J_star), theta_under=theta,
                        objective=objective, per_subset_objectives=table)


def grid_search_theta(data: Dataset, rows: np.ndarray, lam: float,
                      radius: float, step: float = 1e-3) -> tuple[np.ndarray, float]:
    """Solver-free inner-problem oracle for p <= 2: dense grid over theta.

    Returns the best grid point and its objective; breaks the circularity
    between the refit routine and the enumeration oracle.
    """
    if data.p > 2:
        raise ValueError("grid oracle only supports p <= 2")
    rows = np.asarray(rows, dtype=int)
    grid = np.arange(-radius, radius + step, step)
    if data.p == 1:
        TH = grid[None, :]
    else:
        G1, G2 = np.meshgrid(grid, grid, indexing="ij")
        TH = np.stack([G1.ravel(), G2.ravel()])
    R = data.y[rows][:, None] - data.X[rows] @ TH
    obj = (R * R).sum(axis=0) + lam * (np.abs(TH).sum(axis=0) + 1.0) ** 2
    i = int(obj.argmin())
    return TH[:, i].copy(), float(obj[i])
