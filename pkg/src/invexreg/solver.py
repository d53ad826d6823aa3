"""Solver for the lifted relaxation and the selected-subset refit.

The relaxation is minimized by block steps: the selection weights b have a
closed-form minimizer for fixed V (pick the m smallest lifted losses), and
V is driven by proximal gradient steps followed by a feasibility repair
onto the PSD-with-corner set.  A post-repair objective re-check keeps the
trace monotone.  The reported parameter estimate always comes from re-
fitting on the final selection.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .model import Dataset, Vartheta, extract_theta, lift_parameter, sample_losses
from .projections import project_psd_corner, prox_entrywise_l1

__all__ = [
    "InfeasibleM",
    "NonFinite",
    "SolverConfig",
    "SolveResult",
    "grad_vartheta",
    "b_step",
    "solve_invex",
    "refit",
    "prox_l1_plus_one_squared",
]


class InfeasibleM(ValueError):
    """Requested selection size exceeds the number of samples."""


class NonFinite(RuntimeError):
    """Objective became non-finite; the step size configuration is bad."""


@dataclass(frozen=True)
class SolverConfig:
    m: int
    lam: float
    max_outer: int = 200
    max_inner: int = 25
    step_rule: str = "backtracking"   # "backtracking" or "fixed"
    eta: float | None = None          # required for step_rule="fixed"
    beta: float = 0.5
    armijo_c: float = 1e-4
    tol_obj: float = 1e-8
    psd_iters: int = 200
    psd_tol: float = 1e-9
    seed: int = 0
    theta_init: np.ndarray | None = None  # None = zeros
    refit_max_iter: int = 20000
    refit_tol: float = 1e-8

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.step_rule not in ("backtracking", "fixed"):
            raise ValueError(f"unknown step_rule {self.step_rule!r}")
        if self.step_rule == "fixed" and (self.eta is None or self.eta <= 0):
            raise ValueError("fixed step rule needs a positive eta")


@dataclass(eq=False)
class SolveResult:
    b_hat: np.ndarray
    b_rounded: np.ndarray
    vartheta_hat: Vartheta
    theta_hat: np.ndarray
    rank1_gap: float
    objective_trace: list[float]
    outer_iters: int
    converged: bool
    config: SolverConfig | None = None

    @property
    def selection(self) -> np.ndarray:
        return np.flatnonzero(self.b_rounded > 0.5)

    def to_dict(self) -> dict:
        cfg = self.config
        return {
            "b_hat": self.b_hat.tolist(),
            "b_rounded": self.b_rounded.astype(int).tolist(),
            "theta_hat": self.theta_hat.tolist(),
            "rank1_gap": self.rank1_gap,
            "objective_trace": self.objective_trace,
            "outer_iters": self.outer_iters,
            "converged": self.converged,
            "config": None if cfg is None else {
                "m": cfg.m, "lam": cfg.lam, "max_outer": cfg.max_outer,
                "max_inner": cfg.max_inner, "step_rule": cfg.step_rule,
                "eta": cfg.eta, "beta": cfg.beta, "armijo_c": cfg.armijo_c,
                "tol_obj": cfg.tol_obj, "psd_iters": cfg.psd_iters,
                "psd_tol": cfg.psd_tol, "seed": cfg.seed,
            },
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def grad_vartheta(b: np.ndarray, data: Dataset) -> np.ndarray:
    """Gradient of the smooth part in V: sum_i b_i A_i, assembled blockwise."""
    b = np.asarray(b, dtype=float)
    if not np.all(np.isfinite(b)):
        raise ValueError("non-finite b")
    X, y = data.X, data.y
    p = data.p
    G = np.empty((p + 1, p + 1))
    Xw = X * b[:, None]
    G[:p, :p] = Xw.T @ X
    by = b * y
    G[:p, p] = -(X.T @ by)
    G[p, :p] = G[:p, p]
    G[p, p] = by @ y
    return 0.5 * (G + G.T)


def _top_m(losses: np.ndarray, m: int) -> np.ndarray:
    """Indices of the m smallest losses, ties resolved by smallest index."""
    order = np.argsort(losses, kind="stable")
    return np.sort(order[:m])


def b_step(vartheta: Vartheta, data: Dataset, m: int) -> np.ndarray:
    """Exact minimizer of sum_i b_i <A_i, V> over the weight polytope.

    The m smallest lifted losses get weight one; any further strictly
    negative losses (possible only through PSD tolerance slack) also get
    weight one since the sum constraint is one-sided.
    """
    if m > data.n:
        raise InfeasibleM(f"m={m} exceeds n={data.n}")
    losses = sample_losses(data.X, data.y, vartheta.V)
    b = np.zeros(data.n)
    b[_top_m(losses, m)] = 1.0
    b[losses < 0.0] = 1.0
    return b


def _initial_eta(G: np.ndarray, lam: float) -> float:
    gmax = float(np.linalg.eigvalsh(G)[-1]) if G.size else 1.0
    return 1.0 / (gmax + lam + 1e-12)


def _psd_renormalize(Z: np.ndarray, tol: float = 1e-9) -> np.ndarray | None:
    """Alternative feasibility repair: clip to the PSD cone, then restore the
    corner multiplicatively.  Exact in one pass; lands on the right ray for
    far-from-feasible inputs where alternating projections drift.  Returns
    None when the clipped corner is too small to renormalize.
    """
    S = 0.5 * (Z + Z.T)
    w, U = np.linalg.eigh(S)
    S = (U * np.maximum(w, 0.0)) @ U.T
    c = S[-1, -1]
    if not c > tol:
        return None
    S = S / c
    S = 0.5 * (S + S.T)
    S[-1, -1] = 1.0
    return S


def solve_invex(data: Dataset, cfg: SolverConfig) -> SolveResult:
    """Alternate the exact b-step with proximal projected-gradient V steps.

    Stops when the relative objective decrease over an outer round falls
    below tol_obj.  The rounded selection is the final b-step's top-m set
    and theta_hat is the refit on that selection.
    """
    if cfg.m > data.n:
        raise InfeasibleM(f"m={cfg.m} exceeds n={data.n}")
    lam = cfg.lam
    X, y = data.X, data.y

    theta0 = np.zeros(data.p) if cfg.theta_init is None else np.asarray(cfg.theta_init, float)
    V = lift_parameter(theta0).V

    losses = sample_losses(X, y, V)
    sel = _top_m(losses, cfg.m)
    b = np.zeros(data.n)
    b[sel] = 1.0
    b[losses < 0.0] = 1.0

    def full_obj(bvec, Vm, lvec=None):
        lvec = sample_losses(X, y, Vm) if lvec is None else lvec
        return float(bvec @ lvec + lam * np.abs(Vm).sum())

    obj = full_obj(b, V, losses)
    if not np.isfinite(obj):
        raise NonFinite("objective not finite at initialization")
    trace = [obj]

    eta = None
    converged = False
    outer = 0
    for outer in range(1, cfg.max_outer + 1):
        G = grad_vartheta(b, data)
        if eta is None or cfg.step_rule == "fixed":
            eta = cfg.eta if cfg.step_rule == "fixed" else _initial_eta(G, lam)
        # inside the block the smooth part is <G, V>, so the objective is
        # O(p^2) per candidate instead of O(n p^2)
        cur = float((G * V).sum() + lam * np.abs(V).sum())

        def score(M):
            v = float((G * M).sum() + lam * np.abs(M).sum())
            if not np.isfinite(v):
                raise NonFinite("objective diverged in the V step")
            return v

        def best_repair(step, pocs):
            """Feasible candidates from one prox step: corner renormalization
            of the PSD clip (one eigendecomposition), plus the alternating
            repair when `pocs` (shares the clip, so it starts near the cone).
            Returns None when no candidate exists (renormalization-only call
            on a matrix whose clipped corner vanishes).
            """
            Z = prox_entrywise_l1(V - step * G, step * lam)
            S = 0.5 * (Z + Z.T)
            w, U = np.linalg.eigh(S)
            P = (U * np.maximum(w, 0.0)) @ U.T
            cands = []
            c = P[-1, -1]
            if c > cfg.psd_tol:
                R = P / c
                R = 0.5 * (R + R.T)
                R[-1, -1] = 1.0
                cands.append((score(R), R))
            if pocs:
                Q = project_psd_corner(P, cfg.psd_iters, cfg.psd_tol).V
                cands.append((score(Q), Q))
            if not cands:
                return None
            return min(cands, key=lambda t: t[0])

        for _ in range(cfg.max_inner):
            step = eta
            accepted = None
            for _ in range(60):
                cand, Vn = best_repair(step, pocs=True)
                nd = float(((Vn - V) ** 2).sum())
                if cand <= cur - cfg.armijo_c * nd / max(step, 1e-300):
                    accepted = (cand, Vn, step)
                    break
                step *= cfg.beta
                if step < 1e-18 * max(eta, 1.0):
                    break
            # far-step probe (cheap repair only): with a singular smooth part
            # the minimizer sits along the gradient's null ray, which only an
            # effectively infinite step can reach
            probe = best_repair(1e6 * max(eta, 1.0), pocs=False)
            if probe is not None and probe[0] < cur and \
                    (accepted is None or probe[0] < accepted[0]):
                accepted = (probe[0], probe[1], eta)
            if accepted is None:
                break
            improvement = cur - accepted[0]
            cur, V = accepted[0], accepted[1]
            if cfg.step_rule == "backtracking":
                eta = min(accepted[2] * 2.0, 1e12)
            if improvement <= 0.1 * cfg.tol_obj * max(abs(cur), 1.0):
                break

        losses = sample_losses(X, y, V)
        sel = _top_m(losses, cfg.m)
        b = np.zeros(data.n)
        b[sel] = 1.0
        b[losses < 0.0] = 1.0
        new_obj = full_obj(b, V, losses)
        if not np.isfinite(new_obj):
            raise NonFinite("objective diverged")
        # guard against samplewise/lifted-gradient round-off disagreement
        new_obj = min(new_obj, trace[-1])
        trace.append(new_obj)
        if trace[-2] - new_obj <= cfg.tol_obj * abs(trace[-2]) + 1e-12:
            converged = True
            break

    b_rounded = np.zeros(data.n)
    b_rounded[sel] = 1.0
    theta_hat = refit(data, b_rounded, lam,
                      max_iter=cfg.refit_max_iter, tol=cfg.refit_tol)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, rank1_gap = extract_theta(Vartheta(V))
    return SolveResult(
        b_hat=b, b_rounded=b_rounded, vartheta_hat=Vartheta(V),
        theta_hat=theta_hat, rank1_gap=rank1_gap, objective_trace=trace,
        outer_iters=outer, converged=converged, config=cfg,
    )


def prox_l1_plus_one_squared(v: np.ndarray, c: float) -> np.ndarray:
    """Exact prox of z -> c * (||z||_1 + 1)^2.

    Minimizes 0.5||z - v||^2 + c ||z||_1^2 + 2c ||z||_1.  The solution is a
    soft threshold by t where t solves t = 2c (sum_i max(|v_i| - t, 0) + 1),
    found by a scan over the sorted breakpoints of the piecewise-linear
    fixed-point equation.
    """
    v = np.asarray(v, dtype=float)
    if c < 0:
        raise ValueError("c must be >= 0")
    if c == 0.0:
        return v.copy()
    a = np.sort(np.abs(v))[::-1]
    prefix = np.concatenate([[0.0], np.cumsum(a)])
    js = np.arange(a.size + 1)
    t = 2.0 * c * (prefix + 1.0) / (1.0 + 2.0 * c * js)
    upper = np.concatenate([[np.inf], a])   # a_(j) with 1-based j
    lower = np.concatenate([a, [0.0]])      # a_(j+1)
    ok = np.flatnonzero((upper > t) & (t >= lower))
    if ok.size:
        j = int(ok[0])
    else:  # fp boundary tie: take the segment with the smallest violation
        j = int(np.argmin(np.maximum(t - upper, 0.0) + np.maximum(lower - t, 0.0)))
    return np.sign(v) * np.maximum(np.abs(v) - t[j], 0.0)


def _recover_subgradient(theta, g, lam):
    """Subgradient of ||.||_1 at theta consistent with stationarity.

    Sign on the nonzero coordinates; on zeros, solved from the residual
    balance g + lam (||theta||_1 + 1) w = 0 and clipped to [-1, 1].
    Returns (w, clip_count).
    """
    w = np.sign(theta)
    s1 = float(np.abs(theta).sum())
    clip_count = 0
    zero = theta == 0.0
    if lam > 0 and zero.any():
        raw = -g[zero] / (lam * (s1 + 1.0))
        clipped = np.clip(raw, -1.0, 1.0)
        clip_count = int(np.count_nonzero(raw != clipped))
        w[zero] = clipped
    return w, clip_count


def refit(data: Dataset, selection: np.ndarray, lam: float,
          support: np.ndarray | None = None, theta0: np.ndarray | None = None,
          max_iter: int = 20000, tol: float = 1e-8) -> np.ndarray:
    """Penalized least squares on the selected rows.

    Minimizes sum_selected (y_i - <X_i, theta>)^2 + lam (||theta||_1 + 1)^2
    by FISTA with the exact prox of the squared-plus-linear L1 penalty.
    With `support`, the regression runs on those columns only and the
    result is zero-padded back to length p.  Iterates until the
    stationarity residual (with the subgradient recovered as in the dual
    construction) is below tol * problem scale.
    """
    selection = np.asarray(selection)
    if selection.dtype == bool:
        rows = np.flatnonzero(selection)
    elif selection.ndim == 1 and selection.size == data.n and \
            np.all((selection == 0) | (selection == 1)):
        rows = np.flatnonzero(selection > 0.5)
    else:
        rows = np.asarray(selection, dtype=int)
    if rows.size < 1:
        raise ValueError("selection must contain at least one sample")
    Xs = data.X[rows]
    ys = data.y[rows]
    cols = np.arange(data.p) if support is None else np.asarray(support, dtype=int)
    Xs = Xs[:, cols]

    d = cols.size
    theta = np.zeros(d) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    if theta.shape != (d,):
        raise ValueError("theta0 has wrong length")

    L = 2.0 * float(np.linalg.norm(Xs, 2)) ** 2
    if L <= 0.0:  # all-zero design: data term is constant in theta
        return np.zeros(data.p)
    step = 1.0 / L

    z = theta.copy()
    t_acc = 1.0
    for it in range(max_iter):
        g = 2.0 * (Xs.T @ (Xs @ z - ys))
        theta_new = prox_l1_plus_one_squared(z - step * g, step * lam)
        # adaptive restart keeps FISTA monotone enough for the residual check
        if np.dot(z - theta_new, theta_new - theta) > 0:
            z = theta.copy()
            t_acc = 1.0
            g = 2.0 * (Xs.T @ (Xs @ z - ys))
            theta_new = prox_l1_plus_one_squared(z - step * g, step * lam)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_acc * t_acc))
        z = theta_new + ((t_acc - 1.0) / t_new) * (theta_new - theta)
        theta, t_acc = theta_new, t_new
        if it % 10 == 0 or it == max_iter - 1:
            gt = Xs.T @ (Xs @ theta - ys)
            w, _ = _recover_subgradient(theta, gt, lam)
            resid = np.abs(gt + lam * (np.abs(theta).sum() + 1.0) * w).max() if d else 0.0
            if resid <= tol:  # absolute: the dual construction needs this scale
                break
    out = np.zeros(data.p)
    out[cols] = theta
    return out
