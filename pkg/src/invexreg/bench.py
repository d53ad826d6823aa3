"""Experiment runner: recovery sweeps over the selection budget m or the
outlier proportion, with per-trial CSV rows, aggregated curves and SVG
panels.

Trials are independent (seed x cell x method) and run on a process pool
capped by the INVEX_THREADS environment variable; results are reduced in a
fixed (cell, seed, method) order so output bytes do not depend on
scheduling.  Wall-clock timings go to a separate timings.csv because the
result files are byte-reproducible.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import BaselineConfig, adaptive_huber_lasso, lasso, trimmed_lasso
from .certify import build_duals, kkt_residuals
from .datagen import GenSpec, generate
from .metrics import clean_recovery_mistakes, norm_error, support_jaccard, theory_delta_m
from .model import Dataset, GroundTruthConfig, lift_parameter
from .solver import SolverConfig, refit, solve_invex
from .svgplot import write_line_plot

__all__ = ["ExperimentConfig", "run_sweep", "clean_count_theory", "m_from_C",
           "lambda_from_m", "RESULT_COLUMNS"]

RESULT_COLUMNS = ["method", "p", "k", "m", "r", "n_outliers", "seed",
                  "mistakes_frac", "jaccard", "norm_error", "delta_m",
                  "rank1_gap", "kkt_feasible", "error"]

METHODS = ("invex", "lasso", "adahuber", "trimmed")


def clean_count_theory(p: int) -> int:
    """ceil(1.1 * 10^1.5 * ln(p)^2), the clean-sample count rule."""
    return math.ceil(1.1 * 10 ** 1.5 * math.log(p) ** 2)


def m_from_C(C: float, p: int) -> int:
    """ceil(10^C * ln(p)^2), the selection-budget rule."""
    return math.ceil(10 ** C * math.log(p) ** 2)


def lambda_from_m(m: int, p: int, c_lambda: float) -> float:
    """c * sqrt(m * ln p); the constant is calibrated, not the theory one."""
    return c_lambda * math.sqrt(m * math.log(p))


@dataclass(frozen=True)
class ExperimentConfig:
    p: int = 50
    k: int = 4
    clean_count_rule: str | int = "theory"   # "theory" or explicit r
    outlier_rule: str | tuple = "half"       # "half" or proportions of n
    C_values: tuple = (0.5, 0.7, 0.9, 1.1, 1.3, 1.5)
    c_lambda: float = 0.05
    methods: tuple = METHODS
    seeds: tuple = (0, 1, 2, 3, 4)
    sigma_e: float = 0.1
    M: float | None = None                   # default 1.1 * k
    kappa: float = 0.5
    alpha1: float = 1.0
    rho_min: float = 0.0
    max_resamples: int = 200
    tol_obj: float = 1e-6
    max_outer: int = 150
    output_dir: str = "sweep_out"

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("need at least one seed")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")
        if self.outlier_rule != "half":
            props = tuple(float(x) for x in self.outlier_rule)
            if any(not (0 < x < 1) for x in props):
                raise ValueError("proportions must be in (0, 1)")
            object.__setattr__(self, "outlier_rule", props)
        object.__setattr__(self, "C_values", tuple(float(c) for c in self.C_values))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "methods", tuple(self.methods))

    @property
    def m_budget(self) -> float:
        return self.M if self.M is not None else 1.1 * self.k

    @property
    def r(self) -> int:
        if self.clean_count_rule == "theory":
            return clean_count_theory(self.p)
        return int(self.clean_count_rule)

    def cells(self) -> list[dict]:
        """One dict per sweep cell: (m, r, n_outliers, x-axis value)."""
        r = self.r
        out = []
        if self.outlier_rule == "half":
            n_out = math.ceil(r / 2)
            for C in self.C_values:
                m = m_from_C(C, self.p)
                if m > r:
                    raise ValueError(f"C={C} gives m={m} > r={r}")
                out.append({"m": m, "r": r, "n_outliers": n_out,
                            "x": float(m), "xlabel": "m"})
        else:
            m = m_from_C(max(self.C_values), self.p)
            if m > r:
                raise ValueError(f"m={m} > r={r}")
            for prop in self.outlier_rule:
                n_out = math.ceil(prop / (1.0 - prop) * r)
                out.append({"m": m, "r": r, "n_outliers": n_out,
                            "x": float(prop), "xlabel": "outlier proportion"})
        return out

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        with open(path) as fh:
            raw = json.load(fh)
        kwargs = {}
        for f in cls.__dataclass_fields__:
            if f in raw:
                kwargs[f] = raw[f]
        extra = set(raw) - set(cls.__dataclass_fields__)
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        for key in ("C_values", "seeds", "methods"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        if "outlier_rule" in kwargs and kwargs["outlier_rule"] != "half":
            kwargs["outlier_rule"] = tuple(kwargs["outlier_rule"])
        return cls(**kwargs)


def _certify_trial(data: Dataset, sel_mask: np.ndarray, lam: float) -> bool:
    """Full certificate verdict on the solver's selection at the true support."""
    support = np.flatnonzero(np.abs(data.theta_star) > 0)
    if support.size == 0:
        return False
    th_S = refit(data, sel_mask, lam, support=support, tol=1e-10)[support]
    cert = build_duals(data, sel_mask, th_S, lam, support)
    rep = kkt_residuals(cert, data, sel_mask, lift_parameter(th_S), lam,
                        support=support)
    return bool(cert.feasible and rep.second_eig > 0
                and rep.dual_feas_min_eig >= -1e-8
                and rep.nullvec_residual <= 1e-6)


def run_trial(cfg: ExperimentConfig, cell: dict, seed: int, method: str) -> tuple[dict, float]:
    """One (cell, seed, method) evaluation; returns (row dict, wall seconds)."""
    t0 = time.perf_counter()
    gt = GroundTruthConfig(p=cfg.p, k=cfg.k, M=cfg.m_budget, sigma_e=cfg.sigma_e)
    spec = GenSpec(ground_truth=gt, r=cell["r"], n_outliers=cell["n_outliers"],
                   seed=seed, max_resamples=cfg.max_resamples, rho_min=cfg.rho_min)
    row = {"method": method, "p": cfg.p, "k": cfg.k, "m": cell["m"],
           "r": cell["r"], "n_outliers": cell["n_outliers"], "seed": seed,
           "mistakes_frac": None, "jaccard": None, "norm_error": None,
           "delta_m": None, "rank1_gap": None, "kkt_feasible": None,
           "error": ""}
    try:
        data = generate(spec)
        m = cell["m"]
        lam = lambda_from_m(m, cfg.p, cfg.c_lambda)
        if method == "invex":
            scfg = SolverConfig(m=m, lam=lam, tol_obj=cfg.tol_obj,
                                max_outer=cfg.max_outer, seed=seed)
            res = solve_invex(data, scfg)
            theta = res.theta_hat
            row["mistakes_frac"] = clean_recovery_mistakes(res.b_rounded, data.labels, m)
            row["rank1_gap"] = res.rank1_gap
            row["delta_m"] = theory_delta_m(cfg.m_budget, lam, cfg.k, cfg.alpha1, m)
            row["kkt_feasible"] = _certify_trial(data, res.b_rounded, lam)
        elif method == "lasso":
            theta = lasso(data, BaselineConfig(method="lasso", lam=lam))
        elif method == "adahuber":
            theta = adaptive_huber_lasso(data, BaselineConfig(method="adahuber", lam=lam))
        elif method == "trimmed":
            bcfg = BaselineConfig(method="trimmed", lam=lam,
                                  trim_count=cell["n_outliers"])
            theta, _ = trimmed_lasso(data, bcfg)
        else:
            raise ValueError(f"unknown method {method}")
        row["jaccard"] = support_jaccard(theta, data.theta_star)
        row["norm_error"] = norm_error(theta, data.theta_star)
    except Exception as exc:  # record, never abort the sweep
        row["error"] = type(exc).__name__
    return row, time.perf_counter() - t0


def _run_trial_star(args):
    return run_trial(*args)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])


def _aggregate(rows: list[dict], cells: list[dict], cfg: ExperimentConfig) -> list[dict]:
    agg = []
    for cell in cells:
        for method in cfg.methods:
            sub = [r for r in rows
                   if r["method"] == method and r["m"] == cell["m"]
                   and r["n_outliers"] == cell["n_outliers"] and not r["error"]]
            entry = {"method": method, "p": cfg.p, "k": cfg.k, "m": cell["m"],
                     "r": cell["r"], "n_outliers": cell["n_outliers"],
                     "x": cell["x"], "n_seeds": len(sub)}
            for key in ("mistakes_frac", "jaccard", "norm_error", "delta_m",
                        "rank1_gap"):
                vals = [r[key] for r in sub if r[key] is not None]
                entry[f"{key}_mean"] = float(np.mean(vals)) if vals else None
                entry[f"{key}_std"] = float(np.std(vals)) if vals else None
            flags = [r["kkt_feasible"] for r in sub if r["kkt_feasible"] is not None]
            entry["kkt_feasible_frac"] = float(np.mean(flags)) if flags else None
            agg.append(entry)
    return agg


AGG_COLUMNS = ["method", "p", "k", "m", "r", "n_outliers", "x", "n_seeds",
               "mistakes_frac_mean", "mistakes_frac_std", "jaccard_mean",
               "jaccard_std", "norm_error_mean", "norm_error_std",
               "delta_m_mean", "delta_m_std", "rank1_gap_mean", "rank1_gap_std",
               "kkt_feasible_frac"]


def _plots(agg: list[dict], cells: list[dict], cfg: ExperimentConfig,
           outdir: Path) -> list[Path]:
    xlabel = cells[0]["xlabel"]
    suffix = "m" if xlabel == "m" else "proportion"

    def curve(method, key):
        pts = [(a["x"], a[f"{key}_mean"]) for a in agg if a["method"] == method]
        pts.sort()
        xs = [x for x, _ in pts]
        ys = [float("nan") if y is None else y for _, y in pts]
        return xs, ys

    paths = []
    if "invex" in cfg.methods:
        xs, ys = curve("invex", "mistakes_frac")
        paths.append(write_line_plot(
            outdir / f"mistakes_vs_{suffix}.svg",
            f"Clean-sample recovery mistakes (p={cfg.p}, k={cfg.k})",
            xlabel, "mistakes / m", [("invex", xs, ys)]))
    for key, ylabel in (("jaccard", "support Jaccard"), ("norm_error", "norm error")):
        series = []
        for method in cfg.methods:
            xs, ys = curve(method, key)
            label = method if method in ("invex", "lasso") else f"{method}-proxy"
            series.append((label, xs, ys))
        paths.append(write_line_plot(
            outdir / f"{key}_vs_{suffix}.svg",
            f"{ylabel} (p={cfg.p}, k={cfg.k})", xlabel, ylabel, series))
    return paths


def run_sweep(cfg: ExperimentConfig, workers: int | None = None) -> dict:
    """Execute the sweep; returns paths and the in-memory row list."""
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    cells = cfg.cells()
    tasks = [(cfg, cell, seed, method)
             for cell in cells for seed in cfg.seeds for method in cfg.methods]

    if workers is None:
        env = os.environ.get("INVEX_THREADS")
        workers = int(env) if env else (os.cpu_count() or 1)
    workers = max(1, min(workers, len(tasks)))

    if workers == 1:
        outcomes = [_run_trial_star(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_trial_star, tasks, chunksize=1))

    rows = [row for row, _ in outcomes]
    timings = [{"method": row["method"], "m": row["m"],
                "n_outliers": row["n_outliers"], "seed": row["seed"],
                "wall_ms": 1000.0 * dt} for row, dt in outcomes]

    _write_csv(outdir / "results.csv", RESULT_COLUMNS, rows)
    agg = _aggregate(rows, cells, cfg)
    _write_csv(outdir / "aggregate.csv", AGG_COLUMNS, agg)
    _write_csv(outdir / "timings.csv",
               ["method", "m", "n_outliers", "seed", "wall_ms"], timings)
    plot_paths = _plots(agg, cells, cfg, outdir)

    meta = {"config": {f: getattr(cfg, f) for f in cfg.__dataclass_fields__},
            "c_lambda_note": "calibrated constant; the theory-scale constant "
                             "is far too conservative in practice"}
    with open(outdir / "sweep_meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=list)
        fh.write("\n")
    return {"rows": rows, "aggregate": agg,
            "results_csv": outdir / "results.csv",
            "aggregate_csv": outdir / "aggregate.csv",
            "plots": plot_paths}
