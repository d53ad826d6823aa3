"""Command-line interface.

Subcommands: gen (dataset to files), solve (dataset -> result JSON),
certify (dataset + result -> KKT/assumption reports), oracle (tiny-instance
enumeration), sweep (experiment config -> CSVs/SVGs), selftest (quick
property suites).  Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import certify as cert_mod
from .bench import ExperimentConfig, lambda_from_m, run_sweep
from .datagen import GenSpec, generate
from .model import (GroundTruthConfig, lift_parameter, lift_sample,
                    load_dataset, save_dataset, squared_loss)
from .oracle import enumerate_best_subset
from .projections import BFeasibleSet, project_b, project_psd_corner
from .solver import SolverConfig, refit, solve_invex


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="invexreg",
                     description="Outlier-robust sparse regression via the "
                                 "invex lifted relaxation")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[], help="generate a synthetic dataset")
    g.add_argument("--p", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--r", type=int, required=True, help="clean sample count")
    g.add_argument("--outliers", type=int, default=0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--sigma-e", type=float, default=0.1)
    g.add_argument("--M", type=float, default=None, help="L1 budget (default 1.1k)")
    g.add_argument("--rho-min", type=float, default=0.0)
    g.add_argument("--max-resamples", type=int, default=100)
    g.add_argument("--out", required=True, help="output path prefix")

    s = sub.add_parser("solve", help="solve the relaxation on a dataset")
    s.add_argument("--data", required=True, help="dataset path prefix")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--lam", type=float, default=None)
    s.add_argument("--c-lambda", type=float, default=0.05,
                   help="used as c*sqrt(m ln p) when --lam is not given")
    s.add_argument("--max-outer", type=int, default=200)
    s.add_argument("--max-inner", type=int, default=25)
    s.add_argument("--tol-obj", type=float, default=1e-8)
    s.add_argument("--step-rule", choices=["backtracking", "fixed"],
                   default="backtracking")
    s.add_argument("--eta", type=float, default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    c = sub.add_parser("certify", help="build duals and evaluate KKT residuals")
    c.add_argument("--data", required=True)
    c.add_argument("--result", required=True, help="solve result JSON")
    c.add_argument("--kappa", type=float, default=0.5)
    c.add_argument("--alpha1", type=float, default=1.0)
    c.add_argument("--alpha2", type=float, default=1.0)
    c.add_argument("--out", required=True)

    o = sub.add_parser("oracle", help="enumerate the best subset (tiny instances)")
    o.add_argument("--data", required=True)
    o.add_argument("--m", type=int, required=True)
    o.add_argument("--lam", type=float, required=True)
    o.add_argument("--cap", type=int, default=100_000)
    o.add_argument("--table", action="store_true",
                   help="include per-subset objectives")
    o.add_argument("--out", required=True)

    w = sub.add_parser("sweep", help="run an experiment sweep from a config")
    w.add_argument("--config", required=True, help="experiment config JSON")
    w.add_argument("--out", default=None, help="override output_dir")
    w.add_argument("--workers", type=int, default=None)

    t = sub.add_parser("selftest", help="run the quick property suites")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--trials", type=int, default=200)
    return parser


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_gen(args) -> int:
    M = args.M if args.M is not None else 1.1 * args.k
    gt = GroundTruthConfig(p=args.p, k=args.k, M=M, sigma_e=args.sigma_e)
    spec = GenSpec(ground_truth=gt, r=args.r, n_outliers=args.outliers,
                   seed=args.seed, max_resamples=args.max_resamples,
                   rho_min=args.rho_min)
    data = generate(spec)
    csv_path, json_path = save_dataset(data, args.out)
    print(f"wrote {csv_path} and {json_path} (n={data.n}, rho={data.rho})")
    return 0


def _cmd_solve(args) -> int:
    data = load_dataset(args.data)
    lam = args.lam
    if lam is None:
        lam = lambda_from_m(args.m, data.p, args.c_lambda)
    cfg = SolverConfig(m=args.m, lam=lam, max_outer=args.max_outer,
                       max_inner=args.max_inner, tol_obj=args.tol_obj,
                       step_rule=args.step_rule, eta=args.eta, seed=args.seed)
    res = solve_invex(data, cfg)
    _write_json(args.out, res.to_dict())
    print(f"wrote {args.out} (converged={res.converged}, "
          f"outer={res.outer_iters}, rank1_gap={res.rank1_gap:.3g})")
    return 0


def _cmd_certify(args) -> int:
    data = load_dataset(args.data)
    with open(args.result) as fh:
        result = json.load(fh)
    sel = np.asarray(result["b_rounded"], dtype=float)
    lam = float(result["config"]["lam"])
    if data.theta_star is None:
        raise ValueError("certification needs theta_star in the dataset sidecar")
    support = np.flatnonzero(np.abs(data.theta_star) > 0)
    th_S = refit(data, sel, lam, support=support, tol=1e-10)[support]
    cert = cert_mod.build_duals(data, sel, th_S, lam, support)
    rep = cert_mod.kkt_residuals(cert, data, sel, lift_parameter(th_S), lam,
                                 support=support)
    assumption = cert_mod.assumption_check(data, support, selection=sel,
                                           alpha1=args.alpha1, alpha2=args.alpha2,
                                           kappa=args.kappa)
    payload = {"dual_certificate": cert.to_dict(), "kkt_report": rep.to_dict(),
               "assumption_report": assumption.to_dict()}
    try:
        wbar, ok = cert_mod.strict_dual_feasibility(data, sel, th_S, lam,
                                                    support, kappa=args.kappa)
        payload["strict_dual"] = {"omega_bar_inf": wbar, "pass": ok,
                                  "kappa": args.kappa}
    except (cert_mod.SingularSubmatrix, ValueError) as exc:
        payload["strict_dual"] = {"error": str(exc)}
    _write_json(args.out, payload)
    print(f"wrote {args.out} (feasible={cert.feasible}, "
          f"second_eig={rep.second_eig:.3g})")
    return 0


def _cmd_oracle(args) -> int:
    data = load_dataset(args.data)
    res = enumerate_best_subset(data, args.m, args.lam, cap=args.cap,
                                keep_table=args.table)
    _write_json(args.out, res.to_dict())
    print(f"wrote {args.out} (J*={list(res.J_star)}, objective={res.objective:.6g})")
    return 0


def _cmd_sweep(args) -> int:
    cfg = ExperimentConfig.from_json(args.config)
    if args.out is not None:
        cfg = ExperimentConfig(**{**{f: getattr(cfg, f)
                                     for f in cfg.__dataclass_fields__},
                                  "output_dir": args.out})
    out = run_sweep(cfg, workers=args.workers)
    n_err = sum(1 for row in out["rows"] if row["error"])
    print(f"wrote {out['results_csv']} ({len(out['rows'])} rows, {n_err} errors)")
    for path in out["plots"]:
        print(f"wrote {path}")
    return 0


def _cmd_selftest(args) -> int:
    rng = np.random.default_rng(args.seed)
    failures = []

    def check(name, ok):
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        if not ok:
            failures.append(name)

    worst = 0.0
    for _ in range(args.trials):
        p = int(rng.integers(1, 20))
        x = rng.standard_normal(p)
        yv = float(rng.standard_normal())
        th = rng.standard_normal(p)
        f = squared_loss(x, yv, th)
        lifted = float((lift_sample(x, yv).A * lift_parameter(th).V).sum())
        worst = max(worst, abs(lifted - f) / max(1.0, f))
    check("lifting identity", worst <= 1e-10)

    worst = 0.0
    for _ in range(args.trials):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(1, n + 1))
        v = rng.standard_normal(n) * 2.0
        w = project_b(v, BFeasibleSet(n, m))
        feas = w.min() >= -1e-12 and w.max() <= 1 + 1e-12 and w.sum() >= m - 1e-9
        worst = max(worst, 0.0 if feas else 1.0)
    check("weight projection feasibility", worst == 0.0)

    worst = 0.0
    for _ in range(args.trials):
        q = int(rng.integers(1, 10))
        S = rng.standard_normal((q + 1, q + 1))
        V = project_psd_corner(S + S.T)
        lo = float(np.linalg.eigvalsh(V.V)[0])
        ok = lo >= -1e-9 and V.V[-1, -1] == 1.0
        worst = max(worst, 0.0 if ok else 1.0)
    check("psd-with-corner repair feasibility", worst == 0.0)

    gt = GroundTruthConfig(p=4, k=2, M=2.2, sigma_e=0.05)
    data = generate(GenSpec(ground_truth=gt, r=5, n_outliers=3,
                            seed=args.seed, rho_min=1.0, max_resamples=500))
    min_gap, bilinear = cert_mod.invexity_witness(data, trials=args.trials,
                                                  seed=args.seed)
    check("invexity gap nonnegative", min_gap >= -1e-9)
    check("bilinear-part identity", bilinear <= 1e-9)
    g_pos, g_neg = cert_mod.nonconvexity_witness(data)
    check("non-convexity witness signs", g_pos > 1e-6 and g_neg < -1e-6)

    if failures:
        print(f"{len(failures)} selftest failure(s): {failures}", file=sys.stderr)
        return 2
    print("all selftests passed")
    return 0


_DISPATCH = {
    "gen": _cmd_gen,
    "solve": _cmd_solve,
    "certify": _cmd_certify,
    "oracle": _cmd_oracle,
    "sweep": _cmd_sweep,
    "selftest": _cmd_selftest,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
