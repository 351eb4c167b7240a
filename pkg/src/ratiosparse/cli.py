"""Command-line interface: solve, bench, theory, datagen.

Configuration comes from JSON files with flag overrides (flags win).
Exit codes: 0 success, 1 usage or input error, 2 solver hit its
iteration budget.  RATIO_SPARSE_SEED in the environment overrides base
seeds for reproducible CI runs.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import os
import sys
import numpy as np

from dataclasses import replace
from pathlib import Path

from .core import RatioParams, load_instance, save_instance
from .datagen import MatrixSpec, SignalSpec, gen_instance
from .harness import (ExperimentPlan, run_experiment, write_trials_csv,
                      write_aggregate_json, write_heatmap_csv)
from .solver import DlpaConfig, dlpa_solve
from .theory import TheoryInput, bound_report, worst_case_beta


class InputError(Exception):
    """Bad file, schema, or flag combination (exit code 1)."""


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _env_seed(default: int) -> int:
    raw = os.environ.get("RATIO_SPARSE_SEED")
    return int(raw) if raw else default


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise InputError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON in {path}: {exc}") from exc


# ---------------------------------------------------------------- solve

def cmd_solve(args) -> int:
    try:
        instance = load_instance(args.instance)
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"cannot read instance from {args.instance}: {exc}")
    params = RatioParams(args.p, args.q)
    overrides = {}
    if args.config:
        overrides.update(_load_json(args.config))
    if args.beta is not None:
        overrides["beta_prox"] = args.beta
        overrides.setdefault("adaptive_beta", False)
    if args.outer_max is not None:
        overrides["outer_max"] = args.outer_max
    try:
        config = DlpaConfig(**overrides)
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad solver configuration: {exc}")
    result = dlpa_solve(instance, params, config)
    payload = {
        "instance_id": instance.id,
        "p": params.p,
        "q": params.q,
        "alpha_final": result.alpha_final,
        "iterations": result.iterations,
        "converged": result.converged,
        "stop_reason": result.stop_reason,
        "stationarity_residual": result.stationarity_residual,
        "alpha_trace": result.alpha_trace,
        "feasibility": float(np.linalg.norm(instance.A @ result.x_hat - instance.b)),
        "x_hat": [float(v) for v in result.x_hat],
    }
    if instance.ground_truth is not None:
        payload["rel_error"] = float(
            np.linalg.norm(result.x_hat - instance.ground_truth)
            / np.linalg.norm(instance.ground_truth))
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0 if result.converged else 2


# ---------------------------------------------------------------- bench

def cmd_bench(args) -> int:
    try:
        plan = ExperimentPlan.from_json(args.plan)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"invalid plan {args.plan}: {exc}")
    seed = _env_seed(plan.base_seed)
    if seed != plan.base_seed:
        plan = replace(plan, base_seed=seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    records, aggregates = run_experiment(plan, workers=args.workers)
    write_trials_csv(records, out_dir / "trials.csv")
    write_aggregate_json(aggregates, out_dir / "aggregates.json")
    write_heatmap_csv(aggregates, out_dir / "heatmap.csv")
    print(f"{'p':>6} {'q':>6} {'k':>4} {'success':>8} {'model_f':>8} "
          f"{'algo_f':>8} {'snr_db':>8}")
    for a in aggregates:
        print(f"{a.p:6.2f} {a.q:6.2f} {a.k:4d} {a.success_rate:8.3f} "
              f"{a.model_failure_rate:8.3f} {a.algorithm_failure_rate:8.3f} "
              f"{a.mean_snr_all:8.2f}")
    if not args.no_figures:
        from .report import render_bench_figures
        for path in render_bench_figures(out_dir):
            print(f"figure: {path}")
    return 0


# ---------------------------------------------------------------- theory

_THEORY_COLUMNS = ("p", "q", "k", "t", "beta", "z0", "psi", "T1", "T2",
                   "delta_new", "delta_zhu", "b_o", "b_z",
                   "riprop_eta_ok", "riprop_psi_ok",
                   "riponly_eta_ok", "riponly_psi_ok",
                   "bo_applicable", "bz_applicable")


def _theory_rows(grid: dict):
    ps = grid.get("p", [1.0])
    qs = grid.get("q", [2.0])
    ks = [int(k) for k in grid.get("k", [1])]
    ts = grid.get("t")
    betas = grid.get("beta", [1.0])
    delta_2k = grid.get("delta_2k")
    delta_k = grid.get("delta_k")
    delta_kt = grid.get("delta_kt")
    theta_kt = grid.get("theta_kt")
    epsilon = float(grid.get("epsilon", 1.0))
    for p, q, k, beta_raw in itertools.product(ps, qs, ks, betas):
        params = RatioParams(float(p), float(q))
        beta = (worst_case_beta(params, k)
                if beta_raw == "worst" else float(beta_raw))
        for t in ([int(v) for v in ts] if ts else [k]):
            inp = TheoryInput(params=params, k=k, t=t, beta_ratio=beta,
                              delta_2k=delta_2k, delta_k=delta_k,
                              delta_kt=delta_kt, theta_kt=theta_kt,
                              epsilon=epsilon)
            rep = bound_report(inp)
            row = {
                "p": params.p, "q": params.q, "k": k, "t": t, "beta": beta,
                "z0": rep.z0, "psi": rep.psi, "T1": rep.t1, "T2": rep.t2,
                "delta_new": rep.delta_new, "delta_zhu": rep.delta_zhu,
                "b_o": "" if rep.b_o is None else rep.b_o,
                "b_z": "" if rep.b_z is None else rep.b_z,
                "riprop_eta_ok": "" if rep.rop_rip is None else int(rep.rop_rip.eta_ok),
                "riprop_psi_ok": "" if rep.rop_rip is None else int(rep.rop_rip.psi_ok),
                "riponly_eta_ok": "" if rep.rip_only is None else int(rep.rip_only.eta_ok),
                "riponly_psi_ok": "" if rep.rip_only is None else int(rep.rip_only.psi_ok),
                "bo_applicable": int(rep.b_o is not None),
                "bz_applicable": int(rep.b_z is not None),
            }
            yield row


def cmd_theory(args) -> int:
    grid = _load_json(args.grid)
    if not isinstance(grid, dict):
        raise InputError(f"{args.grid} must hold a JSON object")
    try:
        rows = list(_theory_rows(grid))
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid grid schema: {exc}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        fh.write(",".join(_THEORY_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in _THEORY_COLUMNS) + "\n")
    print(f"wrote {len(rows)} rows to {out}")
    if args.figures:
        from .report import render_theory_figure
        fig_path = out.with_suffix(".png")
        if render_theory_figure(out, fig_path):
            print(f"figure: {fig_path}")
    return 0


# ---------------------------------------------------------------- datagen

def _spec_payload(raw: str) -> dict:
    """Inline JSON or a path to a JSON file."""
    raw = raw.strip()
    if raw.startswith("{"):
        try:
            return json.loads(raw)
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid inline JSON spec: {exc}")
    return _load_json(raw)


def cmd_datagen(args) -> int:
    mraw = _spec_payload(args.matrix)
    sraw = _spec_payload(args.signal)
    seed = _env_seed(args.seed)
    mraw.setdefault("seed", seed)
    sraw.setdefault("seed", seed + 1)
    sraw.setdefault("n", mraw.get("n"))
    try:
        mspec = MatrixSpec(**mraw)
        sspec = SignalSpec(**sraw)
        instance = gen_instance(mspec, sspec, id=args.id)
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid spec: {exc}")
    save_instance(instance, args.out)
    print(f"wrote instance ({instance.m}x{instance.n}, "
          f"k={sspec.k}) to {args.out}")
    return 0


# ---------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ratiosparse",
        description="Sparse recovery by constrained norm-ratio minimization",
    )
    parser.add_argument("--log-level", default="warning",
                        choices=("debug", "info", "warning", "error"))
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one instance directory")
    p_solve.add_argument("--instance", required=True,
                         help="directory with instance.json, A.csv, b.csv")
    p_solve.add_argument("--p", type=float, required=True)
    p_solve.add_argument("--q", type=float, required=True)
    p_solve.add_argument("--beta", type=float, default=None,
                         help="fixed proximal weight (disables adaptation)")
    p_solve.add_argument("--outer-max", type=int, default=None)
    p_solve.add_argument("--config", default=None,
                         help="JSON file with solver configuration fields")
    p_solve.add_argument("--out", default=None, help="write the result JSON here")
    p_solve.set_defaults(func=cmd_solve)

    p_bench = sub.add_parser("bench", help="run a Monte Carlo experiment plan")
    p_bench.add_argument("--plan", required=True, help="experiment plan JSON")
    p_bench.add_argument("--out", required=True, help="output directory")
    p_bench.add_argument("--workers", type=int, default=1)
    p_bench.add_argument("--no-figures", action="store_true",
                         help="skip rendering PNG figures next to the CSVs")
    p_bench.set_defaults(func=cmd_bench)

    p_theory = sub.add_parser("theory", help="evaluate guarantee bounds on a grid")
    p_theory.add_argument("--grid", required=True, help="parameter grid JSON")
    p_theory.add_argument("--out", required=True, help="output CSV path")
    p_theory.add_argument("--figures", action="store_true",
                          help="also render a threshold-comparison PNG")
    p_theory.set_defaults(func=cmd_theory)

    p_gen = sub.add_parser("datagen", help="generate an instance directory")
    p_gen.add_argument("--matrix", required=True,
                       help="matrix spec: inline JSON or a JSON file path")
    p_gen.add_argument("--signal", required=True,
                       help="signal spec: inline JSON or a JSON file path")
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--id", default="")
    p_gen.set_defaults(func=cmd_datagen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
