"""Monte Carlo experiment runner: trial protocol, outcome taxonomy, persistence.

A run sweeps cells (p, q, k) from an ExperimentPlan; each trial draws its
own instance from a seed derived from (base_seed, cell, trial), solves it,
and is classified as success, model_failure, or algorithm_failure.
Aggregation is an ordered reduction over (cell, trial), so results are
identical for any worker count.

Outputs: a trial-level CSV, a per-cell aggregate JSON, and a heatmap-ready
CSV with one row per (p, q) averaged uniformly over the sparsity grid.
"""

from __future__ import annotations

import json
import math
import time
import logging
import numpy as np

from dataclasses import dataclass, field
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

from .core import ProblemInstance, RatioParams, ratio_objective
from .datagen import MatrixSpec, SignalSpec, gen_instance, matched_signal_spec
from .solver import DlpaConfig, dlpa_solve


__all__ = [
    "ExperimentPlan",
    "TrialRecord",
    "CellAggregate",
    "classify_outcome",
    "snr_db",
    "run_experiment",
    "write_trials_csv",
    "write_aggregate_json",
    "write_heatmap_csv",
    "TRIAL_CSV_COLUMNS",
]

log = logging.getLogger(__name__)

SNR_CAP_DB = 400.0

TRIAL_CSV_COLUMNS = ("p", "q", "k", "trial", "seed", "outcome", "rel_error",
                     "snr_db", "alpha_final", "outer_iters", "wall_ms")


@dataclass(frozen=True)
class ExperimentPlan:
    """Grid of (p, q) x sparsity cells with per-trial seeding.

    matrix_spec is a template whose seed field is ignored (per-trial seeds
    are derived from base_seed); signal overrides default to the matrix
    family's conventions (see matched_signal_spec).
    """

    matrix_spec: MatrixSpec
    sparsity_grid: tuple
    param_grid: tuple
    trials_per_cell: int = 50
    base_seed: int = 0
    success_tol: float = 1e-3
    solver_config: DlpaConfig = field(default_factory=lambda: DlpaConfig(time_limit_s=30.0))
    mag_low: Optional[float] = None
    mag_high: Optional[float] = None
    min_separation: Optional[int] = None

    def __post_init__(self):
        if not self.sparsity_grid or not self.param_grid:
            raise ValueError("sparsity_grid and param_grid must be nonempty")
        if self.trials_per_cell < 1:
            raise ValueError("trials_per_cell must be positive")
        if self.success_tol <= 0:
            raise ValueError("success_tol must be positive")
        object.__setattr__(self, "sparsity_grid",
                           tuple(int(k) for k in self.sparsity_grid))
        object.__setattr__(self, "param_grid",
                           tuple((float(p), float(q)) for p, q in self.param_grid))

    def cells(self):
        """Deterministic cell order: param_grid major, sparsity minor."""
        out = []
        for p, q in self.param_grid:
            for k in self.sparsity_grid:
                out.append((p, q, k))
        return out

    @classmethod
    def from_json(cls, path) -> "ExperimentPlan":
        with open(path) as fh:
            raw = json.load(fh)
        matrix = MatrixSpec(**raw["matrix"])
        signal = raw.get("signal", {})
        solver = DlpaConfig(**raw.get("solver", {"time_limit_s": 30.0}))
        return cls(
            matrix_spec=matrix,
            sparsity_grid=tuple(raw["sparsity_grid"]),
            param_grid=tuple(tuple(pq) for pq in raw["param_grid"]),
            trials_per_cell=int(raw.get("trials_per_cell", 50)),
            base_seed=int(raw.get("base_seed", 0)),
            success_tol=float(raw.get("success_tol", 1e-3)),
            solver_config=solver,
            mag_low=signal.get("mag_low"),
            mag_high=signal.get("mag_high"),
            min_separation=signal.get("min_separation"),
        )


@dataclass(frozen=True)
class TrialRecord:
    """One Monte Carlo trial."""

    p: float
    q: float
    k: int
    trial: int
    seed: int
    outcome: str  # success | model_failure | algorithm_failure
    rel_error: float
    snr_db: float
    alpha_final: float
    outer_iters: int
    wall_ms: float


@dataclass(frozen=True)
class CellAggregate:
    """Per-cell rates and means; the three rates always sum to 1."""

    p: float
    q: float
    k: int
    trials: int
    success_rate: float
    model_failure_rate: float
    algorithm_failure_rate: float
    mean_snr_all: float
    mean_snr_success: Optional[float]
    mean_outer_iters: float
    mean_wall_ms: float


def snr_db(x_hat, x_star) -> float:
    """Reconstruction SNR 20 log10(||x*|| / ||x_hat - x*||), capped at 400 dB.

    The cap encodes the exact-recovery sentinel (+infinity).
    """
    x_hat = np.asarray(x_hat, dtype=np.float64)
    x_star = np.asarray(x_star, dtype=np.float64)
    ref = np.linalg.norm(x_star)
    if ref == 0.0:
        raise ValueError("SNR is undefined for a zero reference signal")
    err = np.linalg.norm(x_hat - x_star)
    if err == 0.0:
        return SNR_CAP_DB
    return float(min(20.0 * math.log10(ref / err), SNR_CAP_DB))


def classify_outcome(x_hat, instance: ProblemInstance, params: RatioParams,
                     success_tol: float = 1e-3,
                     feas_tol: Optional[float] = None) -> str:
    """Success / model_failure / algorithm_failure taxonomy.

    Success means relative error below success_tol.  An unsuccessful but
    feasible point whose objective beats the planted signal's is a model
    failure (the model preferred a different point); anything else,
    including an infeasible return, is an algorithm failure.
    """
    if instance.ground_truth is None:
        raise ValueError("classification needs a ground-truth signal")
    x_hat = np.asarray(x_hat, dtype=np.float64)
    x_star = instance.ground_truth
    if feas_tol is None:
        feas_tol = 1e-6 * (1.0 + float(np.linalg.norm(instance.b)))
    rel = np.linalg.norm(x_hat - x_star) / np.linalg.norm(x_star)
    if rel < success_tol:
        return "success"
    feasible = np.linalg.norm(instance.A @ x_hat - instance.b) <= feas_tol
    if feasible and np.linalg.norm(x_hat) > 0 \
            and ratio_objective(x_hat, params) < ratio_objective(x_star, params):
        return "model_failure"
    return "algorithm_failure"


def _trial_seed(base_seed: int, cell_index: int, trial_index: int) -> int:
    ss = np.random.SeedSequence(base_seed, spawn_key=(cell_index, trial_index))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _run_trial(plan: ExperimentPlan, cell_index: int, trial_index: int) -> TrialRecord:
    p, q, k = plan.cells()[cell_index]
    seed = _trial_seed(plan.base_seed, cell_index, trial_index)
    mspec = MatrixSpec(kind=plan.matrix_spec.kind, m=plan.matrix_spec.m,
                       n=plan.matrix_spec.n, r=plan.matrix_spec.r,
                       F=plan.matrix_spec.F, seed=seed)
    sspec = matched_signal_spec(mspec, k, seed=seed + 1,
                                mag_low=plan.mag_low, mag_high=plan.mag_high,
                                min_separation=plan.min_separation)
    params = RatioParams(p, q)
    t0 = time.perf_counter()
    try:
        instance = gen_instance(mspec, sspec, id=f"cell{cell_index}_t{trial_index}")
        result = dlpa_solve(instance, params, plan.solver_config)
        wall_ms = (time.perf_counter() - t0) * 1e3
        outcome = classify_outcome(result.x_hat, instance, params,
                                   success_tol=plan.success_tol)
        rel = float(np.linalg.norm(result.x_hat - instance.ground_truth)
                    / np.linalg.norm(instance.ground_truth))
        snr = snr_db(result.x_hat, instance.ground_truth)
        return TrialRecord(p=p, q=q, k=k, trial=trial_index, seed=seed,
                           outcome=outcome, rel_error=rel, snr_db=snr,
                           alpha_final=result.alpha_final,
                           outer_iters=result.iterations, wall_ms=wall_ms)
    except Exception:
        # A trial-level crash becomes an algorithm failure with sentinel
        # diagnostics so the sweep always completes.
        log.exception("trial (cell %d, trial %d) raised", cell_index, trial_index)
        wall_ms = (time.perf_counter() - t0) * 1e3
        return TrialRecord(p=p, q=q, k=k, trial=trial_index, seed=seed,
                           outcome="algorithm_failure",
                           rel_error=float("inf"), snr_db=-SNR_CAP_DB,
                           alpha_final=float("nan"), outer_iters=0,
                           wall_ms=wall_ms)


def _run_trial_packed(args) -> TrialRecord:
    return _run_trial(*args)


def run_experiment(plan: ExperimentPlan, workers: int = 1):
    """Execute every (cell, trial) task; returns (records, aggregates).

    Records come back sorted by (cell, trial) and each trial's randomness
    is a pure function of (base_seed, cell, trial), so the output is
    identical for any worker count or schedule.
    """
    cells = plan.cells()
    tasks = [(plan, ci, ti)
             for ci in range(len(cells))
             for ti in range(plan.trials_per_cell)]
    if workers <= 1:
        records = [_run_trial_packed(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_trial_packed, tasks, chunksize=1))
    cell_index = {cell: i for i, cell in enumerate(cells)}
    records.sort(key=lambda r: (cell_index[(r.p, r.q, r.k)], r.trial))
    aggregates = _aggregate(plan, records)
    return records, aggregates


def _aggregate(plan: ExperimentPlan, records) -> list:
    out = []
    for (p, q, k) in plan.cells():
        rows = [r for r in records if (r.p, r.q, r.k) == (p, q, k)]
        t = len(rows)
        n_succ = sum(r.outcome == "success" for r in rows)
        n_model = sum(r.outcome == "model_failure" for r in rows)
        n_algo = sum(r.outcome == "algorithm_failure" for r in rows)
        snr_succ = [r.snr_db for r in rows if r.outcome == "success"]
        out.append(CellAggregate(
            p=p, q=q, k=k, trials=t,
            success_rate=n_succ / t,
            model_failure_rate=n_model / t,
            algorithm_failure_rate=n_algo / t,
            mean_snr_all=float(np.mean([r.snr_db for r in rows])),
            mean_snr_success=(float(np.mean(snr_succ)) if snr_succ else None),
            mean_outer_iters=float(np.mean([r.outer_iters for r in rows])),
            mean_wall_ms=float(np.mean([r.wall_ms for r in rows])),
        ))
    return out


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_trials_csv(records, path) -> None:
    """Trial records in the fixed column order, floats at 17 digits."""
    with open(path, "w") as fh:
        fh.write(",".join(TRIAL_CSV_COLUMNS) + "\n")
        for r in records:
            fh.write(",".join(_fmt(getattr(r, c)) for c in TRIAL_CSV_COLUMNS) + "\n")


def write_aggregate_json(aggregates, path) -> None:
    """Per-cell aggregates keyed by "p=..,q=..,k=.."."""
    payload = {}
    for a in aggregates:
        key = f"p={a.p:.17g},q={a.q:.17g},k={a.k}"
        payload[key] = {
            "trials": a.trials,
            "success_rate": a.success_rate,
            "model_failure_rate": a.model_failure_rate,
            "algorithm_failure_rate": a.algorithm_failure_rate,
            "mean_snr_all": a.mean_snr_all,
            "mean_snr_success": a.mean_snr_success,
            "mean_outer_iters": a.mean_outer_iters,
        }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_heatmap_csv(aggregates, path) -> None:
    """One row per (p, q): rates averaged uniformly over the sparsity grid."""
    by_pq = {}
    for a in aggregates:
        by_pq.setdefault((a.p, a.q), []).append(a)
    with open(path, "w") as fh:
        fh.write("p,q,success_rate,model_failure_rate,algorithm_failure_rate,"
                 "mean_snr_all\n")
        for (p, q) in sorted(by_pq):
            group = by_pq[(p, q)]
            fh.write(",".join(_fmt(v) for v in (
                p, q,
                float(np.mean([a.success_rate for a in group])),
                float(np.mean([a.model_failure_rate for a in group])),
                float(np.mean([a.algorithm_failure_rate for a in group])),
                float(np.mean([a.mean_snr_all for a in group])),
            )) + "\n")
