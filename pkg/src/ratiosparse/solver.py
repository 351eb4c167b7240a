"""Prox-linear Dinkelbach solver for constrained norm-ratio minimization.

Outer loop: at the current feasible iterate x_k with ratio alpha_k, the
concave denominator term is linearized and the subproblem

    min_x  ||x||_p^p - <c_k, x> + (beta/2) ||x - x_k||^2   s.t.  A x = b

is solved by an inner ADMM whose x-update is an affine projection and
whose y-update is the elementwise lp^p proximal map.  The ratio gap
Delta_k = alpha_k ||x_{k+1}||_q^p - ||x_{k+1}||_p^p is nonnegative for
every accepted step (enforced by a monotone safeguard plus optional
backtracking on beta), so the alpha sequence never increases.
"""

from __future__ import annotations

import time
import logging
import numpy as np

from dataclasses import dataclass, field, replace
from typing import Optional

from .core import ProblemInstance, RatioParams, lp_norm_pow, ratio_objective
from .prox import GstParams, prox_lp_power


__all__ = [
    "DlpaConfig",
    "SolverState",
    "SolveResult",
    "FeasibleProjector",
    "min_norm_feasible",
    "linearization_coefficient",
    "inner_admm_solve",
    "l1_baseline_solve",
    "dlpa_solve",
    "InfeasibleInstanceError",
]

log = logging.getLogger(__name__)

# Relative feasibility any reported iterate must satisfy.
FEASIBILITY_RTOL = 1e-8


class InfeasibleInstanceError(ValueError):
    """b is not in the range of A (possible only with rank deficiency)."""


@dataclass(frozen=True)
class DlpaConfig:
    """Solver controls.

    beta_prox is the proximal weight of the outer subproblem; with
    adaptive_beta it is doubled (and the step re-solved) whenever a step
    would increase the ratio, which enforces the descent property without
    knowing the local Lipschitz constant.  rho follows a continuation
    schedule inside the ADMM: rho0 multiplied by rho_growth each inner
    iteration, capped at rho_max.  time_limit_s is a cooperative wall
    deadline checked once per outer iteration (None means no limit).
    """

    beta_prox: float = 1.0
    rho0: float = 1.0
    rho_growth: float = 1.05
    rho_max: float = 1e4
    outer_max: int = 200
    outer_tol: float = 1e-8
    inner_max: int = 2000
    inner_tol: float = 1e-8
    adaptive_beta: bool = True
    time_limit_s: Optional[float] = None

    def __post_init__(self):
        if min(self.beta_prox, self.rho0, self.rho_max,
               self.outer_tol, self.inner_tol) <= 0.0:
            raise ValueError("all tolerances and weights must be positive")
        if self.rho_growth < 1.0:
            raise ValueError("rho_growth must be >= 1")
        if self.outer_max < 1 or self.inner_max < 1:
            raise ValueError("iteration budgets must be positive")


@dataclass
class OuterRecord:
    """One outer iteration of the solve, for traces and invariant checks."""

    alpha: float
    delta: float
    step_norm: float
    inner_iters: int
    feasibility: float
    beta: float
    x_norm: float


@dataclass
class SolverState:
    """Mutable state of one solver run (single-threaded)."""

    x: np.ndarray
    alpha: float
    delta: float = 0.0
    k: int = 0
    inner: tuple = (None, None, None)  # (y, u, rho) of the last inner solve
    history: list = field(default_factory=list)


@dataclass(frozen=True)
class SolveResult:
    """Outcome of a solver run.

    stop_reason is one of "gap_tol", "step_tol", "max_iter";
    stationarity_residual is the proxy certificate
    (beta + alpha * L_hat) * ||x_K - x_{K-1}||.
    """

    x_hat: np.ndarray
    alpha_final: float
    iterations: int
    converged: bool
    stop_reason: str
    stationarity_residual: float
    alpha_initial: float
    history: list

    @property
    def alpha_trace(self) -> list:
        return [self.alpha_initial] + [rec.alpha for rec in self.history]


class FeasibleProjector:
    """Euclidean projection onto {x : A x = b}, precomputed per instance.

    Uses P = pinv(A) built from a rank-revealing SVD with singular-value
    cutoff 1e-12 * sigma_max; the minimum-norm feasible point is P b.
    """

    def __init__(self, A: np.ndarray, b: np.ndarray):
        self.A = np.asarray(A, dtype=np.float64)
        self.b = np.asarray(b, dtype=np.float64)
        u, s, vt = np.linalg.svd(self.A, full_matrices=False)
        cutoff = 1e-12 * (s[0] if s.size else 0.0)
        keep = s > cutoff
        self.pinv = (vt[keep].T / s[keep]) @ u[:, keep].T
        self.min_norm_point = self.pinv @ self.b
        self.norm_b = float(np.linalg.norm(self.b))
        residual = np.linalg.norm(self.A @ self.min_norm_point - self.b)
        if residual > 1e-10 * max(self.norm_b, 1.0):
            raise InfeasibleInstanceError(
                f"b is not in range(A): min-norm residual {residual:.3e}"
            )

    def project(self, z: np.ndarray) -> np.ndarray:
        return z - self.pinv @ (self.A @ z - self.b)

    def feasibility(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(self.A @ x - self.b))

    def feasibility_tol(self, rtol: float = FEASIBILITY_RTOL) -> float:
        return rtol * (1.0 + self.norm_b)


def min_norm_feasible(instance: ProblemInstance) -> np.ndarray:
    """Minimum-2-norm solution of A x = b (orthogonal to ker(A))."""
    return FeasibleProjector(instance.A, instance.b).min_norm_point


def linearization_coefficient(x: np.ndarray, alpha: float,
                              params: RatioParams) -> np.ndarray:
    """Gradient alpha * grad(||.||_q^p) at a nonzero point x.

    Equals alpha * p * ||x||_q^(p-q) * sign(x) * |x|^(q-1); coordinates
    with x_i = 0 map to 0 (the exponent q-1 is positive).
    """
    p, q = params.p, params.q
    x = np.asarray(x, dtype=np.float64)
    nq = np.linalg.norm(x, ord=q)
    if nq == 0.0:
        raise ValueError("linearization requires a nonzero point")
    return alpha * p * nq ** (p - q) * np.sign(x) * np.abs(x) ** (q - 1.0)


def _subproblem_objective(x: np.ndarray, x_anchor: np.ndarray,
                          c: np.ndarray, beta: float, p: float) -> float:
    val = lp_norm_pow(x, p) - float(c @ x)
    if beta > 0.0:
        val += 0.5 * beta * float(np.sum((x - x_anchor) ** 2))
    return val


def _admm_prox_subproblem(projector: FeasibleProjector, x_anchor: np.ndarray,
                          c: np.ndarray, beta: float, p: float,
                          config: DlpaConfig, max_iter: Optional[int] = None,
                          rho_continuation: bool = True):
    """ADMM on the split min ||y||_p^p + I_{Ax=b}(x) - <c,x> + prox term.

    x-update: affine projection of psi = (rho y + beta x_anchor - u + c)
    / (rho + beta); y-update: elementwise lp^p proximal map at x + u/rho;
    dual update u += rho (x - y).  rho follows the continuation schedule
    unless rho_continuation is off (the l1 baseline keeps rho fixed; the
    growing penalty freezes basis-pursuit progress prematurely).
    Residual thresholds scale with the iterate norms so large-dynamic-
    range data remains reachable in float64.  Returns the feasible
    iterate with the lowest subproblem objective seen (never worse than
    the anchor), plus the final inner state.
    """
    n = x_anchor.shape[0]
    max_iter = config.inner_max if max_iter is None else max_iter
    tol = config.inner_tol * np.sqrt(n)
    rho = config.rho0
    y = x_anchor.copy()
    u = np.zeros(n)
    best_x = x_anchor
    best_obj = _subproblem_objective(x_anchor, x_anchor, c, beta, p)
    x = x_anchor
    converged = False
    iters = 0
    primal = dual = np.inf
    for iters in range(1, max_iter + 1):
        psi = (rho * y + beta * x_anchor - u + c) / (rho + beta)
        x = projector.project(psi)
        y_prev = y
        y = prox_lp_power(x + u / rho, GstParams(p=p, rho=rho))
        u = u + rho * (x - y)
        obj = _subproblem_objective(x, x_anchor, c, beta, p)
        if obj < best_obj:
            best_obj = obj
            best_x = x
        primal = np.linalg.norm(x - y)
        dual = rho * np.linalg.norm(y - y_prev)
        scale_xy = 1.0 + max(np.linalg.norm(x), np.linalg.norm(y))
        scale_u = 1.0 + np.linalg.norm(u)
        if primal <= tol * scale_xy and dual <= tol * scale_u:
            converged = True
            break
        if rho_continuation:
            rho = min(rho * config.rho_growth, config.rho_max)
    if not converged:
        log.debug("inner ADMM hit max_iter=%d (primal %.2e, dual %.2e)",
                  max_iter, float(primal), float(dual))
    return best_x, best_obj, (y, u, rho), iters, converged


def inner_admm_solve(instance: ProblemInstance, x_k: np.ndarray,
                     c_k: np.ndarray, config: DlpaConfig,
                     params: RatioParams,
                     projector: Optional[FeasibleProjector] = None,
                     beta: Optional[float] = None) -> np.ndarray:
    """Approximate minimizer of the linearized-proximal subproblem.

    The returned point is feasible (projection is the last x-step) and
    its subproblem objective never exceeds the objective at x_k.
    """
    if projector is None:
        projector = FeasibleProjector(instance.A, instance.b)
    beta = config.beta_prox if beta is None else beta
    x, _, _, _, _ = _admm_prox_subproblem(
        projector, np.asarray(x_k, dtype=np.float64),
        np.asarray(c_k, dtype=np.float64), beta, params.p, config)
    return x


def l1_baseline_solve(instance: ProblemInstance,
                      config: Optional[DlpaConfig] = None,
                      max_iter: int = 5000,
                      projector: Optional[FeasibleProjector] = None) -> np.ndarray:
    """Basis-pursuit solution min ||x||_1 s.t. A x = b, by the same ADMM.

    Runs the subproblem machinery with c = 0, beta = 0, p = 1.  Falls
    back to the minimum-norm feasible point if the iteration fails to
    produce a feasible improvement.
    """
    config = config or DlpaConfig()
    if projector is None:
        projector = FeasibleProjector(instance.A, instance.b)
    v = projector.min_norm_point
    zeros = np.zeros(instance.n)
    try:
        x, _, _, _, converged = _admm_prox_subproblem(
            projector, v, zeros, 0.0, 1.0, config, max_iter=max_iter,
            rho_continuation=False)
    except Exception:
        log.warning("l1 baseline failed; falling back to the min-norm point")
        return v
    if not np.all(np.isfinite(x)):
        log.warning("l1 baseline produced non-finite values; using min-norm point")
        return v
    return x


def _estimate_grad_lipschitz(x_new: np.ndarray, x_old: np.ndarray,
                             params: RatioParams) -> float:
    """Local secant estimate of the Lipschitz constant of grad ||.||_q^p."""
    step = float(np.linalg.norm(x_new - x_old))
    if step == 0.0:
        return 0.0
    g_new = linearization_coefficient(x_new, 1.0, params)
    g_old = linearization_coefficient(x_old, 1.0, params)
    return float(np.linalg.norm(g_new - g_old)) / step


_BETA_MAX = 1e12


def _support_polish(projector: FeasibleProjector, x: np.ndarray,
                    y: Optional[np.ndarray], params: RatioParams,
                    alpha: float, feas_tol: float):
    """Snap the solution to the sparse support identified by the prox step.

    The thresholding variable y carries exact zeros; re-solving the
    least-squares system on its support removes the 1e-8-scale residue
    the splitting leaves on the other coordinates.  The candidate is
    accepted only when it stays feasible and does not increase the ratio,
    so the descent invariant survives.
    """
    if y is None:
        return x, alpha
    support = np.flatnonzero(y)
    if support.size == 0 or support.size >= x.shape[0]:
        return x, alpha
    z, *_ = np.linalg.lstsq(projector.A[:, support], projector.b, rcond=None)
    cand = np.zeros_like(x)
    cand[support] = z
    if projector.feasibility(cand) > feas_tol:
        return x, alpha
    if np.linalg.norm(cand) < 1e-300:
        return x, alpha
    alpha_cand = ratio_objective(cand, params)
    if alpha_cand <= alpha + 1e-12:
        return cand, alpha_cand
    return x, alpha


def dlpa_solve(instance: ProblemInstance, params: RatioParams,
               config: Optional[DlpaConfig] = None,
               x0: Optional[np.ndarray] = None) -> SolveResult:
    """Run the prox-linear Dinkelbach method on one instance.

    Initialization is the l1 baseline (min-norm fallback) unless x0 is
    given; x0 must be feasible.  Every accepted step keeps the ratio
    nonincreasing and the iterate feasible; the run stops when the ratio
    gap or the relative step falls below outer_tol, or at outer_max.
    """
    config = config or DlpaConfig()
    projector = FeasibleProjector(instance.A, instance.b)
    feas_tol = projector.feasibility_tol()
    if x0 is None:
        x = l1_baseline_solve(instance, config, projector=projector)
    else:
        x = np.asarray(x0, dtype=np.float64).copy()
        if projector.feasibility(x) > feas_tol:
            raise ValueError("provided x0 is not feasible")
    alpha = ratio_objective(x, params)
    alpha_cap = params.ratio_upper_bound(instance.n)
    beta = config.beta_prox
    state = SolverState(x=x, alpha=alpha)
    deadline = (time.monotonic() + config.time_limit_s
                if config.time_limit_s is not None else None)

    stop_reason = "max_iter"
    converged = False
    last_step = 0.0
    lipschitz = 0.0
    x_norm0 = float(np.linalg.norm(x))
    for k in range(1, config.outer_max + 1):
        c = linearization_coefficient(state.x, state.alpha, params)
        x_new, _, inner_state, inner_iters, _ = _admm_prox_subproblem(
            projector, state.x, c, beta, params.p, config)
        delta = (state.alpha * np.linalg.norm(x_new, ord=params.q) ** params.p
                 - lp_norm_pow(x_new, params.p))
        # Backtracking: a negative gap means beta is below the local
        # curvature; doubling it restores the descent guarantee.
        while delta < 0.0 and config.adaptive_beta and beta < _BETA_MAX:
            beta *= 2.0
            x_new, _, inner_state, inner_iters, _ = _admm_prox_subproblem(
                projector, state.x, c, beta, params.p, config)
            delta = (state.alpha * np.linalg.norm(x_new, ord=params.q) ** params.p
                     - lp_norm_pow(x_new, params.p))
        if delta < 0.0:
            # Step rejected (fixed beta, or the cap was hit): keep x_k.
            x_new = state.x
            delta = 0.0
            inner_iters = 0
        step = float(np.linalg.norm(x_new - state.x))
        if step > 0.0:
            lipschitz = _estimate_grad_lipschitz(x_new, state.x, params)
        alpha_new = ratio_objective(x_new, params)
        feas = projector.feasibility(x_new)
        rec = OuterRecord(alpha=alpha_new, delta=float(delta), step_norm=step,
                          inner_iters=inner_iters, feasibility=feas, beta=beta,
                          x_norm=float(np.linalg.norm(x_new)))
        x_prev_norm = max(float(np.linalg.norm(state.x)), 1e-300)
        state.x = x_new
        state.delta = float(delta)
        state.k = k
        state.inner = inner_state
        state.history.append(rec)
        last_step = step

        if feas > feas_tol:
            raise RuntimeError(
                f"iterate lost feasibility: ||Ax-b|| = {feas:.3e} > {feas_tol:.3e}"
            )
        if alpha_new > state.alpha + 1e-12 or alpha_new > alpha_cap + 1e-12 \
                or alpha_new < 1.0 - 1e-12:
            raise RuntimeError(
                f"ratio invariant violated: alpha {state.alpha} -> {alpha_new} "
                f"(cap {alpha_cap})"
            )
        state.alpha = alpha_new
        if rec.x_norm > 1e8 * (1.0 + x_norm0):
            log.warning("iterate norm %.3e looks unbounded", rec.x_norm)

        if step / x_prev_norm < config.outer_tol:
            stop_reason, converged = "step_tol", True
            break
        if abs(delta) < config.outer_tol:
            stop_reason, converged = "gap_tol", True
            break
        if deadline is not None and time.monotonic() > deadline:
            log.warning("time limit of %.1fs reached after %d outer iterations",
                        config.time_limit_s, k)
            stop_reason, converged = "max_iter", False
            break

    residual = (beta + state.alpha * lipschitz) * last_step
    x_hat, alpha_final = _support_polish(
        projector, state.x, state.inner[0], params, state.alpha, feas_tol)
    return SolveResult(
        x_hat=x_hat,
        alpha_final=alpha_final,
        iterations=state.k,
        converged=converged,
        stop_reason=stop_reason,
        stationarity_residual=float(residual),
        alpha_initial=float(alpha),
        history=state.history,
    )
