"""Thresholding operators for the lp^p quasi-norm penalty.

For a scalar t and penalty weight rho, the proximal map

    argmin_y |y|^p + (rho/2) * (y - t)^2

is the ordinary soft-thresholding operator at p = 1 and the generalized
soft-thresholding (GST) operator for 0 < p < 1.  GST zeroes everything
inside an analytic threshold tau and otherwise inverts

    h(z) = p * z^(p-1) / rho + z

on the positive branch past the stationary point of h, using a
safeguarded Newton iteration with a bisection fallback.
"""

from __future__ import annotations

import logging
import numpy as np

from dataclasses import dataclass


__all__ = ["GstParams", "gst_threshold", "gst_apply", "soft_threshold", "prox_lp_power"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GstParams:
    """Exponent, penalty weight, and Newton controls for the GST operator."""

    p: float
    rho: float
    newton_tol: float = 1e-12
    newton_max_iter: int = 50

    def __post_init__(self):
        if not (0.0 < self.p <= 1.0):
            raise ValueError(f"p must lie in (0, 1], got {self.p}")
        if self.rho <= 0.0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if self.newton_tol <= 0.0 or self.newton_max_iter < 1:
            raise ValueError("invalid Newton controls")


def gst_threshold(params: GstParams) -> float:
    """Analytic GST threshold tau for 0 < p < 1.

    tau = beta_p + p * beta_p^(p-1) / rho  with
    beta_p = (2 * (1 - p) / rho)^(1 / (2 - p)).

    As p -> 1 from below, tau approaches the soft threshold 1/rho.  p = 1
    itself is rejected; callers use soft_threshold there.
    """
    p, rho = params.p, params.rho
    if p >= 1.0:
        raise ValueError("gst_threshold requires p < 1; use soft_threshold at p = 1")
    beta_p = (2.0 * (1.0 - p) / rho) ** (1.0 / (2.0 - p))
    return beta_p + p * beta_p ** (p - 1.0) / rho


def soft_threshold(t: float, lam: float) -> float:
    """sign(t) * max(|t| - lam, 0) for lam > 0."""
    if lam <= 0.0:
        raise ValueError(f"lambda must be positive, got {lam}")
    return float(np.sign(t) * max(abs(t) - lam, 0.0))


def _invert_h(a: np.ndarray, p: float, rho: float, beta_p: float,
              newton_tol: float, newton_max_iter: int) -> np.ndarray:
    """Solve h(z) = a coordinate-wise on [beta_p, a], vectorized.

    h is strictly increasing there, so the bracket endpoints have opposite
    residual signs and bisection cannot fail.  Newton starts from z = a;
    the residual is evaluated as (z - a) + (p/rho) z^(p-1) to keep it
    cancellation-free near the root.
    """
    coef = p / rho
    z = a.copy()
    lo = np.full_like(a, beta_p)
    hi = a.copy()
    converged = np.zeros(a.shape, dtype=bool)
    for _ in range(newton_max_iter):
        f = (z - a) + coef * z ** (p - 1.0)
        converged = np.abs(f) <= newton_tol
        if converged.all():
            return z
        live = ~converged
        lo = np.where(live & (f < 0), z, lo)
        hi = np.where(live & (f > 0), z, hi)
        fp = 1.0 + coef * (p - 1.0) * z ** (p - 2.0)
        z_new = z - f / np.where(fp > 0, fp, 1.0)
        # Safeguard: a non-increasing h slope or an iterate outside the
        # bracket falls back to the bracket midpoint.
        z_new = np.where((fp <= 0) | (z_new <= lo) | (z_new >= hi),
                         0.5 * (lo + hi), z_new)
        z = np.where(converged, z, z_new)
    f = (z - a) + coef * z ** (p - 1.0)
    rem = np.abs(f) > newton_tol
    if rem.any():
        # Newton budget exhausted: finish by bisection on the bracket.
        lo_r, hi_r, a_r = lo[rem], hi[rem], a[rem]
        for _ in range(200):
            mid = 0.5 * (lo_r + hi_r)
            fm = (mid - a_r) + coef * mid ** (p - 1.0)
            lo_r = np.where(fm < 0, mid, lo_r)
            hi_r = np.where(fm > 0, mid, hi_r)
            if np.all(hi_r - lo_r <= 4e-16 * np.maximum(1.0, hi_r)):
                break
        z[rem] = 0.5 * (lo_r + hi_r)
    return z


def prox_lp_power(t, params: GstParams) -> np.ndarray:
    """Elementwise minimizer of |y|^p + (rho/2)(y - t)^2 over a vector t.

    Dispatches to soft thresholding at p = 1 and to the GST operator for
    0 < p < 1.  Exact ties |t| = tau take the zero branch (both candidates
    have equal objective; sparsity is preferred).
    """
    t = np.asarray(t, dtype=np.float64)
    if not np.all(np.isfinite(t)):
        raise ValueError("input contains non-finite entries")
    p, rho = params.p, params.rho
    if p == 1.0:
        lam = 1.0 / rho
        return np.sign(t) * np.maximum(np.abs(t) - lam, 0.0)
    tau = gst_threshold(params)
    beta_p = (2.0 * (1.0 - p) / rho) ** (1.0 / (2.0 - p))
    out = np.zeros_like(t)
    a = np.abs(t)
    live = a > tau
    if live.any():
        if tau >= a[live].max():  # cannot happen; guards a degenerate bracket
            log.warning("GST bracket [beta_p, |t|] invalid; returning 0")
            return out
        z = _invert_h(a[live], p, rho, beta_p,
                      params.newton_tol, params.newton_max_iter)
        out[live] = np.sign(t[live]) * z
    return out


def gst_apply(t: float, params: GstParams) -> float:
    """Scalar GST map: the global minimizer of |y|^p + (rho/2)(y - t)^2.

    The output has the same sign as t (or is zero) and never exceeds |t|
    in magnitude.
    """
    return float(prox_lp_power(np.array([float(t)]), params)[0])
