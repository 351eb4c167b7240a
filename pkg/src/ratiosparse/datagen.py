"""Reproducible sensing matrices, planted sparse signals, and instances.

All randomness flows through counter-based Philox streams keyed by
(seed, path...), so generation is a pure function of the spec and is
safe to call from any number of workers in any order.
"""

from __future__ import annotations

import math
import numpy as np

from dataclasses import dataclass, replace
from typing import Optional

from .core import ProblemInstance, SparsityProfile


__all__ = [
    "MatrixSpec",
    "SignalSpec",
    "derive_rng",
    "gen_matrix",
    "gen_signal",
    "gen_instance",
    "matched_signal_spec",
]

CORRELATED_GAUSSIAN = "correlated_gaussian"
OVERSAMPLED_DCT = "oversampled_dct"


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    """Philox stream uniquely determined by (seed, path...)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(v) for v in path))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class MatrixSpec:
    """Sensing-matrix description; seed fully determines the output.

    kind "correlated_gaussian": rows drawn from N(0, (1-r) I + r 11^T).
    kind "oversampled_dct": entries cos(2 pi w_i j / F) / sqrt(m) with
    w_i uniform on [0, 1] and j = 1..n; larger F means higher coherence.
    """

    kind: str
    m: int
    n: int
    r: float = 0.0
    F: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (CORRELATED_GAUSSIAN, OVERSAMPLED_DCT):
            raise ValueError(f"unknown matrix kind {self.kind!r}")
        if self.m < 1 or self.n < self.m:
            raise ValueError(f"need 1 <= m <= n, got m={self.m}, n={self.n}")
        if self.kind == CORRELATED_GAUSSIAN and not (0.0 <= self.r < 1.0):
            raise ValueError(f"correlation r must lie in [0, 1), got {self.r}")
        if self.kind == OVERSAMPLED_DCT and self.F <= 0.0:
            raise ValueError(f"oversampling factor F must be positive, got {self.F}")


@dataclass(frozen=True)
class SignalSpec:
    """Planted-signal description: sparsity, magnitude range, separation.

    Nonzero entries get random signs and log-uniform magnitudes from
    [mag_low, mag_high]; support indices keep pairwise (linear,
    non-wraparound) distance >= min_separation.
    """

    n: int
    k: int
    mag_low: float = 1.0
    mag_high: float = 1.0
    min_separation: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.k < 1 or self.n < 1:
            raise ValueError("n and k must be positive")
        if self.k * max(1, self.min_separation) > self.n:
            raise ValueError(
                f"support of size {self.k} with separation "
                f"{self.min_separation} does not fit in n={self.n}"
            )
        if not (0.0 < self.mag_low <= self.mag_high):
            raise ValueError("need 0 < mag_low <= mag_high")
        if self.min_separation < 0:
            raise ValueError("min_separation must be nonnegative")


def gen_matrix(spec: MatrixSpec) -> np.ndarray:
    """Draw the sensing matrix described by spec (deterministic in seed)."""
    rng = derive_rng(spec.seed, 0)
    m, n = spec.m, spec.n
    if spec.kind == CORRELATED_GAUSSIAN:
        r = spec.r
        z = rng.standard_normal((m, n))
        if r == 0.0:
            return z
        # Closed-form square root of (1-r) I + r 11^T: scale by sqrt(1-r)
        # everywhere and adjust the all-ones direction (rank-one update).
        s_perp = math.sqrt(1.0 - r)
        s_ones = math.sqrt(1.0 - r + r * n)
        row_means = z.mean(axis=1, keepdims=True)
        return s_perp * z + (s_ones - s_perp) * row_means
    w = rng.uniform(0.0, 1.0, size=m)
    j = np.arange(1, n + 1, dtype=np.float64)
    return np.cos(2.0 * np.pi * np.outer(w, j) / spec.F) / math.sqrt(m)


def _sample_separated_support(rng: np.random.Generator, n: int, k: int,
                              sep: int) -> np.ndarray:
    """Uniform k-subset of [0, n) with pairwise index gaps >= sep.

    Subtracting i*(sep-1) from the i-th smallest index is a bijection
    onto unconstrained k-subsets of a shorter range, so sampling there
    and mapping back yields the exact uniform-with-separation law.
    """
    if sep <= 1:
        return np.sort(rng.choice(n, size=k, replace=False))
    reduced = n - (k - 1) * (sep - 1)
    base = np.sort(rng.choice(reduced, size=k, replace=False))
    return base + np.arange(k) * (sep - 1)


def gen_signal(spec: SignalSpec) -> np.ndarray:
    """Draw the planted sparse signal described by spec."""
    rng = derive_rng(spec.seed, 1)
    support = _sample_separated_support(rng, spec.n, spec.k, spec.min_separation)
    exponents = rng.uniform(math.log10(spec.mag_low), math.log10(spec.mag_high),
                            size=spec.k)
    signs = rng.choice([-1.0, 1.0], size=spec.k)
    x = np.zeros(spec.n)
    x[support] = signs * 10.0 ** exponents
    return x


def signal_profile(spec: SignalSpec) -> SparsityProfile:
    """SparsityProfile realized by gen_signal for this spec."""
    x = gen_signal(spec)
    return SparsityProfile(k=spec.k,
                           support=tuple(int(i) for i in np.flatnonzero(x)),
                           dynamic_range=(spec.mag_low, spec.mag_high))


def matched_signal_spec(mspec: MatrixSpec, k: int, seed: int,
                        mag_low: Optional[float] = None,
                        mag_high: Optional[float] = None,
                        min_separation: Optional[int] = None) -> SignalSpec:
    """Signal spec whose defaults follow the matrix family.

    Correlated Gaussian matrices pair with magnitudes in [1, 1e3] and no
    separation constraint; oversampled DCT matrices pair with magnitudes
    in [1, 1e5] and minimum support separation 2F.
    """
    if mspec.kind == OVERSAMPLED_DCT:
        low, high = 1.0, 1e5
        sep = int(math.ceil(2.0 * mspec.F))
    else:
        low, high = 1.0, 1e3
        sep = 0
    return SignalSpec(
        n=mspec.n,
        k=k,
        mag_low=low if mag_low is None else mag_low,
        mag_high=high if mag_high is None else mag_high,
        min_separation=sep if min_separation is None else min_separation,
        seed=seed,
    )


def gen_instance(mspec: MatrixSpec, sspec: SignalSpec,
                 id: str = "") -> ProblemInstance:
    """Noiseless instance b = A x* with the ground truth stored."""
    if mspec.n != sspec.n:
        raise ValueError(f"dimension mismatch: matrix n={mspec.n}, signal n={sspec.n}")
    A = gen_matrix(mspec)
    x = gen_signal(sspec)
    b = A @ x
    return ProblemInstance(A=A, b=b, ground_truth=x, noise_radius=0.0, id=id)
