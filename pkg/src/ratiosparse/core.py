"""Domain types, norm computations, and problem-instance plumbing.

Everything here is shared by the solver, the guarantee calculators, the
data generators, and the benchmark harness.  All vectors and matrices are
dense float64; types are immutable after construction and safe to share
between workers.
"""

from __future__ import annotations

import json
import numpy as np

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional


__all__ = [
    "RatioParams",
    "ProblemInstance",
    "SparsityProfile",
    "lp_norm_pow",
    "ratio_objective",
    "best_k_split",
    "save_instance",
    "load_instance",
]

# Below this 2-norm a vector is treated as numerically zero; the ratio
# objective is undefined there.
_ZERO_NORM_FLOOR = 1e-300


def _as_float_vector(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("vector contains non-finite entries")
    return x


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RatioParams:
    """Exponent pair of the norm-ratio objective ||x||_p^p / ||x||_q^p.

    The numerator exponent p lies in (0, 1] (quasi-norm for p < 1) and the
    denominator exponent q is strictly greater than 1.
    """

    p: float
    q: float

    def __post_init__(self):
        if not (0.0 < self.p <= 1.0):
            raise ValueError(f"p must lie in (0, 1], got {self.p}")
        if not (self.q > 1.0):
            raise ValueError(f"q must be > 1, got {self.q}")

    def ratio_upper_bound(self, n: int) -> float:
        """Largest possible objective value on R^n \\ {0}: n^(1 - p/q)."""
        return float(n) ** (1.0 - self.p / self.q)


@dataclass(frozen=True)
class ProblemInstance:
    """One linear observation model b = A x (+ noise of radius eps).

    A is m-by-n with m <= n (underdetermined or square) and b must be
    nonzero so that the origin is infeasible.
    """

    A: np.ndarray
    b: np.ndarray
    ground_truth: Optional[np.ndarray] = None
    noise_radius: float = 0.0
    id: str = ""

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.float64)
        b = _as_float_vector(self.b)
        if A.ndim != 2:
            raise ValueError(f"A must be a matrix, got shape {A.shape}")
        m, n = A.shape
        if m < 1 or n < m:
            raise ValueError(f"need 1 <= m <= n, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise ValueError("A contains non-finite entries")
        if b.shape != (m,):
            raise ValueError(f"b has shape {b.shape}, expected ({m},)")
        if np.linalg.norm(b) == 0.0:
            raise ValueError("b must be nonzero (the origin must be infeasible)")
        if self.noise_radius < 0.0:
            raise ValueError("noise_radius must be nonnegative")
        object.__setattr__(self, "A", _readonly(A))
        object.__setattr__(self, "b", _readonly(b))
        if self.ground_truth is not None:
            x = _as_float_vector(self.ground_truth)
            if x.shape != (n,):
                raise ValueError(f"ground_truth has shape {x.shape}, expected ({n},)")
            object.__setattr__(self, "ground_truth", _readonly(x))

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True)
class SparsityProfile:
    """Planted-signal description: sparsity k, support set, magnitude range.

    Magnitudes are drawn log-uniformly from [low, high].
    """

    k: int
    support: tuple
    dynamic_range: tuple

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")
        support = tuple(int(i) for i in self.support)
        if len(set(support)) != len(support):
            raise ValueError("support contains repeated indices")
        if len(support) != self.k:
            raise ValueError(f"support has {len(support)} indices, expected k={self.k}")
        if any(i < 0 for i in support):
            raise ValueError("support indices must be nonnegative")
        low, high = (float(v) for v in self.dynamic_range)
        if not (0.0 < low <= high):
            raise ValueError(f"need 0 < low <= high, got ({low}, {high})")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "dynamic_range", (low, high))


def lp_norm_pow(x, p: float) -> float:
    """Sum of |x_i|^p, i.e. the p-th power of the lp (quasi-)norm.

    Zero iff x is the zero vector.  Requires p > 0 and finite entries.
    """
    if p <= 0.0:
        raise ValueError(f"p must be positive, got {p}")
    x = _as_float_vector(x)
    a = np.abs(x)
    if p == 1.0:
        return float(a.sum())
    return float((a ** p).sum())


def ratio_objective(x, params: RatioParams) -> float:
    """Scale-invariant sparsity surrogate ||x||_p^p / ||x||_q^p.

    Lies in [1, n^(1-p/q)] for every nonzero x, attaining 1 exactly on
    one-sparse vectors.  Near-zero vectors (2-norm below 1e-300) are
    rejected rather than evaluated.
    """
    x = _as_float_vector(x)
    if np.linalg.norm(x) < _ZERO_NORM_FLOOR:
        raise ValueError("ratio objective is undefined at the zero vector")
    num = lp_norm_pow(x, params.p)
    den = np.linalg.norm(x, ord=params.q) ** params.p
    return float(num / den)


def best_k_split(x, k: int):
    """Split x into its k largest-magnitude entries and the remaining tail.

    Returns (head, tail) with head + tail == x exactly and disjoint
    supports.  Ties in magnitude are resolved toward the lowest index, so
    the split is deterministic across platforms.
    """
    x = _as_float_vector(x)
    n = x.shape[0]
    if not (1 <= k <= n):
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    # Stable sort on descending magnitude keeps earlier indices first
    # among equal magnitudes.
    order = np.argsort(-np.abs(x), kind="stable")
    head = np.zeros_like(x)
    head[order[:k]] = x[order[:k]]
    tail = x - head
    # The subtraction is exact: tail is x with the head coordinates zeroed.
    tail[order[:k]] = 0.0
    return head, tail


# ---------------------------------------------------------------------------
# Instance serialization: one directory per instance.
#
#   instance.json  -- {"id", "m", "n", "noise_radius", "ground_truth_support"}
#   A.csv          -- m lines of n comma-separated values (row-major)
#   b.csv          -- m lines of one value each
#   x.csv          -- n lines of one value each (present iff ground truth is)
#
# Floats are written with 17 significant digits so the round trip is exact.
# ---------------------------------------------------------------------------

def _write_csv_matrix(path: Path, a: np.ndarray) -> None:
    with open(path, "w") as fh:
        for row in np.atleast_2d(a):
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def _read_csv_matrix(path: Path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(v) for v in line.split(",")])
    return np.asarray(rows, dtype=np.float64)


def save_instance(instance: ProblemInstance, directory) -> None:
    """Write an instance as instance.json + A.csv + b.csv (+ x.csv)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    header = {
        "id": instance.id,
        "m": instance.m,
        "n": instance.n,
        "noise_radius": instance.noise_radius,
        "ground_truth_support": (
            None
            if instance.ground_truth is None
            else [int(i) for i in np.flatnonzero(instance.ground_truth)]
        ),
    }
    with open(directory / "instance.json", "w") as fh:
        json.dump(header, fh, indent=2)
        fh.write("\n")
    _write_csv_matrix(directory / "A.csv", instance.A)
    _write_csv_matrix(directory / "b.csv", instance.b.reshape(-1, 1))
    if instance.ground_truth is not None:
        _write_csv_matrix(directory / "x.csv", instance.ground_truth.reshape(-1, 1))


def load_instance(directory) -> ProblemInstance:
    """Read an instance previously written by save_instance."""
    directory = Path(directory)
    with open(directory / "instance.json") as fh:
        header = json.load(fh)
    A = _read_csv_matrix(directory / "A.csv")
    b = _read_csv_matrix(directory / "b.csv").ravel()
    if A.shape != (header["m"], header["n"]):
        raise ValueError(
            f"A.csv has shape {A.shape}, header says ({header['m']}, {header['n']})"
        )
    x_path = directory / "x.csv"
    ground_truth = _read_csv_matrix(x_path).ravel() if x_path.exists() else None
    return ProblemInstance(
        A=A,
        b=b,
        ground_truth=ground_truth,
        noise_radius=float(header.get("noise_radius", 0.0)),
        id=str(header.get("id", "")),
    )
