"""Step functions on the equispaced design grid.

Observations sit at x_i = i/n for i = 1..n. A step function with ``k`` pieces
uses the bins [0, 1/k), [1/k, 2/k), ..., [(k-1)/k, 1], the last one closed so
that x = 1 lands in bin k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class Dataset:
    """Responses observed on the implicit grid x_i = i/n."""

    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        if y.size < 2:
            raise ValueError(f"need at least 2 observations, got {y.size}")
        if not np.all(np.isfinite(y)):
            raise ValueError("responses must be finite")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return int(self.y.size)

    @property
    def x(self) -> np.ndarray:
        return np.arange(1, self.n + 1) / self.n

    def shifted(self, c: float) -> "Dataset":
        return Dataset(self.y + c)

    def negated(self) -> "Dataset":
        return Dataset(-self.y)


@dataclass(frozen=True)
class StepFunction:
    """Piecewise constant function with ``k = len(omega)`` equal-width pieces."""

    omega: np.ndarray

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float).ravel()
        if omega.size < 1:
            raise ValueError("a step function needs at least one level")
        if not np.all(np.isfinite(omega)):
            raise ValueError("levels must be finite")
        object.__setattr__(self, "omega", omega)

    @property
    def k(self) -> int:
        return int(self.omega.size)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any((x < 0) | (x > 1)):
            raise ValueError("step functions are defined on [0, 1]")
        j = np.minimum(np.floor(x * self.k).astype(int), self.k - 1)
        return self.omega[j]


@dataclass(frozen=True)
class BinStats:
    counts: np.ndarray
    means: np.ndarray
    sse: np.ndarray

    @property
    def k(self) -> int:
        return int(self.counts.size)


def bin_index(x: float, k: int) -> int:
    """1-based index of the bin holding ``x`` among ``k`` equal-width bins.

    Exact for ``fractions.Fraction`` input.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    return min(math.floor(x * k) + 1, k)


def grid_bins(n: int, k: int) -> np.ndarray:
    """0-based bin of every design point i/n, i = 1..n.

    Integer arithmetic keeps points such as 1/2 exactly on the bin boundary.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    i = np.arange(1, n + 1)
    return np.minimum(i * k // n, k - 1)


def bin_stats(data: Dataset, k: int, m: float = 0.0) -> BinStats:
    """Per-bin counts, means and within-bin sums of squares.

    Empty bins report mean ``m`` and zero sum of squares.
    """
    n = data.n
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, n={n}], got {k}")
    j = grid_bins(n, k)
    counts = np.bincount(j, minlength=k)
    sums = np.bincount(j, weights=data.y, minlength=k)
    filled = counts > 0
    means = np.full(k, float(m))
    means[filled] = sums[filled] / counts[filled]
    sse = np.bincount(j, weights=(data.y - means[j]) ** 2, minlength=k)
    return BinStats(counts=counts, means=means, sse=sse)


def discrepancy_H(omega) -> float:
    """Largest upward jump max_{j >= i} (omega_j - omega_i).

    Zero exactly when the levels are non-increasing. Single pass: each level
    is compared with the running minimum of the levels before it.
    """
    if isinstance(omega, StepFunction):
        omega = omega.omega
    omega = np.asarray(omega, dtype=float)
    return float(np.max(omega - np.minimum.accumulate(omega)))


def discrepancy_H_rows(omegas: np.ndarray) -> np.ndarray:
    """``discrepancy_H`` applied to every row of a 2-d array."""
    omegas = np.asarray(omegas, dtype=float)
    return np.max(omegas - np.minimum.accumulate(omegas, axis=1), axis=1)


def kl_projection_omega0(f0: Callable, n: int, k: int) -> StepFunction:
    """Bin-wise averages of ``f0`` over the design points.

    This is the step function closest to ``f0`` in Kullback-Leibler sense
    under Gaussian noise.
    """
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, n={n}], got {k}")
    j = grid_bins(n, k)
    counts = np.bincount(j, minlength=k)
    if np.any(counts == 0):
        raise ValueError(f"k={k} leaves an empty bin on a grid of n={n} points")
    fx = np.asarray(f0(np.arange(1, n + 1) / n), dtype=float)
    fx = np.broadcast_to(fx, (n,))
    return StepFunction(np.bincount(j, weights=fx, minlength=k) / counts)


def d_n(f: Callable, g: Callable, n: int) -> float:
    """Root mean square distance between ``f`` and ``g`` on the design grid."""
    x = np.arange(1, n + 1) / n
    diff = np.broadcast_to(np.asarray(f(x), dtype=float) - np.asarray(g(x), dtype=float), (n,))
    return float(np.sqrt(np.mean(diff**2)))
