"""Automatic hyperparameter choice.

(m, a, b) are read off the data; (mu, lam) are tuned by simulation under the
flat truth f = 0, sigma = 1 so that the test keeps its nominal type-I error.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .conjugate import HyperParams
from .mono_test import run_test
from .parallel import map_tasks
from .sampler import ChainConfig
from .step_model import Dataset

log = logging.getLogger(__name__)

DEFAULT_GRID_MU = (0.01, 0.05, 0.1, 0.5, 1.0)
DEFAULT_GRID_LAMBDA = (0.05, 0.1, 0.2, 0.3, 0.5)
VARIANCE_FLOOR = 1e-12


def default_data_hyperparams(data: Dataset, variance_floor: float = VARIANCE_FLOOR) -> tuple[float, float, float]:
    """Return (m, a, b): empirical mean, a = s^2 + 1, b = s^4.

    With these, the prior mean of sigma^2 is b / (a - 1) = s^2. Constant data
    would give s^2 = 0, so the variance is floored.
    """
    m = float(np.mean(data.y))
    s2 = float(np.var(data.y, ddof=1))
    if s2 < variance_floor:
        log.warning("sample variance %.3g below floor, using %.3g", s2, variance_floor)
        s2 = variance_floor
    return m, s2 + 1.0, s2 * s2


def auto_hyperparams(data: Dataset, mu: float, lam: float, **overrides) -> HyperParams:
    """HyperParams with data-driven (m, a, b); ``overrides`` win over everything."""
    m, a, b = default_data_hyperparams(data)
    values = dict(m=m, a=a, b=b, mu=mu, lam=lam)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return HyperParams(**values)


@dataclass
class CalibrationReport:
    n: int
    mu: float
    lam: float
    level: float
    reps: int
    grid: dict = field(default_factory=dict)  # (mu, lam) -> estimated type-I error
    fallback: bool = False

    def rows(self):
        for (mu, lam), rate in sorted(self.grid.items()):
            yield mu, lam, rate


def _null_rejection(task) -> list[int]:
    """Decisions for one simulated null dataset across every grid cell."""
    n, data_seed, chain_seed, cells, iterations, level, k_min = task
    y = np.random.default_rng(data_seed).standard_normal(n)
    data = Dataset(y)
    cfg = ChainConfig(iterations=iterations, seed=chain_seed)
    return [
        run_test(data, auto_hyperparams(data, mu, lam, level=level, k_min=k_min), cfg).delta
        for mu, lam in cells
    ]


def calibrate_mu_lambda(
    n: int,
    level: float = 0.05,
    grid_mu: Sequence[float] = DEFAULT_GRID_MU,
    grid_lambda: Sequence[float] = DEFAULT_GRID_LAMBDA,
    reps: int = 200,
    seed: int = 0,
    iterations: int = 5000,
    k_min: int = 2,
    threads: Optional[int] = 1,
) -> CalibrationReport:
    """Pick the smallest (mu, lam), mu first, whose null rejection rate is <= level.

    Every grid cell sees the same simulated datasets and chain seeds, so cells
    differ only through the prior. If no cell reaches the level, the cell with
    the lowest estimated type-I error is returned and ``fallback`` is set.
    """
    if not grid_mu or not grid_lambda:
        raise ValueError("grids must be nonempty")
    if list(grid_mu) != sorted(grid_mu) or list(grid_lambda) != sorted(grid_lambda):
        raise ValueError("grids must be ascending")
    cells = [(float(mu), float(lam)) for mu in grid_mu for lam in grid_lambda]
    root = np.random.SeedSequence(seed)
    tasks = []
    for r, child in enumerate(root.spawn(reps)):
        data_seq, chain_seq = child.spawn(2)
        chain_seed = int(chain_seq.generate_state(1, np.uint64)[0])
        tasks.append((n, data_seq, chain_seed, cells, iterations, level, k_min))
    decisions = np.array(map_tasks(_null_rejection, tasks, threads))
    rates = decisions.mean(axis=0)
    grid = {cell: float(rate) for cell, rate in zip(cells, rates)}

    for cell in cells:
        if grid[cell] <= level:
            return CalibrationReport(n, cell[0], cell[1], level, reps, grid)
    best = min(cells, key=lambda c: (grid[c], c))
    log.warning("no grid cell reached type-I error <= %.3g at n=%d; using %s", level, n, best)
    return CalibrationReport(n, best[0], best[1], level, reps, grid, fallback=True)
