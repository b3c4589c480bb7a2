"""Simulation study: nine regression functions and their rejection rates.

f1-f7 are not non-increasing; f8 and f9 are. Noise variances follow the
classic benchmark (0.01 except 0.004 for f5 and 0.006 for f6).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from .calibrate import auto_hyperparams, calibrate_mu_lambda
from .mono_test import run_test
from .parallel import map_tasks
from .sampler import ChainConfig
from .step_model import Dataset


def _f1(x):
    return -15 * (x - 0.5) ** 3 * (x <= 0.5) - 0.3 * (x - 0.5) + np.exp(-250 * (x - 0.25) ** 2)


def _f2(x):
    return 0.15 * x


def _f3(x):
    return 0.2 * np.exp(-50 * (x - 0.5) ** 2)


def _f4(x):
    return -0.5 * np.cos(6 * np.pi * x)


def _f5(x):
    return -0.2 * x + _f3(x)


def _f6(x):
    return -0.2 * x + _f4(x)


def _f7(x):
    return -(1 + x) + 0.25 * np.exp(-50 * (x - 0.5) ** 2)


def _f8(x):
    return -0.5 * x**2


def _f9(x):
    return np.zeros_like(np.asarray(x, dtype=float))


FUNCTIONS = {1: _f1, 2: _f2, 3: _f3, 4: _f4, 5: _f5, 6: _f6, 7: _f7, 8: _f8, 9: _f9}
BENCHMARK_SIGMA2 = {1: 0.01, 2: 0.01, 3: 0.01, 4: 0.01, 5: 0.004, 6: 0.006, 7: 0.01, 8: 0.01, 9: 0.01}
MONOTONE_IDS = frozenset({8, 9})
BENCHMARK_N = (100, 250, 500, 1000, 2500)


def benchmark_function(function_id: int) -> Callable:
    try:
        f = FUNCTIONS[function_id]
    except KeyError:
        raise ValueError(f"function id must be in 1..9, got {function_id}") from None

    def wrapped(x):
        return f(np.asarray(x, dtype=float))

    wrapped.__name__ = f"f{function_id}"
    return wrapped


def simulate_dataset(f: Callable, sigma2: float, n: int, rng) -> Dataset:
    """y_i = f(i/n) + sigma * z_i with standard normal z_i."""
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    x = np.arange(1, n + 1) / n
    mean = np.broadcast_to(np.asarray(f(x), dtype=float), (n,))
    return Dataset(mean + np.sqrt(sigma2) * rng.standard_normal(n))


@dataclass(frozen=True)
class Scenario:
    function_id: int
    n: int
    sigma2: Optional[float] = None  # None -> default noise level for this function
    replications: int = 100
    K: int = 5000
    seed: int = 0

    def __post_init__(self):
        benchmark_function(self.function_id)
        if self.sigma2 is None:
            object.__setattr__(self, "sigma2", BENCHMARK_SIGMA2[self.function_id])
        if self.sigma2 <= 0 or self.n < 2 or self.replications < 1 or self.K < 1:
            raise ValueError(f"invalid scenario {self}")

    def replication_seeds(self) -> list[tuple[np.random.SeedSequence, int]]:
        """(data seed sequence, chain seed) per replication, from (seed, index) only."""
        out = []
        for child in np.random.SeedSequence(self.seed).spawn(self.replications):
            data_seq, chain_seq = child.spawn(2)
            out.append((data_seq, int(chain_seq.generate_state(1, np.uint64)[0])))
        return out


@dataclass
class ScenarioResult:
    scenario: Scenario
    mu: float
    lam: float
    decisions: list = field(default_factory=list)
    pi_hats: list = field(default_factory=list)
    modal_ks: list = field(default_factory=list)

    @property
    def rejections(self) -> int:
        return int(sum(self.decisions))

    @property
    def rejection_pct(self) -> float:
        return 100.0 * self.rejections / len(self.decisions)

    def records(self):
        for i, (d, p, k) in enumerate(zip(self.decisions, self.pi_hats, self.modal_ks)):
            yield {
                "function": self.scenario.function_id,
                "n": self.scenario.n,
                "replication": i,
                "pi_hat": p,
                "delta": d,
                "modal_k": k,
            }


MuLambda = Union[tuple, Callable[[int], tuple], None]


class CalibrationCache:
    """(mu, lam) per sample size, calibrated on first request."""

    def __init__(self, reps: int = 200, seed: int = 0, iterations: int = 5000, level: float = 0.05,
                 k_min: int = 2, threads: Optional[int] = 1, **grid):
        self.kwargs = dict(reps=reps, seed=seed, iterations=iterations, level=level, k_min=k_min,
                           threads=threads, **grid)
        self.reports: dict = {}

    def __call__(self, n: int) -> tuple:
        if n not in self.reports:
            self.reports[n] = calibrate_mu_lambda(n, **self.kwargs)
        rep = self.reports[n]
        return rep.mu, rep.lam


def _resolve(mu_lambda: MuLambda, n: int) -> tuple:
    if mu_lambda is None:
        raise ValueError("no (mu, lam) source given")
    if callable(mu_lambda):
        return mu_lambda(n)
    return mu_lambda


def _one_replication(task):
    f_id, sigma2, n, data_seq, chain_seed, K, mu, lam, hp_overrides = task
    data = simulate_dataset(benchmark_function(f_id), sigma2, n, np.random.default_rng(data_seq))
    hp = auto_hyperparams(data, mu, lam, **hp_overrides)
    rep = run_test(data, hp, ChainConfig(iterations=K, seed=chain_seed))
    return rep.delta, rep.pi_hat, rep.modal_k


def run_scenario(sc: Scenario, mu_lambda: MuLambda, threads: Optional[int] = 1, **hp_overrides) -> ScenarioResult:
    mu, lam = _resolve(mu_lambda, sc.n)
    tasks = [
        (sc.function_id, sc.sigma2, sc.n, data_seq, chain_seed, sc.K, mu, lam, hp_overrides)
        for data_seq, chain_seed in sc.replication_seeds()
    ]
    out = map_tasks(_one_replication, tasks, threads)
    res = ScenarioResult(sc, mu, lam)
    for d, p, k in out:
        res.decisions.append(d)
        res.pi_hats.append(p)
        res.modal_ks.append(k)
    return res


def rejection_table(scenarios: Sequence[Scenario], mu_lambda: MuLambda, threads: Optional[int] = 1,
                    **hp_overrides) -> list[ScenarioResult]:
    """Rejection percentage for every scenario, in input order."""
    return [run_scenario(sc, mu_lambda, threads, **hp_overrides) for sc in scenarios]


def format_table(results: Iterable[ScenarioResult]) -> str:
    """Delimited text: one row per (function, sigma2), one column per n."""
    results = list(results)
    ns = sorted({r.scenario.n for r in results})
    rows: dict = {}
    for r in results:
        key = (r.scenario.function_id, r.scenario.sigma2)
        rows.setdefault(key, {})[r.scenario.n] = r.rejection_pct
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["function", "status", "sigma2"] + [f"n={n}" for n in ns])
    for (f_id, s2), by_n in sorted(rows.items()):
        status = "monotone" if f_id in MONOTONE_IDS else "non-monotone"
        w.writerow([f"f{f_id}", status, f"{s2:g}"] + [f"{by_n[n]:.1f}" if n in by_n else "" for n in ns])
    return buf.getvalue()


def format_replications(results: Iterable[ScenarioResult]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, ["function", "n", "replication", "pi_hat", "delta", "modal_k"], lineterminator="\n")
    w.writeheader()
    for r in results:
        w.writerows(r.records())
    return buf.getvalue()


def consistency_sweep(function_id: int, n_list: Sequence[int], mu_lambda: MuLambda, replications: int = 100,
                      K: int = 5000, seed: int = 0, sigma2: Optional[float] = None,
                      threads: Optional[int] = 1) -> list[dict]:
    """Rejection rate as a function of n (power curve or null curve)."""
    if list(n_list) != sorted(n_list):
        raise ValueError("n_list must be ascending")
    out = []
    for n in n_list:
        sc = Scenario(function_id, n, sigma2, replications, K, seed)
        res = run_scenario(sc, mu_lambda, threads)
        out.append({"function": function_id, "n": n, "rejections": res.rejections,
                    "replications": replications, "rejection_pct": res.rejection_pct,
                    "mu": res.mu, "lam": res.lam})
    return out


def benchmark_scenarios(ns: Sequence[int] = (100,), replications: int = 100, K: int = 5000, seed: int = 0,
                     functions: Sequence[int] = tuple(range(1, 10))) -> list[Scenario]:
    return [Scenario(f, n, None, replications, K, seed) for f in functions for n in ns]


def load_scenarios(path) -> list[Scenario]:
    """Read scenarios from JSON: a list of objects, or {"defaults": {...}, "scenarios": [...]}."""
    with open(path) as fh:
        doc = json.load(fh)
    defaults: dict = {}
    if isinstance(doc, dict):
        defaults = doc.get("defaults", {})
        doc = doc["scenarios"]
    return [Scenario(**{**defaults, **entry}) for entry in doc]


def dump_scenarios(scenarios: Sequence[Scenario]) -> str:
    return json.dumps({"scenarios": [asdict(s) for s in scenarios]}, indent=2)
