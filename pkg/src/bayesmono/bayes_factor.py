"""Bayes factor for "f is non-increasing" under the step-function prior.

Kept as a baseline: under a flat truth it often lands on the wrong side of 0.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import numpy as np
from scipy.special import gammaln

from .calibrate import auto_hyperparams
from .conjugate import HyperParams, PosteriorDraw, log_prior_k
from .parallel import map_tasks
from .sampler import Chain, ChainConfig, run_chain
from .step_model import Dataset, discrepancy_H

_SERIES_TOL = 1e-16


def prior_prob_monotone(hp: HyperParams, k_max: Optional[int] = None) -> float:
    """Prior mass of non-increasing step functions, sum_k pi(k) / k!.

    Given k the levels are iid and continuous, so each of the k! orderings is
    equally likely and exactly one is non-increasing. ``k_max`` (or
    ``hp.k_max``) truncates the prior on k; without either the untruncated
    series is summed until the remaining tail is negligible.
    """
    k_max = k_max if k_max is not None else hp.k_max
    if k_max is not None:
        ks = np.arange(hp.k_min, k_max + 1)
        logw = log_prior_k(ks, hp, k_max)
        return float(np.sum(np.exp(logw - _log_factorial(ks))))
    total = 0.0
    k = hp.k_min
    log_w = math.log(hp.lam)
    while True:
        term = math.exp(log_w - math.lgamma(k + 1))
        total += term
        # tail <= term * sum_j ((1 - lam) / (k + 1))^j
        ratio = (1.0 - hp.lam) / (k + 1)
        if term * ratio / (1.0 - ratio) < _SERIES_TOL:
            return total
        k += 1
        log_w += math.log1p(-hp.lam)


def _log_factorial(ks):
    return gammaln(np.asarray(ks, dtype=float) + 1.0)


def monotone_count(draws: Union[Chain, Iterable[PosteriorDraw]]) -> tuple[int, int]:
    """(draws with exactly non-increasing levels, total draws)."""
    if isinstance(draws, Chain):
        return int(np.count_nonzero(draws.H == 0.0)), len(draws)
    hits = total = 0
    for d in draws:
        total += 1
        hits += discrepancy_H(d.omega) == 0.0
    return hits, total


def log_bayes_factor_from_counts(hits: int, total: int, prior_mono: float) -> float:
    """log of posterior odds of F over prior odds of F; +/-inf when a fraction is 0 or 1."""
    if total <= 0:
        raise ValueError("no posterior draws")
    if hits == total:
        return math.inf
    if hits == 0:
        return -math.inf
    p = hits / total
    return math.log(p) - math.log1p(-p) + math.log1p(-prior_mono) - math.log(prior_mono)


def log_bayes_factor(draws: Union[Chain, Iterable[PosteriorDraw]], hp: HyperParams,
                     n: Optional[int] = None) -> float:
    """Monte Carlo log B_{0,1}; the prior odds use the same truncation as the chain."""
    if n is None and isinstance(draws, Chain):
        n = draws.n
    k_max = hp.effective_k_max(n) if n is not None else hp.k_max
    hits, total = monotone_count(draws)
    return log_bayes_factor_from_counts(hits, total, prior_prob_monotone(hp, k_max))


@dataclass
class NullBayesFactorResult:
    n: int
    log_bfs: np.ndarray
    monotone_counts: list = field(default_factory=list)
    edges: np.ndarray = field(default_factory=lambda: np.array([]))
    counts: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))

    @property
    def negative_fraction(self) -> float:
        return float(np.mean(self.log_bfs < 0))

    @property
    def n_pos_inf(self) -> int:
        return int(np.sum(np.isposinf(self.log_bfs)))

    @property
    def n_neg_inf(self) -> int:
        return int(np.sum(np.isneginf(self.log_bfs)))

    def histogram_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_left", "bin_right", "count"])
        for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts):
            w.writerow([f"{lo:.6g}", f"{hi:.6g}", int(c)])
        return buf.getvalue()


def _one_bf(task):
    n, sigma2, data_seq, chain_seed, K, mu, lam, k_min = task
    y = math.sqrt(sigma2) * np.random.default_rng(data_seq).standard_normal(n)
    data = Dataset(y)
    hp = auto_hyperparams(data, mu, lam, k_min=k_min)
    chain = run_chain(data, hp, ChainConfig(iterations=K, seed=chain_seed))
    hits, total = monotone_count(chain)
    return log_bayes_factor(chain, hp), hits


def null_bayes_factor_experiment(n: int = 100, reps: int = 100, K: int = 5000, seed: int = 0, sigma2: float = 0.01,
                       mu: float = 0.01, lam: float = 0.5, k_min: int = 2, bins: int = 20,
                       threads: Optional[int] = 1) -> NullBayesFactorResult:
    """log B_{0,1} over ``reps`` datasets drawn from f = 0, plus a histogram
    of its finite values."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    tasks = []
    for child in np.random.SeedSequence(seed).spawn(reps):
        data_seq, chain_seq = child.spawn(2)
        tasks.append((n, sigma2, data_seq, int(chain_seq.generate_state(1, np.uint64)[0]), K, mu, lam, k_min))
    out = map_tasks(_one_bf, tasks, threads)
    log_bfs = np.array([v for v, _ in out])
    finite = log_bfs[np.isfinite(log_bfs)]
    if finite.size:
        nbins = 1 if np.unique(finite).size == 1 else bins
        counts, edges = np.histogram(finite, bins=nbins)
    else:
        counts, edges = np.array([], dtype=int), np.array([])
    return NullBayesFactorResult(n, log_bfs, [h for _, h in out], edges, counts)
