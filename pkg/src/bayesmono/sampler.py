"""Metropolis-Hastings over the number of bins, with exact conditional draws.

The k-chain is a random walk with a symmetric compound-geometric step. Given
the visited k, sigma^2 and omega are drawn exactly from their conjugate
conditionals, so the only Markov chain error lives in the k sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .conjugate import HyperParams, KPosterior, PosteriorDraw
from .step_model import Dataset, discrepancy_H_rows


@dataclass(frozen=True)
class ChainConfig:
    iterations: int = 5000
    burn_in: Optional[int] = None  # None -> iterations // 10
    seed: int = 0
    proposal_geom_p: float = 0.3
    k_init: int = 2

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if self.burn_in is not None and not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must lie in [0, iterations)")
        if not 0.0 < self.proposal_geom_p < 1.0:
            raise ValueError("proposal_geom_p must lie in (0, 1)")
        if self.k_init < 1:
            raise ValueError("k_init must be >= 1")

    @property
    def n_burn(self) -> int:
        return self.iterations // 10 if self.burn_in is None else self.burn_in


@dataclass
class Chain:
    """Posterior draws stored column-wise.

    ``omega[i]`` has length ``k[i]``; ``H[i]`` is its discrepancy.
    """

    k: np.ndarray
    sigma2: np.ndarray
    omega: list
    H: np.ndarray
    acceptance_rate: float
    n: int

    def __len__(self) -> int:
        return int(self.k.size)

    def __getitem__(self, i: int) -> PosteriorDraw:
        return PosteriorDraw(int(self.k[i]), float(self.sigma2[i]), self.omega[i])

    def __iter__(self) -> Iterator[PosteriorDraw]:
        return (self[i] for i in range(len(self)))

    def k_histogram(self) -> dict[int, int]:
        values, counts = np.unique(self.k, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}

    def modal_k(self) -> int:
        values, counts = np.unique(self.k, return_counts=True)
        return int(values[np.argmax(counts)])


def propose_step(rng, p: float = 0.3) -> int:
    """Signed step with |step| = 1 + Geometric(p) on {0, 1, ...}."""
    # numpy's geometric counts trials, so it already lives on {1, 2, ...}
    magnitude = int(rng.geometric(p))
    return magnitude if rng.random() < 0.5 else -magnitude


def _transition(k: int, step: int, log_u: float, target: KPosterior) -> tuple[int, bool]:
    proposal = k + step
    if proposal < target.k_min or proposal > target.k_max:
        return k, False
    if log_u < target.logp(proposal) - target.logp(k):
        return proposal, True
    return k, False


def mh_step(current_k: int, target: KPosterior, rng, p: float = 0.3) -> int:
    """One random-walk Metropolis update of k.

    Out-of-range proposals are rejected in place; the step distribution is
    symmetric so no Hastings correction is needed.
    """
    step = propose_step(rng, p)
    log_u = math.log(rng.random())
    return _transition(current_k, step, log_u, target)[0]


def _walk_k(target: KPosterior, cfg: ChainConfig, rng) -> tuple[np.ndarray, float]:
    K = cfg.iterations
    steps = rng.geometric(cfg.proposal_geom_p, size=K)
    steps = np.where(rng.random(K) < 0.5, steps, -steps).tolist()
    log_u = np.log(rng.random(K)).tolist()
    k = min(max(cfg.k_init, target.k_min), target.k_max)
    ks = np.empty(K, dtype=np.int64)
    accepted = 0
    for i in range(K):
        k, acc = _transition(k, steps[i], log_u[i], target)
        accepted += acc
        ks[i] = k
    return ks, accepted / K


def run_chain(data: Dataset, hp: HyperParams, cfg: ChainConfig, target: Optional[KPosterior] = None) -> Chain:
    """Run the k-chain and attach exact (sigma^2, omega) draws to kept iterations.

    Deterministic given ``cfg.seed``. The k-walk and the conditional draws use
    separate child streams; conditional draws are generated in blocks of equal
    k, in ascending k order.
    """
    target = target if target is not None else KPosterior(data, hp)
    walk_seq, draw_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    ks, acc_rate = _walk_k(target, cfg, np.random.default_rng(walk_seq))
    ks = ks[cfg.n_burn:]

    rng = np.random.default_rng(draw_seq)
    size = ks.size
    sigma2 = np.empty(size)
    H = np.empty(size)
    omega: list = [None] * size
    for k in np.unique(ks):
        k = int(k)
        idx = np.flatnonzero(ks == k)
        s2 = target.b_tilde(k) / rng.standard_gamma(target.shape, size=idx.size)
        mean, prec = target.omega_moments(k)
        block = mean + np.sqrt(s2[:, None] / prec) * rng.standard_normal((idx.size, k))
        sigma2[idx] = s2
        H[idx] = discrepancy_H_rows(block)
        for row, i in enumerate(idx):
            omega[i] = block[row]
    return Chain(k=ks, sigma2=sigma2, omega=omega, H=H, acceptance_rate=acc_rate, n=data.n)
