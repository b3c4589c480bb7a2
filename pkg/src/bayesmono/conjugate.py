"""Closed-form posterior pieces under the conjugate step-function prior.

The prior is

    k - k_min ~ Geometric(lam) on {0, 1, ...}, truncated at k_max and renormalised
    sigma^2 | k ~ InvGamma(a, b)          (shape a, rate b)
    omega_j | k, sigma^2 ~ N(m, sigma^2 / mu)   independently

so that, given k, both sigma^2 and omega have closed-form posteriors and the
posterior of k is known up to a constant.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.special import gammaln, logsumexp

from .step_model import BinStats, Dataset, bin_stats


@dataclass(frozen=True)
class HyperParams:
    """Prior constants and decision constants.

    ``lam`` is the geometric success probability for the number of bins,
    ``a``/``b`` the inverse-gamma shape/rate for sigma^2, ``m`` and ``mu`` the
    prior mean and precision scale of the levels. ``gamma0``/``gamma1`` are the
    0-1 loss weights and ``level`` the nominal type-I error used to set the
    threshold constant. The bin count lives on {k_min, ..., k_max};
    ``k_max=None`` means "cap at n".
    """

    lam: float = 0.1
    a: float = 2.0
    b: float = 1.0
    m: float = 0.0
    mu: float = 0.1
    gamma0: float = 0.5
    gamma1: float = 0.5
    level: float = 0.05
    k_min: int = 2
    k_max: Optional[int] = None

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ValueError(f"lam must lie in (0, 1), got {self.lam}")
        if self.a <= 0 or self.b <= 0:
            raise ValueError(f"a and b must be positive, got a={self.a}, b={self.b}")
        if self.mu <= 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not np.isfinite(self.m):
            raise ValueError("m must be finite")
        if self.gamma0 <= 0 or self.gamma1 <= 0:
            raise ValueError("gamma0 and gamma1 must be positive")
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"level must lie in (0, 1), got {self.level}")
        if self.k_min < 1:
            raise ValueError(f"k_min must be >= 1, got {self.k_min}")
        if self.k_max is not None and self.k_max < self.k_min:
            raise ValueError(f"k_max must be >= k_min={self.k_min}, got {self.k_max}")

    def with_(self, **changes) -> "HyperParams":
        return replace(self, **changes)

    def effective_k_max(self, n: int) -> int:
        k_max = n if self.k_max is None else min(n, self.k_max)
        if k_max < self.k_min:
            raise ValueError(f"n={n} is too small for k_min={self.k_min}")
        return k_max


@dataclass(frozen=True)
class PosteriorDraw:
    k: int
    sigma2: float
    omega: np.ndarray


def log_prior_k(k, hp: HyperParams, k_max: int):
    """Truncated geometric log-pmf on {k_min, ..., k_max}."""
    k = np.asarray(k)
    log_norm = np.log1p(-((1.0 - hp.lam) ** (k_max - hp.k_min + 1)))
    return np.log(hp.lam) + (k - hp.k_min) * np.log1p(-hp.lam) - log_norm


def _check_k(data: Dataset, k: int) -> None:
    if not 1 <= k <= data.n:
        raise ValueError(f"k must lie in [1, n={data.n}], got {k}")


def b_tilde_from_stats(stats: BinStats, hp: HyperParams) -> float:
    shrink = stats.counts * hp.mu / (stats.counts + hp.mu)
    return hp.b + 0.5 * float(np.sum(stats.sse + shrink * (stats.means - hp.m) ** 2))


def b_tilde(data: Dataset, k: int, hp: HyperParams) -> float:
    """Posterior rate of sigma^2 given k."""
    _check_k(data, k)
    return b_tilde_from_stats(bin_stats(data, k, hp.m), hp)


def _log_post_from_stats(stats: BinStats, bt: float, n: int, hp: HyperParams, k_max: int) -> float:
    k = stats.k
    return float(
        log_prior_k(k, hp, k_max)
        - (hp.a + 0.5 * n) * np.log(bt)
        + 0.5 * k * np.log(hp.mu)
        - 0.5 * np.sum(np.log(stats.counts + hp.mu))
    )


def log_posterior_k_unnorm(data: Dataset, k: int, hp: HyperParams) -> float:
    k_max = hp.effective_k_max(data.n)
    if not hp.k_min <= k <= k_max:
        raise ValueError(f"k must lie in [{hp.k_min}, {k_max}], got {k}")
    stats = bin_stats(data, k, hp.m)
    return _log_post_from_stats(stats, b_tilde_from_stats(stats, hp), data.n, hp, k_max)


def posterior_k_table(data: Dataset, hp: HyperParams) -> np.ndarray:
    """Exact posterior of k over 1..k_max (entry i is P(k = i + 1 | y)).

    Entries below ``hp.k_min`` are zero.
    """
    k_max = hp.effective_k_max(data.n)
    logp = np.array([log_posterior_k_unnorm(data, k, hp) for k in range(hp.k_min, k_max + 1)])
    table = np.zeros(k_max)
    table[hp.k_min - 1:] = np.exp(logp - logsumexp(logp))
    return table


class KPosterior:
    """Memoised per-k posterior quantities for one dataset.

    A chain only visits a handful of k values, so bin statistics are computed
    on first use and cached.
    """

    def __init__(self, data: Dataset, hp: HyperParams):
        self.data = data
        self.hp = hp
        self.n = data.n
        self.k_min = hp.k_min
        self.k_max = hp.effective_k_max(data.n)
        self.shape = hp.a + 0.5 * data.n
        self._cache: dict[int, tuple[BinStats, float, float]] = {}

    def _entry(self, k: int):
        try:
            return self._cache[k]
        except KeyError:
            pass
        if not self.k_min <= k <= self.k_max:
            raise ValueError(f"k must lie in [{self.k_min}, {self.k_max}], got {k}")
        stats = bin_stats(self.data, k, self.hp.m)
        bt = b_tilde_from_stats(stats, self.hp)
        entry = (stats, bt, _log_post_from_stats(stats, bt, self.n, self.hp, self.k_max))
        self._cache[k] = entry
        return entry

    def stats(self, k: int) -> BinStats:
        return self._entry(k)[0]

    def b_tilde(self, k: int) -> float:
        return self._entry(k)[1]

    def logp(self, k: int) -> float:
        return self._entry(k)[2]

    def omega_moments(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean of omega and the per-bin divisor n_j + mu of sigma^2."""
        stats = self.stats(k)
        prec = stats.counts + self.hp.mu
        mean = (self.hp.m * self.hp.mu + stats.counts * stats.means) / prec
        return mean, prec


def sample_sigma2_given_k(data: Dataset, k: int, hp: HyperParams, rng, size=None):
    """Draw sigma^2 ~ InvGamma(a + n/2, b_tilde_k)."""
    bt = b_tilde(data, k, hp)
    return bt / rng.standard_gamma(hp.a + 0.5 * data.n, size=size)


def sample_omega_given_k_sigma(data: Dataset, k: int, sigma2: float, hp: HyperParams, rng) -> np.ndarray:
    """Independent Gaussian draws of the k levels given sigma^2."""
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    _check_k(data, k)
    stats = bin_stats(data, k, hp.m)
    prec = stats.counts + hp.mu
    mean = (hp.m * hp.mu + stats.counts * stats.means) / prec
    return mean + np.sqrt(sigma2 / prec) * rng.standard_normal(k)


def sigma_posterior_mean_given_k(data: Dataset, k: int, hp: HyperParams) -> float:
    """E[sigma | k, y] = sqrt(b_tilde) * Gamma(s - 1/2) / Gamma(s), s = a + n/2."""
    shape = hp.a + 0.5 * data.n
    if shape <= 0.5:
        raise ValueError(f"posterior shape a + n/2 = {shape} must exceed 1/2")
    return float(np.sqrt(b_tilde(data, k, hp)) * np.exp(gammaln(shape - 0.5) - gammaln(shape)))
