"""Exact conjugate posteriors for all three Gaussian families.

Histories enter only through per-arm sufficient statistics (pull counts and
reward sums); every posterior below is a closed-form function of those.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch
from .linalg import spd_inverse
from .models import HierPrior, LinearPrior, MabPrior


@dataclass(frozen=True)
class History:
    """Per-arm sufficient statistics (n_i, B_i)."""

    k: int
    counts: np.ndarray
    reward_sums: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.float64)
        sums = np.asarray(self.reward_sums, dtype=np.float64)
        if counts.shape != (self.k,) or sums.shape != (self.k,):
            raise DimMismatch(f"counts/reward_sums must have shape ({self.k},)")
        if np.any(counts < 0):
            raise DimMismatch("counts must be nonnegative")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "reward_sums", sums)

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    @staticmethod
    def empty(k: int) -> "History":
        return History(k=k, counts=np.zeros(k), reward_sums=np.zeros(k))


@dataclass(frozen=True)
class MabPosterior:
    means: np.ndarray
    variances: np.ndarray


@dataclass(frozen=True)
class LinearPosterior:
    mean: np.ndarray
    cov: np.ndarray


@dataclass(frozen=True)
class HierPosterior:
    effect_mean: np.ndarray
    effect_cov: np.ndarray
    cond_variances: np.ndarray
    marg_means: np.ndarray
    marg_variances: np.ndarray


def mab_posterior(prior: MabPrior, hist: History) -> MabPosterior:
    """Per-arm Gaussian update:
    1/var_i = 1/sigma0_i^2 + n_i/sigma^2, mean_i = var_i*(mu0_i/sigma0_i^2 + B_i/sigma^2).
    """
    if hist.k != prior.k:
        raise DimMismatch(f"history k={hist.k} vs prior k={prior.k}")
    prec = 1.0 / prior.sigma0 ** 2 + hist.counts / prior.sigma ** 2
    variances = 1.0 / prec
    means = variances * (prior.mu0 / prior.sigma0 ** 2 + hist.reward_sums / prior.sigma ** 2)
    return MabPosterior(means=means, variances=variances)


def linear_posterior(prior: LinearPrior, hist: History) -> LinearPosterior:
    """Gaussian update of the parameter vector from per-arm statistics."""
    if hist.k != prior.k:
        raise DimMismatch(f"history k={hist.k} vs prior k={prior.k}")
    prior_prec = spd_inverse(prior.Sigma0)
    x = prior.arms
    prec = prior_prec + (x.T * (hist.counts / prior.sigma ** 2)) @ x
    cov = spd_inverse(prec)
    mean = cov @ (prior_prec @ prior.mu0 + (hist.reward_sums / prior.sigma ** 2) @ x)
    return LinearPosterior(mean=mean, cov=cov)


def hier_posterior(prior: HierPrior, hist: History) -> HierPosterior:
    """Three-stage update: effect posterior, per-arm conditional, per-arm marginal.

    With g_i = n_i/(n_i*sigma0_i^2 + sigma^2):
      effect_prec  = Sigma^-1 + sum_i g_i b_i b_i^T
      effect_mean  = effect_cov (Sigma^-1 nu + sum_i B_i b_i/(n_i sigma0_i^2 + sigma^2))
      1/cond_var_i = 1/sigma0_i^2 + n_i/sigma^2
      marg_mean_i  = cond_var_i (b_i^T effect_mean / sigma0_i^2 + B_i/sigma^2)
      marg_var_i   = cond_var_i + (cond_var_i^2/sigma0_i^4) b_i^T effect_cov b_i
    """
    if hist.k != prior.k:
        raise DimMismatch(f"history k={hist.k} vs prior k={prior.k}")
    n_i, b_sum = hist.counts, hist.reward_sums
    s2 = prior.sigma ** 2
    s0_2 = prior.sigma0 ** 2
    denom = n_i * s0_2 + s2
    sigma_prec = spd_inverse(prior.Sigma)
    effect_prec = sigma_prec + (prior.b.T * (n_i / denom)) @ prior.b
    effect_cov = spd_inverse(effect_prec)
    effect_mean = effect_cov @ (sigma_prec @ prior.nu + (b_sum / denom) @ prior.b)
    cond_variances = 1.0 / (1.0 / s0_2 + n_i / s2)
    marg_means = cond_variances * (prior.b @ effect_mean / s0_2 + b_sum / s2)
    quad = np.einsum("kl,lm,km->k", prior.b, effect_cov, prior.b)
    marg_variances = cond_variances + (cond_variances ** 2 / s0_2 ** 2) * quad
    return HierPosterior(effect_mean=effect_mean, effect_cov=effect_cov,
                         cond_variances=cond_variances, marg_means=marg_means,
                         marg_variances=marg_variances)


def posterior_mean_rewards(posterior, arms: np.ndarray | None = None) -> np.ndarray:
    """Per-arm posterior mean rewards for any posterior type."""
    if isinstance(posterior, MabPosterior):
        return posterior.means
    if isinstance(posterior, HierPosterior):
        return posterior.marg_means
    if isinstance(posterior, LinearPosterior):
        if arms is None:
            raise DimMismatch("linear posterior needs the arm matrix to score arms")
        return np.asarray(arms) @ posterior.mean
    raise TypeError(f"unsupported posterior type {type(posterior)!r}")


def decide(posterior, arms: np.ndarray | None = None) -> int:
    """Recommend the arm with highest posterior mean reward (lowest index wins ties)."""
    return int(np.argmax(posterior_mean_rewards(posterior, arms)))
