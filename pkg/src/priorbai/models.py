"""Generative bandit models: priors, instance sampling, reward sampling.

Three Gaussian families share one interface:

* independent arms: theta_i ~ N(mu0_i, sigma0_i^2)
* linear: theta ~ N(mu0, Sigma0), arm i pays theta^T x_i
* mixed effects: mu ~ N(nu, Sigma), theta_i ~ N(b_i^T mu, sigma0_i^2)

Rewards are N(theta_arm, sigma^2) in every family.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArmOutOfRange, DimMismatch, NotPositiveDefinite, RankDeficient
from .linalg import RngStream, cholesky, sample_mvn


def _vec(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DimMismatch(f"{name} must be 1-d, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class MabPrior:
    k: int
    mu0: np.ndarray
    sigma0: np.ndarray
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "mu0", _vec(self.mu0, "mu0"))
        object.__setattr__(self, "sigma0", _vec(self.sigma0, "sigma0"))
        if self.k < 1 or self.mu0.shape != (self.k,) or self.sigma0.shape != (self.k,):
            raise DimMismatch(f"k={self.k} inconsistent with mu0/sigma0 shapes")
        if np.any(self.sigma0 <= 0) or self.sigma <= 0:
            raise NotPositiveDefinite("sigma0 and sigma must be positive")


@dataclass(frozen=True)
class LinearPrior:
    d: int
    k: int
    mu0: np.ndarray
    Sigma0: np.ndarray
    arms: np.ndarray  # (k, d), row i = x_i
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "mu0", _vec(self.mu0, "mu0"))
        object.__setattr__(self, "Sigma0", np.asarray(self.Sigma0, dtype=np.float64))
        object.__setattr__(self, "arms", np.asarray(self.arms, dtype=np.float64))
        if self.mu0.shape != (self.d,) or self.Sigma0.shape != (self.d, self.d):
            raise DimMismatch("mu0/Sigma0 shapes inconsistent with d")
        if self.arms.shape != (self.k, self.d):
            raise DimMismatch(f"arms must be ({self.k}, {self.d})")
        if self.sigma <= 0:
            raise NotPositiveDefinite("sigma must be positive")
        cholesky(self.Sigma0)
        for i in range(self.k):
            for j in range(i + 1, self.k):
                if np.array_equal(self.arms[i], self.arms[j]):
                    raise DimMismatch(f"arms {i} and {j} coincide")


@dataclass(frozen=True)
class HierPrior:
    l: int
    k: int
    nu: np.ndarray
    Sigma: np.ndarray
    b: np.ndarray  # (k, l), row i = mixing weights of arm i
    sigma0: np.ndarray
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "nu", _vec(self.nu, "nu"))
        object.__setattr__(self, "Sigma", np.asarray(self.Sigma, dtype=np.float64))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=np.float64))
        object.__setattr__(self, "sigma0", _vec(self.sigma0, "sigma0"))
        if self.l < 1 or self.k < 1:
            raise DimMismatch("l and k must be >= 1")
        if self.nu.shape != (self.l,) or self.Sigma.shape != (self.l, self.l):
            raise DimMismatch("nu/Sigma shapes inconsistent with l")
        if self.b.shape != (self.k, self.l) or self.sigma0.shape != (self.k,):
            raise DimMismatch("b/sigma0 shapes inconsistent with k")
        if np.any(self.sigma0 <= 0) or self.sigma <= 0:
            raise NotPositiveDefinite("sigma0 and sigma must be positive")


Prior = MabPrior | LinearPrior | HierPrior


@dataclass(frozen=True)
class Instance:
    """A realized environment: per-arm mean rewards plus the latent effect
    vector for mixed-effect draws."""

    theta: np.ndarray
    mu: np.ndarray | None = None
    best_arm: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "theta", _vec(self.theta, "theta"))
        # argmax with lowest-index tie-break (np.argmax returns first max)
        object.__setattr__(self, "best_arm", int(np.argmax(self.theta)))


def sample_instance(prior: Prior, rng: RngStream | np.random.Generator) -> Instance:
    """Draw one environment from the prior.

    Draw order per family (fixed for reproducibility):
    independent arms: k standard normals; linear: d; mixed effects: l then k.
    """
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    if isinstance(prior, MabPrior):
        theta = prior.mu0 + prior.sigma0 * gen.standard_normal(prior.k)
        return Instance(theta=theta)
    if isinstance(prior, LinearPrior):
        theta_vec = sample_mvn(prior.mu0, prior.Sigma0, gen)
        return Instance(theta=prior.arms @ theta_vec, mu=theta_vec)
    if isinstance(prior, HierPrior):
        mu = sample_mvn(prior.nu, prior.Sigma, gen)
        theta = prior.b @ mu + prior.sigma0 * gen.standard_normal(prior.k)
        return Instance(theta=theta, mu=mu)
    raise TypeError(f"unsupported prior type {type(prior)!r}")


def sample_reward(prior: Prior, instance: Instance, arm: int,
                  rng: RngStream | np.random.Generator) -> float:
    """One N(theta_arm, sigma^2) draw."""
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    if not 0 <= arm < instance.theta.shape[0]:
        raise ArmOutOfRange(f"arm {arm} outside [0, {instance.theta.shape[0]})")
    return float(instance.theta[arm] + prior.sigma * gen.standard_normal())


def hier_to_linear(prior: HierPrior) -> LinearPrior:
    """Rewrite a mixed-effect prior as an (l+k)-dimensional linear prior.

    Augmented mean (nu, 0, ..., 0); covariance blockdiag(Sigma, diag(sigma0^2));
    arm vectors (b_i, e_i). The marginal law of each arm's mean reward is
    preserved, so both parameterizations induce identical posteriors.
    """
    dim = prior.l + prior.k
    mu0 = np.concatenate([prior.nu, np.zeros(prior.k)])
    Sigma0 = np.zeros((dim, dim))
    Sigma0[: prior.l, : prior.l] = prior.Sigma
    Sigma0[prior.l :, prior.l :] = np.diag(prior.sigma0 ** 2)
    arms = np.hstack([prior.b, np.eye(prior.k)])
    return LinearPrior(d=dim, k=prior.k, mu0=mu0, Sigma0=Sigma0, arms=arms,
                       sigma=prior.sigma)


def mab_as_linear(prior: MabPrior) -> LinearPrior:
    """Canonical embedding x_i = e_i, Sigma0 = diag(sigma0^2)."""
    return LinearPrior(d=prior.k, k=prior.k, mu0=prior.mu0,
                       Sigma0=np.diag(prior.sigma0 ** 2),
                       arms=np.eye(prior.k), sigma=prior.sigma)
