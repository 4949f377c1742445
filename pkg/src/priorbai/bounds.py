"""Closed-form probability-of-error guarantees for fixed allocations.

Every bound sums positive terms over ordered arm pairs (i, j), i != j; each
term is a Gaussian tail factor driven by the prior gap times a shrinkage
factor driven by how much the allocation reduces the pair's posterior
uncertainty. Bounds are evaluated at real-valued counts omega_i * n (no
flooring) so they stay smooth for the allocation optimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimMismatch, HeterogeneousVariance
from .linalg import check_simplex, spd_inverse
from .models import HierPrior, LinearPrior, MabPrior


@dataclass(frozen=True)
class BoundReport:
    total: float
    pair_terms: dict
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class MisspecifiedPrior:
    """Assumed prior N(mu0_tilde_i, sigma0_tilde^2) with a single shared variance."""

    mu0_tilde: np.ndarray
    sigma0_tilde: float

    def __post_init__(self):
        object.__setattr__(self, "mu0_tilde", np.asarray(self.mu0_tilde, dtype=np.float64))
        if self.sigma0_tilde <= 0:
            raise DimMismatch("sigma0_tilde must be positive")


def mab_phi(prior: MabPrior, omega: np.ndarray, n: float, i: int, j: int) -> float:
    """Pair shrinkage rate phi_ij for independent arms.

    Written with numerator and denominator both scaled by n so that n = 0 is
    handled exactly (the unscaled form divides by sigma^2/n).
    """
    s2 = prior.sigma ** 2
    v_i, v_j = prior.sigma0[i] ** 2, prior.sigma0[j] ** 2
    w_i, w_j = omega[i], omega[j]
    a_j = s2 + n * w_j * v_j
    a_i = s2 + n * w_i * v_i
    num = v_i ** 2 * w_i * a_j + v_j ** 2 * w_j * a_i
    den = s2 * v_i * a_j + s2 * v_j * a_i
    return num / den


def phi_limit(prior: MabPrior, omega: np.ndarray, i: int = 0, j: int = 1) -> float:
    """n -> infinity limit of phi_ij when sigma0_i = sigma0_j."""
    if abs(prior.sigma0[i] - prior.sigma0[j]) > 1e-12:
        raise HeterogeneousVariance("phi_limit requires equal pair variances")
    w_i, w_j = omega[i], omega[j]
    if w_i + w_j == 0:
        return 0.0
    return (2.0 * prior.sigma0[i] ** 2 / prior.sigma ** 2) * w_i * w_j / (w_i + w_j)


def bound_mab(prior: MabPrior, omega: np.ndarray, n: float) -> BoundReport:
    """Pair term: exp(-gap^2 / (2(v_i+v_j))) / sqrt(1 + n*phi_ij)."""
    omega = check_simplex(omega, prior.k)
    pair_terms = {}
    total = 0.0
    for i in range(prior.k):
        for j in range(prior.k):
            if i == j:
                continue
            gap = prior.mu0[i] - prior.mu0[j]
            v_sum = prior.sigma0[i] ** 2 + prior.sigma0[j] ** 2
            phi = mab_phi(prior, omega, n, i, j)
            exp_term = math.exp(-gap ** 2 / (2.0 * v_sum))
            denom = math.sqrt(1.0 + n * phi)
            pair_terms[(i, j)] = {
                "exp_term": exp_term, "sqrt_denominator": denom, "phi_ij": phi,
            }
            total += exp_term / denom
    return BoundReport(total=total, pair_terms=pair_terms,
                       meta={"model": "mab", "n": n, "omega": omega.copy()})


def linear_posterior_cov(prior: LinearPrior, counts: np.ndarray) -> np.ndarray:
    """Deterministic posterior covariance at (possibly real-valued) counts."""
    prec = spd_inverse(prior.Sigma0)
    prec = prec + (prior.arms.T * (counts / prior.sigma ** 2)) @ prior.arms
    return spd_inverse(prec)


def linear_mean_cov(prior: LinearPrior, counts: np.ndarray) -> np.ndarray:
    """Covariance (over histories) of the posterior mean at counts omega_i*n.

    Cov(B)_{ij} = n^2 w_i w_j x_i^T Sigma0 x_j + 1{i=j} n w_i sigma^2; the
    posterior mean is linear in B, so Cov(mean) = post_cov X^T Cov(B) X post_cov / sigma^4.
    The diagonal includes the same-arm cross-pull covariance n^2 w_i^2 x_i^T Sigma0 x_i,
    which is what makes post_cov + Cov(mean) = Sigma0 exact.
    """
    x = prior.arms
    gram = x @ prior.Sigma0 @ x.T
    cov_b = np.outer(counts, counts) * gram + np.diag(counts * prior.sigma ** 2)
    post_cov = linear_posterior_cov(prior, counts)
    inner = x.T @ cov_b @ x
    return post_cov @ inner @ post_cov / prior.sigma ** 4


def bound_linear(prior: LinearPrior, omega: np.ndarray, n: float) -> BoundReport:
    """Pair term: exp(-gap^2/(2||x_i-x_j||^2_Sigma0)) / sqrt(1 + c_ij/||x_i-x_j||^2_postcov)."""
    omega = check_simplex(omega, prior.k)
    post_cov = linear_posterior_cov(prior, omega * n)
    mean_cov = linear_mean_cov(prior, omega * n)
    mean_rewards = prior.arms @ prior.mu0
    pair_terms = {}
    total = 0.0
    for i in range(prior.k):
        for j in range(prior.k):
            if i == j:
                continue
            diff = prior.arms[i] - prior.arms[j]
            gap = mean_rewards[i] - mean_rewards[j]
            prior_var = float(diff @ prior.Sigma0 @ diff)
            post_var = float(diff @ post_cov @ diff)
            c_ij = float(diff @ mean_cov @ diff)
            exp_term = math.exp(-gap ** 2 / (2.0 * prior_var))
            denom = math.sqrt(1.0 + c_ij / post_var)
            pair_terms[(i, j)] = {
                "exp_term": exp_term, "sqrt_denominator": denom, "c_ij": c_ij,
            }
            total += exp_term / denom
    return BoundReport(total=total, pair_terms=pair_terms,
                       meta={"model": "linear", "n": n, "omega": omega.copy()})


def bound_linear_gopt(prior: LinearPrior, n: float) -> BoundReport:
    """Evaluate bound_linear at the log-det-optimal design.

    Requires diagonal Sigma0. Also reports, per pair, the simplified
    denominator sqrt(1 + n*c_ij/(2*d*sigma^2)) implied by the design
    certificate max_i ||x_i||^2_{V_n^-1} <= d. Since ||x_i - x_j||^2 can reach
    4x the per-arm maximum, the simplified value may exceed the exact
    denominator by up to sqrt(2); the returned total always uses the exact one.
    """
    if np.any(np.abs(prior.Sigma0 - np.diag(np.diag(prior.Sigma0))) > 1e-12):
        raise DimMismatch("design-optimal bound requires diagonal Sigma0")
    from .alloc import g_opt_alloc

    plan = g_opt_alloc(prior, n)
    report = bound_linear(prior, plan.weights, n)
    pair_terms = {}
    for (i, j), term in report.pair_terms.items():
        simplified = math.sqrt(1.0 + n * term["c_ij"] / (2.0 * prior.d * prior.sigma ** 2))
        pair_terms[(i, j)] = {**term, "simplified_denominator": simplified}
    meta = {**report.meta, "gopt_diagnostics": plan.diagnostics}
    return BoundReport(total=report.total, pair_terms=pair_terms, meta=meta)


def hier_marginal_variances(prior: HierPrior, counts: np.ndarray):
    """Deterministic (effect_cov, cond_variances, marg_variances) at given counts."""
    s2 = prior.sigma ** 2
    s0_2 = prior.sigma0 ** 2
    denom = counts * s0_2 + s2
    effect_prec = spd_inverse(prior.Sigma) + (prior.b.T * (counts / denom)) @ prior.b
    effect_cov = spd_inverse(effect_prec)
    cond_var = 1.0 / (1.0 / s0_2 + counts / s2)
    quad = np.einsum("kl,lm,km->k", prior.b, effect_cov, prior.b)
    marg_var = cond_var + (cond_var ** 2 / s0_2 ** 2) * quad
    return effect_cov, cond_var, marg_var


def hier_mean_load(prior: HierPrior, counts: np.ndarray) -> np.ndarray:
    """Matrix L with marg_mean_i = const_i + sum_k L[i,k] * B_k at given counts."""
    s2 = prior.sigma ** 2
    s0_2 = prior.sigma0 ** 2
    denom = counts * s0_2 + s2
    effect_cov, cond_var, _ = hier_marginal_variances(prior, counts)
    # effect_mean contributes (b_i/s0_2)^T effect_cov b_k / denom_k per unit of B_k;
    # the conditional term adds B_i/s2 directly.
    load = (cond_var[:, None] / s0_2[:, None]) * (prior.b @ effect_cov @ prior.b.T) / denom[None, :]
    load += np.diag(cond_var / s2)
    return load


def hier_reward_sum_cov(prior: HierPrior, counts: np.ndarray) -> np.ndarray:
    """Covariance over histories of the per-arm reward sums at given counts."""
    gram = prior.b @ prior.Sigma @ prior.b.T
    cov = np.outer(counts, counts) * gram
    cov += np.diag(counts * prior.sigma ** 2 + counts ** 2 * prior.sigma0 ** 2)
    return cov


def bound_hier(prior: HierPrior, omega: np.ndarray, n: float) -> BoundReport:
    """Pair term: exp(-gap^2/(2(||b_i-b_j||^2_Sigma + v_i + v_j))) / sqrt(1 + c_ij/(mv_i+mv_j)).

    The denominator uses marginal posterior *variances*; c_ij is the variance
    over histories of the difference of marginal posterior means, computed
    from the linear-in-B load matrix.
    """
    omega = check_simplex(omega, prior.k)
    counts = omega * n
    _, _, marg_var = hier_marginal_variances(prior, counts)
    load = hier_mean_load(prior, counts)
    cov_b = hier_reward_sum_cov(prior, counts)
    mean_rewards = prior.b @ prior.nu
    gram = prior.b @ prior.Sigma @ prior.b.T
    pair_terms = {}
    total = 0.0
    for i in range(prior.k):
        for j in range(prior.k):
            if i == j:
                continue
            gap = mean_rewards[i] - mean_rewards[j]
            prior_var = (gram[i, i] - 2 * gram[i, j] + gram[j, j]
                         + prior.sigma0[i] ** 2 + prior.sigma0[j] ** 2)
            diff_load = load[i] - load[j]
            c_ij = float(diff_load @ cov_b @ diff_load)
            exp_term = math.exp(-gap ** 2 / (2.0 * prior_var))
            denom = math.sqrt(1.0 + c_ij / (marg_var[i] + marg_var[j]))
            pair_terms[(i, j)] = {
                "exp_term": exp_term, "sqrt_denominator": denom, "c_ij": c_ij,
            }
            total += exp_term / denom
    return BoundReport(total=total, pair_terms=pair_terms,
                       meta={"model": "hier", "n": n, "omega": omega.copy()})


def bound_mab_misspecified(true_prior: MabPrior, assumed: MisspecifiedPrior,
                           n: float) -> BoundReport:
    """Uniform-allocation bound when inference uses a wrong prior.

    Requires homogeneous true variances. Each pair term is the well-specified
    uniform term times d_n = exp(KL_ij / (1 + n*v0/(K*sigma^2))) where
    KL_ij = (v0/vt^2) * ((vt/v0)*true_gap - assumed_gap)^2, vt = sigma0_tilde^2.
    """
    s0 = true_prior.sigma0
    if np.max(s0) - np.min(s0) > 1e-12:
        raise HeterogeneousVariance("misspecified bound requires equal sigma0")
    if assumed.mu0_tilde.shape != (true_prior.k,):
        raise DimMismatch("assumed means must match arm count")
    v0 = float(s0[0]) ** 2
    vt = assumed.sigma0_tilde ** 2
    s2 = true_prior.sigma ** 2
    k = true_prior.k
    shrink = 1.0 + n * v0 / (k * s2)
    pair_terms = {}
    total = 0.0
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            gap = true_prior.mu0[i] - true_prior.mu0[j]
            gap_t = assumed.mu0_tilde[i] - assumed.mu0_tilde[j]
            kl = (v0 / vt ** 2) * ((vt / v0) * gap - gap_t) ** 2
            d_n = math.exp(kl / shrink)
            exp_term = math.exp(-gap ** 2 / (4.0 * v0))
            denom = math.sqrt(shrink)
            pair_terms[(i, j)] = {
                "exp_term": exp_term, "sqrt_denominator": denom, "d_n": d_n, "kl": kl,
            }
            total += exp_term * d_n / denom
    return BoundReport(total=total, pair_terms=pair_terms,
                       meta={"model": "mab_misspecified", "n": n})


def two_arm_lower_bound(prior: MabPrior, n: float) -> float:
    """PoE lower bound for two arms with equal prior variances (natural log)."""
    if prior.k != 2:
        raise DimMismatch("lower bound is stated for exactly two arms")
    if abs(prior.sigma0[0] - prior.sigma0[1]) > 1e-12:
        raise HeterogeneousVariance("lower bound requires equal sigma0")
    if n < 1:
        raise DimMismatch("lower bound requires n >= 1")
    v0 = prior.sigma0[0] ** 2
    gap = prior.mu0[0] - prior.mu0[1]
    root = math.sqrt(1.0 + 2.0 * n * (8.0 * math.log(2.0 * n) + 1.0) * v0 / prior.sigma ** 2)
    return math.exp(-gap ** 2 / (4.0 * v0)) / (2.0 * math.e * root)
