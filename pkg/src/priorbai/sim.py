"""Monte-Carlo harness for probability-of-error and simple-regret estimates.

Reproducibility contract: trial t of an experiment draws everything it needs
from the dedicated stream ``RngStream(master_seed, t)`` in a fixed order:

1. prior-mean uniforms (length k), only when ``resample_prior_means`` is set;
2. instance normals (independent arms: k; contextual: d; mixed effects: l
   then k; logistic: d);
3. the algorithm block — fixed allocations: k reward normals; sequential
   halving: a (rounds, k) block; successive rejects: a (k-1, k) block;
   warm-up sampling: per round one posterior draw then one reward normal,
   followed by k reward normals; logistic: one binomial per arm in index
   order.

Reward batches enter through their sufficient statistic (one normal per
per-arm batch scaled to the batch sum), so a trial is a pure function of its
stream and results are invariant to thread count and execution order.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .alloc import (AllocationPlan, OptimizerConfig, g_opt_alloc, heuristic_alloc,
                    largest_remainder, mixture_alloc, opt_alloc, random_alloc,
                    uniform_alloc, warmup_ts_alloc)
from .bounds import bound_hier, bound_linear, bound_mab
from .errors import ConfigError
from .glm import LogisticModel, glm_decide, sigmoid
from .linalg import MVN_JITTER, RngStream, cholesky, spd_inverse
from .models import (HierPrior, Instance, LinearPrior, MabPrior, Prior,
                     sample_instance)
from .posterior import (History, decide, hier_posterior, linear_posterior,
                        mab_posterior)

ALGORITHMS = ("pibai", "sh", "sr")
ALLOCATIONS = ("uniform", "random", "opt", "g-opt", "mixture", "heuristic",
               "fixed", "warmup_ts")

CSV_HEADER = ("setting,model,algorithm,allocation,budget,trials,poe_mean,"
              "poe_stderr,sr_mean,sr_stderr,bound_total,seed,diagnostics")


def model_family(model) -> str:
    if isinstance(model, MabPrior):
        return "mab"
    if isinstance(model, LinearPrior):
        return "linear"
    if isinstance(model, HierPrior):
        return "hier"
    if isinstance(model, LogisticModel):
        return "logistic"
    raise ConfigError(f"unsupported model type {type(model)!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    setting: str
    model: Prior | LogisticModel
    algorithm: str
    budgets: tuple
    trials: int
    master_seed: int
    allocation: str = "uniform"
    weights: np.ndarray | None = None  # allocation == "fixed"
    alpha: float = 0.5                 # mixture only
    n_w: int | None = None             # warm-up rounds
    resample_prior_means: bool = False
    opt: OptimizerConfig = field(default_factory=OptimizerConfig)
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "budgets", tuple(int(b) for b in self.budgets))
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if any(b < 0 for b in self.budgets):
            raise ConfigError("budgets must be nonnegative")
        if list(self.budgets) != sorted(self.budgets):
            raise ConfigError("budgets must be sorted ascending")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}")
        if self.algorithm == "pibai" and self.allocation not in ALLOCATIONS:
            raise ConfigError(f"allocation must be one of {ALLOCATIONS}")
        if self.allocation == "fixed":
            if self.weights is None:
                raise ConfigError("allocation 'fixed' requires explicit weights")
            object.__setattr__(self, "weights",
                               np.asarray(self.weights, dtype=np.float64))
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        fam = model_family(self.model)
        if self.resample_prior_means and fam != "mab":
            raise ConfigError("prior-mean resampling is defined for the "
                              "independent-arm model only")
        if fam == "logistic" and (self.algorithm != "pibai"
                                  or self.allocation in ("opt", "mixture",
                                                         "heuristic", "warmup_ts")):
            raise ConfigError("logistic models support fixed design "
                              "allocations (uniform, random, g-opt, fixed) only")

    def describe(self) -> dict:
        m = self.model
        fam = model_family(m)
        desc = {"family": fam}
        for name in ("k", "d", "l"):
            if hasattr(m, name):
                desc[name] = int(getattr(m, name))
        for name in ("mu0", "sigma0", "nu", "b", "arms", "Sigma0", "Sigma"):
            if hasattr(m, name):
                desc[name] = np.asarray(getattr(m, name)).tolist()
        if hasattr(m, "sigma"):
            desc["sigma"] = float(m.sigma)
        return {
            "setting": self.setting,
            "model": desc,
            "algorithm": self.algorithm,
            "allocation": self.allocation if self.algorithm == "pibai" else "",
            "weights": None if self.weights is None else self.weights.tolist(),
            "alpha": self.alpha,
            "n_w": self.n_w,
            "resample_prior_means": self.resample_prior_means,
            "budgets": list(self.budgets),
            "trials": self.trials,
            "master_seed": self.master_seed,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.describe(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


@dataclass(frozen=True)
class SimResult:
    config: ExperimentConfig
    rows: list  # one dict per budget
    config_hash: str


# ---------------------------------------------------------------------------
# allocation plumbing


def _bound_fn(model, n):
    if isinstance(model, MabPrior):
        return lambda w: bound_mab(model, w, n).total
    if isinstance(model, LinearPrior):
        return lambda w: bound_linear(model, w, n).total
    if isinstance(model, HierPrior):
        return lambda w: bound_hier(model, w, n).total
    raise ConfigError("no evaluable bound for this model family")


def _design_prior(model):
    """Gaussian design used for G-optimal allocation (logistic reuses it with sigma=1)."""
    if isinstance(model, LogisticModel):
        return LinearPrior(d=model.d, k=model.k, mu0=model.mu0,
                           Sigma0=model.Sigma0, arms=model.arms, sigma=1.0)
    return model


def fixed_plan(config: ExperimentConfig, budget: int) -> AllocationPlan:
    """The instance-independent allocation, computed once per (config, budget)."""
    model, k = config.model, config.model.k
    alloc = config.allocation
    if alloc == "uniform":
        return uniform_alloc(k, budget)
    if alloc == "fixed":
        w = config.weights
        return AllocationPlan(weights=w, per_arm_budget=largest_remainder(w, budget),
                              strategy_tag="fixed", diagnostics={})
    if alloc == "random":
        return random_alloc(k, budget, RngStream(config.master_seed).substream(budget))
    if alloc == "heuristic":
        return heuristic_alloc(model, budget)
    if alloc == "opt":
        return opt_alloc(model, budget, _bound_fn(model, budget), config.opt)
    if alloc == "mixture":
        return mixture_alloc(model, budget, config.alpha, config.opt)
    if alloc == "g-opt":
        return g_opt_alloc(_design_prior(model), budget)
    raise ConfigError(f"allocation {alloc!r} has no fixed plan")


def bound_for_plan(config: ExperimentConfig, plan: AllocationPlan,
                   budget: int) -> float | None:
    """Bound total at the integerized weights actually simulated."""
    if config.algorithm != "pibai" or config.resample_prior_means or budget == 0:
        return None
    model = config.model
    if isinstance(model, LogisticModel):
        return None
    omega = plan.per_arm_budget / budget
    return _bound_fn(model, budget)(omega)


# ---------------------------------------------------------------------------
# reference trial (the documented semantics; batch paths replay the same draws)


def _posterior(model, hist: History):
    if isinstance(model, MabPrior):
        return mab_posterior(model, hist)
    if isinstance(model, LinearPrior):
        return linear_posterior(model, hist)
    return hier_posterior(model, hist)


def _fixed_outcome(model, instance: Instance, counts: np.ndarray, gen) -> tuple:
    sig = model.sigma
    z_b = gen.standard_normal(model.k)
    sums = counts * instance.theta + sig * np.sqrt(counts) * z_b
    hist = History(k=model.k, counts=counts.astype(np.float64), reward_sums=sums)
    arms = model.arms if isinstance(model, LinearPrior) else None
    rec = decide(_posterior(model, hist), arms)
    return rec, hist


def run_trial(config: ExperimentConfig, budget: int, trial_index: int,
              plan: AllocationPlan | None = None) -> dict:
    """One trial under the documented draw order; returns {error, regret}."""
    gen = RngStream(config.master_seed, trial_index).generator()
    model = config.model

    if config.resample_prior_means:
        model = replace(model, mu0=gen.random(model.k))

    if isinstance(model, LogisticModel):
        theta_vec = model.mu0 + cholesky(
            model.Sigma0 + MVN_JITTER * np.eye(model.d)) @ gen.standard_normal(model.d)
        rewards = sigmoid(model.arms @ theta_vec)
        best = int(np.argmax(model.arms @ theta_vec))
        if plan is None:
            plan = fixed_plan(config, budget)
        obs = []
        for i, c in enumerate(plan.per_arm_budget):
            if c > 0:
                successes = int(gen.binomial(int(c), rewards[i]))
                obs += [(i, 1)] * successes + [(i, 0)] * (int(c) - successes)
        rec = glm_decide(model, obs)
        return {"error": int(rec != best),
                "regret": float(rewards[best] - rewards[rec])}

    instance = sample_instance(model, gen)
    best = instance.best_arm

    if config.algorithm == "sh":
        from .baselines import sequential_halving
        rec = sequential_halving(instance.theta, model.sigma, budget, gen).final_choice
    elif config.algorithm == "sr":
        from .baselines import successive_rejects
        rec = successive_rejects(instance.theta, model.sigma, budget, gen).final_choice
    elif config.allocation == "warmup_ts":
        trial_plan, hist = warmup_ts_alloc(model, budget, instance, gen, config.n_w)
        counts = trial_plan.per_arm_budget.astype(np.float64)
        z_b = gen.standard_normal(model.k)
        sums = counts * instance.theta + model.sigma * np.sqrt(counts) * z_b
        merged = History(k=model.k, counts=hist.counts + counts,
                         reward_sums=hist.reward_sums + sums)
        arms = model.arms if isinstance(model, LinearPrior) else None
        rec = decide(_posterior(model, merged), arms)
    else:
        if plan is None or config.resample_prior_means:
            plan = _per_trial_plan(config, model, budget)
        rec, _ = _fixed_outcome(model, instance,
                                plan.per_arm_budget.astype(np.float64), gen)

    theta = instance.theta
    return {"error": int(rec != best),
            "regret": float(theta[best] - theta[rec])}


def _per_trial_plan(config, model, budget):
    if not config.resample_prior_means:
        return fixed_plan(config, budget)
    if config.allocation == "opt":
        v0 = model.sigma0 ** 2
        w = _kernels.mab_opt_weights(model.mu0, v0, model.sigma ** 2,
                                     float(budget), config.opt.max_iters,
                                     config.opt.tol)
        return AllocationPlan(weights=w, per_arm_budget=largest_remainder(w, budget),
                              strategy_tag="opt", diagnostics={})
    if config.allocation == "heuristic":
        w = model.mu0 * model.sigma0
        w = w / w.sum()
        return AllocationPlan(weights=w, per_arm_budget=largest_remainder(w, budget),
                              strategy_tag="heuristic", diagnostics={})
    if config.allocation == "mixture":
        w = _kernels.mab_opt_weights(model.mu0, model.sigma0 ** 2,
                                     model.sigma ** 2, float(budget),
                                     config.opt.max_iters, config.opt.tol)
        if np.min(model.mu0) > 0.0:
            heur = model.mu0 * model.sigma0
            w = config.alpha * w + (1.0 - config.alpha) * heur / heur.sum()
        return AllocationPlan(weights=w, per_arm_budget=largest_remainder(w, budget),
                              strategy_tag="mixture", diagnostics={})
    # remaining strategies do not depend on the prior means
    return fixed_plan(config, budget)


# ---------------------------------------------------------------------------
# batch execution


def _chunks(trials: int, threads: int):
    size = -(-trials // threads)
    return [(lo, min(lo + size, trials)) for lo in range(0, trials, size)]


def _mab_fixed_chunk(config, model, counts, lo, hi, errors, regrets):
    k = model.k
    z_theta = np.empty((hi - lo, k))
    z_b = np.empty((hi - lo, k))
    for t in range(lo, hi):
        gen = RngStream(config.master_seed, t).generator()
        z_theta[t - lo] = gen.standard_normal(k)
        z_b[t - lo] = gen.standard_normal(k)
    _kernels.mab_fixed_trials(model.mu0, model.sigma0, model.sigma, counts,
                              z_theta, z_b, errors[lo:hi], regrets[lo:hi])


def _mab_resampled_chunk(config, model, budget, mode, fixed_w, lo, hi,
                         errors, regrets):
    k = model.k
    u = np.empty((hi - lo, k))
    z_theta = np.empty((hi - lo, k))
    z_b = np.empty((hi - lo, k))
    for t in range(lo, hi):
        gen = RngStream(config.master_seed, t).generator()
        u[t - lo] = gen.random(k)
        z_theta[t - lo] = gen.standard_normal(k)
        z_b[t - lo] = gen.standard_normal(k)
    _kernels.mab_resampled_trials(u, model.sigma0, model.sigma, budget, mode,
                                  fixed_w, config.alpha, z_theta, z_b,
                                  config.opt.max_iters, config.opt.tol,
                                  errors[lo:hi], regrets[lo:hi])


def _adaptive_chunk(config, model, budget, kind, block_rows, lo, hi,
                    errors, regrets):
    k = model.k
    thetas = np.empty((hi - lo, k))
    z = np.empty((hi - lo, block_rows, k))
    for t in range(lo, hi):
        gen = RngStream(config.master_seed, t).generator()
        m = model
        if config.resample_prior_means:
            m = replace(m, mu0=gen.random(k))
        thetas[t - lo] = sample_instance(m, gen).theta
        z[t - lo] = gen.standard_normal((block_rows, k))
    _kernels.adaptive_trials(kind, thetas, model.sigma, budget, z,
                             errors[lo:hi], regrets[lo:hi])


def _gaussian_map_chunk(config, model, counts, score_const, score_load,
                        lo, hi, errors, regrets):
    """Contextual / mixed-effects fixed-allocation trials.

    All per-trial algebra is matrix-vector, so results do not depend on how
    trials are chunked across threads.
    """
    k, sig = model.k, model.sigma
    sqrt_counts = np.sqrt(counts)
    if isinstance(model, LinearPrior):
        latent_chol = cholesky(model.Sigma0 + MVN_JITTER * np.eye(model.d))
    else:
        latent_chol = cholesky(model.Sigma + MVN_JITTER * np.eye(model.l))
    for t in range(lo, hi):
        gen = RngStream(config.master_seed, t).generator()
        if isinstance(model, LinearPrior):
            tv = model.mu0 + latent_chol @ gen.standard_normal(model.d)
            theta = model.arms @ tv
        else:
            mu = model.nu + latent_chol @ gen.standard_normal(model.l)
            theta = model.b @ mu + model.sigma0 * gen.standard_normal(k)
        z_b = gen.standard_normal(k)
        sums = counts * theta + sig * sqrt_counts * z_b
        scores = score_const + score_load @ sums
        rec = int(np.argmax(scores))
        best = int(np.argmax(theta))
        errors[t] = 0.0 if rec == best else 1.0
        regrets[t] = theta[best] - theta[rec]


def _python_chunk(config, budget, plan, lo, hi, errors, regrets):
    for t in range(lo, hi):
        out = run_trial(config, budget, t, plan)
        errors[t] = out["error"]
        regrets[t] = out["regret"]


def _score_map(model, counts: np.ndarray):
    """Affine map from per-arm reward sums to posterior mean rewards."""
    zero = History(k=model.k, counts=counts, reward_sums=np.zeros(model.k))
    if isinstance(model, LinearPrior):
        post0 = linear_posterior(model, zero)
        load = model.arms @ post0.cov @ model.arms.T / model.sigma ** 2
        const = model.arms @ (post0.cov @ (spd_inverse(model.Sigma0) @ model.mu0))
        return const, load
    from .bounds import hier_mean_load
    post0 = hier_posterior(model, zero)
    return np.asarray(post0.marg_means), hier_mean_load(model, counts)


def _dispatch_budget(config: ExperimentConfig, budget: int,
                     errors: np.ndarray, regrets: np.ndarray) -> dict:
    """Fill errors/regrets for one budget; returns row diagnostics."""
    model = config.model
    trials = config.trials
    diagnostics: dict = {}
    plan = None

    if config.algorithm in ("sh", "sr"):
        from .errors import BudgetTooSmall
        if config.algorithm == "sh":
            from .baselines import sh_rounds
            kind, rows = 0, sh_rounds(model.k)
            if budget < model.k * rows:
                raise BudgetTooSmall(
                    f"halving needs n >= k*ceil(log2 k) = {model.k * rows}, "
                    f"got {budget}")
        else:
            kind, rows = 1, model.k - 1
            if budget < model.k:
                raise BudgetTooSmall(f"rejects needs n >= k = {model.k}, "
                                     f"got {budget}")
        worker = lambda lo, hi: _adaptive_chunk(config, model, budget, kind,
                                                rows, lo, hi, errors, regrets)
    elif isinstance(model, LogisticModel) or config.allocation == "warmup_ts":
        if isinstance(model, LogisticModel):
            plan = fixed_plan(config, budget)
        worker = lambda lo, hi: _python_chunk(config, budget, plan, lo, hi,
                                              errors, regrets)
    elif config.resample_prior_means:
        mode = {"opt": 1, "heuristic": 2, "mixture": 3}.get(config.allocation, 0)
        if mode == 0:
            plan = fixed_plan(config, budget)
            fixed_w = plan.weights
        else:
            fixed_w = np.full(model.k, 1.0 / model.k)
        worker = lambda lo, hi: _mab_resampled_chunk(config, model, budget,
                                                     mode, fixed_w, lo, hi,
                                                     errors, regrets)
    else:
        plan = fixed_plan(config, budget)
        counts = plan.per_arm_budget.astype(np.float64)
        if isinstance(model, MabPrior):
            worker = lambda lo, hi: _mab_fixed_chunk(config, model, counts,
                                                     lo, hi, errors, regrets)
        else:
            const, load = _score_map(model, counts)
            worker = lambda lo, hi: _gaussian_map_chunk(config, model, counts,
                                                        const, load, lo, hi,
                                                        errors, regrets)

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            list(pool.map(lambda c: worker(*c), _chunks(trials, config.threads)))
    else:
        worker(0, trials)

    if plan is not None:
        for key in ("objective", "fw_gap", "certificate", "iterations"):
            if key in plan.diagnostics:
                diagnostics[key] = plan.diagnostics[key]
    return diagnostics, plan


def run_experiment(config: ExperimentConfig) -> SimResult:
    """Estimate PoE and simple regret over config.trials for every budget."""
    rows = []
    chash = config.config_hash()
    for budget in config.budgets:
        start = time.perf_counter()
        errors = np.empty(config.trials)
        regrets = np.empty(config.trials)
        diagnostics, plan = _dispatch_budget(config, budget, errors, regrets)
        trials = config.trials
        n_err = int(round(float(errors.sum())))
        poe = n_err / trials
        poe_stderr = math.sqrt(poe * (1.0 - poe) / trials)
        sr_mean = math.fsum(regrets) / trials
        sr_var = max(math.fsum(r * r for r in regrets) / trials - sr_mean ** 2, 0.0)
        sr_stderr = math.sqrt(sr_var / trials)
        bound = None
        if plan is not None:
            bound = bound_for_plan(config, plan, budget)
        diagnostics["hash"] = chash
        rows.append({
            "budget": budget,
            "trials": trials,
            "poe_mean": poe,
            "poe_stderr": poe_stderr,
            "sr_mean": sr_mean,
            "sr_stderr": sr_stderr,
            "bound_total": bound,
            "runtime_ms": (time.perf_counter() - start) * 1000.0,
            "diagnostics": diagnostics,
        })
    return SimResult(config=config, rows=rows, config_hash=chash)


# ---------------------------------------------------------------------------
# CSV emission


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def _fmt_diag(diag: dict) -> str:
    parts = []
    for key in sorted(diag):
        val = diag[key]
        if isinstance(val, float):
            parts.append(f"{key}={val:.6g}")
        else:
            parts.append(f"{key}={val}")
    return ";".join(parts)


def result_rows(result: SimResult) -> list:
    config = result.config
    alloc = config.allocation if config.algorithm == "pibai" else ""
    out = []
    for row in result.rows:
        fields = [config.setting, model_family(config.model), config.algorithm,
                  alloc, str(row["budget"]), str(row["trials"]),
                  _fmt(row["poe_mean"]), _fmt(row["poe_stderr"]),
                  _fmt(row["sr_mean"]), _fmt(row["sr_stderr"]),
                  _fmt(row["bound_total"]), str(config.master_seed),
                  _fmt_diag(row["diagnostics"])]
        out.append(",".join(fields))
    return out


def sweep(configs, path: str | None = None) -> list:
    """Run every config in order; returns (and optionally writes) CSV lines."""
    lines = [CSV_HEADER]
    for config in configs:
        lines.extend(result_rows(run_experiment(config)))
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    return lines
