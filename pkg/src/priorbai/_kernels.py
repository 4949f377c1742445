"""Hot numerical kernels, compiled with numba when available.

Set PRIORBAI_DISABLE_JIT=1 to run the same functions as pure Python (slow but
arithmetically identical — handy for debugging and as a correctness baseline;
see benchmarks/bench_kernels.py for the speed comparison).
"""

from __future__ import annotations

import math
import os

import numpy as np

_disabled = os.environ.get("PRIORBAI_DISABLE_JIT", "").lower() in ("1", "true", "yes")
if not _disabled:
    try:
        from numba import njit

        JIT_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        JIT_ENABLED = False
else:
    JIT_ENABLED = False

if not JIT_ENABLED:
    def njit(func=None, **kwargs):
        if func is not None:
            return func

        def wrapper(f):
            return f

        return wrapper


@njit(cache=True, nogil=True)
def largest_remainder(weights: np.ndarray, n: int) -> np.ndarray:
    """Integerize weights*n keeping the sum exactly n; leftover units go to the
    largest fractional parts, ties to the lowest index."""
    k = weights.shape[0]
    budget = np.empty(k, np.int64)
    fracs = np.empty(k, np.float64)
    assigned = 0
    for i in range(k):
        x = weights[i] * n
        f = math.floor(x)
        budget[i] = np.int64(f)
        fracs[i] = x - f
        assigned += budget[i]
    for _ in range(n - assigned):
        best = 0
        best_f = -1.0
        for i in range(k):
            if fracs[i] > best_f:
                best_f = fracs[i]
                best = i
        budget[best] += 1
        fracs[best] = -2.0
    return budget


@njit(cache=True, nogil=True)
def simplex_projection(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    k = v.shape[0]
    u = np.sort(v)[::-1]
    css = 0.0
    rho = 0
    tau = 0.0
    for i in range(k):
        css += u[i]
        t = (css - 1.0) / (i + 1.0)
        if u[i] > t:
            rho = i
            tau = t
    out = np.empty(k, np.float64)
    for i in range(k):
        x = v[i] - tau
        out[i] = x if x > 0.0 else 0.0
    return out


@njit(cache=True, nogil=True)
def mab_bound_total(mu0: np.ndarray, v0: np.ndarray, sigma2: float,
                    w: np.ndarray, n: float) -> float:
    """Sum over ordered pairs of exp(-gap^2/(2(v_i+v_j))) / sqrt(1+n*phi_ij)."""
    k = mu0.shape[0]
    total = 0.0
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            a_j = sigma2 + n * w[j] * v0[j]
            a_i = sigma2 + n * w[i] * v0[i]
            num = v0[i] * v0[i] * w[i] * a_j + v0[j] * v0[j] * w[j] * a_i
            den = sigma2 * v0[i] * a_j + sigma2 * v0[j] * a_i
            phi = num / den
            gap = mu0[i] - mu0[j]
            total += math.exp(-gap * gap / (2.0 * (v0[i] + v0[j]))) / math.sqrt(1.0 + n * phi)
    return total


@njit(cache=True, nogil=True)
def mab_opt_weights(mu0: np.ndarray, v0: np.ndarray, sigma2: float, n: float,
                    max_iters: int, tol: float) -> np.ndarray:
    """Projected gradient descent on the pair-sum bound from the uniform start.

    Central finite differences (h=1e-6, probes clipped at 0) and backtracking
    line search. Single start; the generic optimizer with multistarts lives in
    alloc.opt_alloc — this compiled variant serves the per-trial harness path.
    """
    k = mu0.shape[0]
    h = 1e-6
    w = np.full(k, 1.0 / k)
    f_w = mab_bound_total(mu0, v0, sigma2, w, n)
    grad = np.empty(k, np.float64)
    probe = np.empty(k, np.float64)
    for _ in range(max_iters):
        for c in range(k):
            for i in range(k):
                probe[i] = w[i]
            probe[c] = w[c] + h
            f_plus = mab_bound_total(mu0, v0, sigma2, probe, n)
            probe[c] = w[c] - h
            if probe[c] < 0.0:
                probe[c] = 0.0
            f_minus = mab_bound_total(mu0, v0, sigma2, probe, n)
            grad[c] = (f_plus - f_minus) / (2.0 * h)
        step = 1.0
        accepted = False
        f_new = f_w
        w_new = w
        for _ in range(40):
            cand = simplex_projection(w - step * grad)
            f_cand = mab_bound_total(mu0, v0, sigma2, cand, n)
            if f_cand < f_w - 1e-15:
                accepted = True
                f_new = f_cand
                w_new = cand
                break
            step *= 0.5
        if not accepted:
            break
        moved = 0.0
        for i in range(k):
            d = abs(w_new[i] - w[i])
            if d > moved:
                moved = d
        done = (f_w - f_new) < tol and moved < 1e-10
        w = w_new
        f_w = f_new
        if done:
            break
    return w


@njit(cache=True, nogil=True)
def mab_fixed_trials(mu0: np.ndarray, sigma0: np.ndarray, sigma: float,
                     counts: np.ndarray, z_theta: np.ndarray, z_b: np.ndarray,
                     errors: np.ndarray, regrets: np.ndarray) -> None:
    """Fixed-allocation trials from pre-drawn normals.

    Per trial: theta = mu0 + sigma0*z; per-arm reward sums B_i = n_i*theta_i +
    sigma*sqrt(n_i)*z_i (exact in distribution); recommend the highest
    posterior mean.
    """
    trials, k = z_theta.shape
    sigma2 = sigma * sigma
    for t in range(trials):
        best = 0
        best_theta = -np.inf
        rec = 0
        rec_mean = -np.inf
        theta_rec = 0.0
        for i in range(k):
            theta = mu0[i] + sigma0[i] * z_theta[t, i]
            if theta > best_theta:
                best_theta = theta
                best = i
            b_sum = counts[i] * theta + sigma * math.sqrt(counts[i]) * z_b[t, i]
            v0 = sigma0[i] * sigma0[i]
            var = 1.0 / (1.0 / v0 + counts[i] / sigma2)
            mean = var * (mu0[i] / v0 + b_sum / sigma2)
            if mean > rec_mean:
                rec_mean = mean
                rec = i
                theta_rec = theta
        errors[t] = 0.0 if rec == best else 1.0
        regrets[t] = best_theta - theta_rec


@njit(cache=True, nogil=True)
def mab_resampled_trials(u_mu0: np.ndarray, sigma0: np.ndarray, sigma: float,
                         n: int, alloc_mode: int, fixed_weights: np.ndarray,
                         alpha: float, z_theta: np.ndarray, z_b: np.ndarray,
                         opt_max_iters: int, opt_tol: float,
                         errors: np.ndarray, regrets: np.ndarray) -> None:
    """Trials where the prior means are redrawn U[0,1] per trial.

    alloc_mode 0 uses fixed_weights as-is; mode 1 re-optimizes the pair-sum
    bound per trial; mode 2 uses the prior-mean-proportional heuristic
    mu0_i*sigma0_i; mode 3 blends modes 1 and 2 with weight alpha on the
    optimized part. Weights are integerized per trial by largest remainder.
    """
    trials, k = z_theta.shape
    sigma2 = sigma * sigma
    v0 = sigma0 * sigma0
    for t in range(trials):
        mu0 = u_mu0[t]
        if alloc_mode == 1:
            w = mab_opt_weights(mu0, v0, sigma2, float(n), opt_max_iters, opt_tol)
        elif alloc_mode == 2:
            w = mu0 * sigma0
            w = w / np.sum(w)
        elif alloc_mode == 3:
            w = mab_opt_weights(mu0, v0, sigma2, float(n), opt_max_iters, opt_tol)
            if np.min(mu0) > 0.0:
                heur = mu0 * sigma0
                w = alpha * w + (1.0 - alpha) * heur / np.sum(heur)
        else:
            w = fixed_weights
        counts = largest_remainder(w, n)
        best = 0
        best_theta = -np.inf
        rec = 0
        rec_mean = -np.inf
        theta_rec = 0.0
        for i in range(k):
            theta = mu0[i] + sigma0[i] * z_theta[t, i]
            if theta > best_theta:
                best_theta = theta
                best = i
            b_sum = counts[i] * theta + sigma * math.sqrt(float(counts[i])) * z_b[t, i]
            var = 1.0 / (1.0 / v0[i] + counts[i] / sigma2)
            mean = var * (mu0[i] / v0[i] + b_sum / sigma2)
            if mean > rec_mean:
                rec_mean = mean
                rec = i
                theta_rec = theta
        errors[t] = 0.0 if rec == best else 1.0
        regrets[t] = best_theta - theta_rec


@njit(cache=True, nogil=True)
def sh_choice(theta: np.ndarray, sigma: float, n: int, z: np.ndarray) -> int:
    """One sequential-halving run from pre-drawn round normals z (rounds, k).

    Each round pulls every surviving arm floor(n/(|S|*R)) times; the top half
    by round-local mean survives (lowest index wins ties).
    """
    k = theta.shape[0]
    rounds = z.shape[0]
    alive = np.ones(k, np.bool_)
    n_alive = k
    for r in range(rounds):
        if n_alive == 1:
            break
        t_r = n // (n_alive * rounds)
        keep = (n_alive + 1) // 2
        means = np.full(k, -np.inf)
        for i in range(k):
            if alive[i]:
                means[i] = theta[i] + sigma / math.sqrt(t_r) * z[r, i]
        next_alive = np.zeros(k, np.bool_)
        for _ in range(keep):
            best = -1
            best_m = -np.inf
            for i in range(k):
                if alive[i] and not next_alive[i] and means[i] > best_m:
                    best_m = means[i]
                    best = i
            next_alive[best] = True
        alive = next_alive
        n_alive = keep
    for i in range(k):
        if alive[i]:
            return i
    return 0


@njit(cache=True, nogil=True)
def sr_choice(theta: np.ndarray, sigma: float, n: int, z: np.ndarray) -> int:
    """One successive-rejects run from pre-drawn phase normals z (k-1, k).

    Cumulative statistics; the worst cumulative mean is rejected each phase
    (lowest index rejected on ties); the last phase is truncated to the budget.
    """
    k = theta.shape[0]
    log_bar = 0.5
    for i in range(2, k + 1):
        log_bar += 1.0 / i
    alive = np.ones(k, np.bool_)
    counts = np.zeros(k, np.float64)
    sums = np.zeros(k, np.float64)
    n_alive = k
    used = 0
    prev_target = 0
    for phase in range(1, k):
        target = int(math.ceil((n - k) / (log_bar * (k + 1 - phase))))
        pulls = target - prev_target
        if phase == 1 and pulls < 1:
            pulls = 1
        cap = (n - used) // n_alive
        if pulls > cap:
            pulls = cap
        prev_target = target if target > prev_target else prev_target
        if pulls > 0:
            for i in range(k):
                if alive[i]:
                    counts[i] += pulls
                    sums[i] += pulls * theta[i] + sigma * math.sqrt(float(pulls)) * z[phase - 1, i]
            used += pulls * n_alive
        worst = -1
        worst_m = np.inf
        for i in range(k):
            if alive[i]:
                m = sums[i] / counts[i] if counts[i] > 0 else 0.0
                if m < worst_m:
                    worst_m = m
                    worst = i
        alive[worst] = False
        n_alive -= 1
    for i in range(k):
        if alive[i]:
            return i
    return 0


@njit(cache=True, nogil=True)
def adaptive_trials(kind: int, thetas: np.ndarray, sigma: float, n: int,
                    z: np.ndarray, errors: np.ndarray, regrets: np.ndarray) -> None:
    """Batch of sequential-halving (kind 0) or successive-rejects (kind 1) runs."""
    trials, k = thetas.shape
    for t in range(trials):
        theta = thetas[t]
        if kind == 0:
            rec = sh_choice(theta, sigma, n, z[t])
        else:
            rec = sr_choice(theta, sigma, n, z[t])
        best = 0
        best_theta = theta[0]
        for i in range(1, k):
            if theta[i] > best_theta:
                best_theta = theta[i]
                best = i
        errors[t] = 0.0 if rec == best else 1.0
        regrets[t] = best_theta - theta[rec]
