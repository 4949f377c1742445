"""Frequentist fixed-budget baselines: sequential halving and successive rejects.

Both operate on a Gaussian environment described by the per-arm means and the
noise standard deviation. Reward batches enter through their sufficient
statistic: one normal per (arm, round/phase) scales to the batch mean or sum
exactly in distribution, so a run consumes a (rounds, k) block of pre-drawable
normals and is a pure function of it. The compiled batch path in _kernels
replays the same arithmetic bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import BudgetTooSmall
from .linalg import RngStream


@dataclass(frozen=True)
class AdaptiveRun:
    pulls: list  # one dict {arm: pulls} per round/phase
    final_choice: int
    empirical_means: np.ndarray
    total_pulls: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total_pulls",
                           sum(sum(r.values()) for r in self.pulls))


def sh_rounds(k: int) -> int:
    return max(1, math.ceil(math.log2(k)))


def sequential_halving(theta: np.ndarray, sigma: float, n: int,
                       rng: RngStream | np.random.Generator) -> AdaptiveRun:
    """Halve the surviving set each round using round-local means only."""
    theta = np.asarray(theta, dtype=np.float64)
    k = theta.shape[0]
    rounds = sh_rounds(k)
    if n < k * rounds:
        raise BudgetTooSmall(f"need n >= k*ceil(log2 k) = {k * rounds}, got {n}")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    z = gen.standard_normal((rounds, k))

    alive = np.ones(k, dtype=bool)
    pulls = []
    means = np.zeros(k)
    n_alive = k
    for r in range(rounds):
        if n_alive == 1:
            break
        t_r = n // (n_alive * rounds)
        means = np.where(alive, theta + sigma / math.sqrt(t_r) * z[r], -np.inf)
        pulls.append({int(i): t_r for i in np.nonzero(alive)[0]})
        keep = (n_alive + 1) // 2
        # stable argsort keeps the lowest index first among ties
        order = np.argsort(-means, kind="stable")
        survivors = order[:keep]
        alive = np.zeros(k, dtype=bool)
        alive[survivors] = True
        n_alive = keep
    choice = int(np.nonzero(alive)[0][0])
    return AdaptiveRun(pulls=pulls, final_choice=choice, empirical_means=means)


def sr_schedule(k: int, n: int) -> list[int]:
    """Cumulative per-arm pull targets for the k-1 rejection phases."""
    log_bar = 0.5 + sum(1.0 / i for i in range(2, k + 1))
    return [math.ceil((n - k) / (log_bar * (k + 1 - j))) for j in range(1, k)]


def successive_rejects(theta: np.ndarray, sigma: float, n: int,
                       rng: RngStream | np.random.Generator) -> AdaptiveRun:
    """Reject the worst cumulative mean each phase; truncate to the budget."""
    theta = np.asarray(theta, dtype=np.float64)
    k = theta.shape[0]
    if n < k:
        raise BudgetTooSmall(f"need n >= k = {k}, got {n}")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    z = gen.standard_normal((k - 1, k))

    alive = np.ones(k, dtype=bool)
    counts = np.zeros(k)
    sums = np.zeros(k)
    pulls = []
    used = 0
    prev_target = 0
    n_alive = k
    targets = sr_schedule(k, n)
    for phase, target in enumerate(targets, start=1):
        m = target - prev_target
        if phase == 1:
            m = max(m, 1)  # every arm sees at least one pull
        m = min(m, (n - used) // n_alive)
        prev_target = max(target, prev_target)
        if m > 0:
            counts[alive] += m
            sums[alive] += m * theta[alive] + sigma * math.sqrt(m) * z[phase - 1, alive]
            used += m * n_alive
            pulls.append({int(i): m for i in np.nonzero(alive)[0]})
        with np.errstate(invalid="ignore"):
            means = np.where(alive, np.where(counts > 0, sums / np.maximum(counts, 1), 0.0), np.inf)
        reject = int(np.argmin(means))  # argmin takes the lowest index on ties
        alive[reject] = False
        n_alive -= 1
    choice = int(np.nonzero(alive)[0][0])
    means = np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)
    return AdaptiveRun(pulls=pulls, final_choice=choice, empirical_means=means)
