import numpy as np
import pytest

from priorbai.baselines import (sequential_halving, sh_rounds, sr_schedule,
                                successive_rejects)
from priorbai.errors import BudgetTooSmall
from priorbai.linalg import RngStream


def test_sh_rounds():
    assert sh_rounds(2) == 1
    assert sh_rounds(3) == 2
    assert sh_rounds(8) == 3
    assert sh_rounds(9) == 4


def test_sh_budget_respected():
    theta = np.linspace(0.0, 1.0, 8)
    run = sequential_halving(theta, 1.0, 100, RngStream(0, 0))
    assert run.total_pulls <= 100
    assert 0 <= run.final_choice < 8


def test_sh_rejects_tiny_budget():
    with pytest.raises(BudgetTooSmall):
        sequential_halving(np.zeros(8), 1.0, 10, RngStream(0, 0))


def test_sh_noiseless_picks_best():
    theta = np.array([0.1, 0.9, 0.4, 0.2])
    for t in range(20):
        run = sequential_halving(theta, 1e-9, 64, RngStream(3, t))
        assert run.final_choice == 1


def test_sh_halves_each_round():
    run = sequential_halving(np.linspace(0, 1, 8), 1.0, 240, RngStream(1, 0))
    sizes = [len(p) for p in run.pulls]
    assert sizes == [8, 4, 2]


def test_sr_schedule_monotone_cumulative():
    sched = sr_schedule(5, 100)
    assert all(a <= b for a, b in zip(sched, sched[1:]))
    assert len(sched) == 4


def test_sr_schedule_two_arm_logbar():
    # log-bar(2) = 1/2 + 1/2 = 1; with n=10 the single phase targets
    # ceil(8 / (1 * 2)) = 4 pulls per arm
    assert sr_schedule(2, 10) == [4]


def test_sr_budget_respected():
    theta = np.linspace(0.0, 1.0, 6)
    for n in [6, 20, 100, 999]:
        run = successive_rejects(theta, 1.0, n, RngStream(0, n))
        assert run.total_pulls <= n
        assert 0 <= run.final_choice < 6


def test_sr_noiseless_picks_best():
    theta = np.array([0.3, 0.1, 0.8, 0.2])
    for t in range(20):
        run = successive_rejects(theta, 1e-9, 40, RngStream(4, t))
        assert run.final_choice == 2


def test_sr_every_arm_pulled_in_phase_one():
    run = successive_rejects(np.zeros(5), 1.0, 5, RngStream(0, 1))
    assert set(run.pulls[0]) == set(range(5))


def test_baselines_deterministic():
    theta = np.linspace(0, 1, 5)
    a = sequential_halving(theta, 1.0, 60, RngStream(9, 9)).final_choice
    b = sequential_halving(theta, 1.0, 60, RngStream(9, 9)).final_choice
    assert a == b
    c = successive_rejects(theta, 1.0, 60, RngStream(9, 9)).final_choice
    d = successive_rejects(theta, 1.0, 60, RngStream(9, 9)).final_choice
    assert c == d


def test_kernel_choice_matches_reference():
    from priorbai import _kernels
    theta = np.array([0.2, 0.7, 0.4, 0.9, 0.1])
    sigma, n = 1.0, 60
    for t in range(50):
        gen = RngStream(11, t).generator()
        z = gen.standard_normal((sh_rounds(5), 5))
        ref = sequential_halving(theta, sigma, n, RngStream(11, t))
        assert _kernels.sh_choice(theta, sigma, n, z) == ref.final_choice
    for t in range(50):
        gen = RngStream(12, t).generator()
        z = gen.standard_normal((4, 5))
        ref = successive_rejects(theta, sigma, n, RngStream(12, t))
        assert _kernels.sr_choice(theta, sigma, n, z) == ref.final_choice
