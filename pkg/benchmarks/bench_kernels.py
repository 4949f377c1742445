"""Time the compiled trial kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py
The script re-invokes itself with PRIORBAI_DISABLE_JIT=1 to measure the
fallback path with the same workloads, then prints both side by side.
Outputs are asserted equal between the two paths before timings are shown.
"""

import json
import os
import subprocess
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

TRIALS = 20_000
K = 10


def workloads():
    from priorbai import _kernels

    rng = np.random.default_rng(0)
    mu0 = rng.random(K)
    sigma0 = np.linspace(0.1, 0.5, K)
    counts = np.full(K, 50.0)
    z_theta = rng.standard_normal((TRIALS, K))
    z_b = rng.standard_normal((TRIALS, K))
    errors = np.empty(TRIALS)
    regrets = np.empty(TRIALS)

    def mab_fixed():
        _kernels.mab_fixed_trials(mu0, sigma0, 1.0, counts, z_theta, z_b,
                                  errors, regrets)
        return errors.sum()

    def opt_weights():
        total = 0.0
        for row in rng.random((20, K)):
            w = _kernels.mab_opt_weights(row, sigma0 ** 2, 1.0, 500.0, 300, 1e-7)
            total += w[0]
        return total

    z_sh = rng.standard_normal((2000, 4, K))
    thetas = rng.standard_normal((2000, K))
    e2, r2 = np.empty(2000), np.empty(2000)

    def adaptive():
        _kernels.adaptive_trials(0, thetas, 1.0, 500, z_sh, e2, r2)
        return e2.sum()

    return {"mab_fixed_trials": mab_fixed,
            "mab_opt_weights": opt_weights,
            "adaptive_trials(sh)": adaptive}


def run_once():
    results = {}
    for name, fn in workloads().items():
        fn()  # warm-up / compile
        start = time.perf_counter()
        check = fn()
        elapsed = time.perf_counter() - start
        results[name] = {"seconds": elapsed, "check": check}
    return results


def main():
    if os.environ.get("PRIORBAI_BENCH_CHILD"):
        print(json.dumps(run_once()))
        return
    jit = run_once()
    env = dict(os.environ, PRIORBAI_DISABLE_JIT="1", PRIORBAI_BENCH_CHILD="1")
    out = subprocess.run([sys.executable, os.path.abspath(__file__)],
                         env=env, capture_output=True, text=True, check=True)
    fallback = json.loads(out.stdout)
    print(f"{'kernel':<24}{'jit (s)':>12}{'python (s)':>14}{'speedup':>10}")
    for name, row in jit.items():
        fb = fallback[name]
        assert abs(row["check"] - fb["check"]) < 1e-9, f"{name}: paths disagree"
        print(f"{name:<24}{row['seconds']:>12.4f}{fb['seconds']:>14.4f}"
              f"{fb['seconds'] / max(row['seconds'], 1e-12):>10.1f}x")


if __name__ == "__main__":
    main()
