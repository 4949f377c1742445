"""Command-line entry point: bound evaluation, allocations, experiments, sweeps.

Config files are JSON with sections ``model``, ``allocation``, ``algorithm``,
``experiment``, ``output`` (and ``sweep`` for multi-run files); unknown keys
are rejected before any computation. Diagnostics go to stderr; data rows go
to stdout or the requested CSV file. Exit codes: 0 success, 2 configuration
error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .alloc import OptimizerConfig
from .bounds import bound_hier, bound_linear, bound_mab
from .errors import ConfigError, PriorBaiError
from .glm import LogisticModel
from .linalg import check_simplex
from .models import HierPrior, LinearPrior, MabPrior
from .sim import (ALGORITHMS, ALLOCATIONS, CSV_HEADER, ExperimentConfig,
                  fixed_plan, model_family, result_rows, run_experiment)

EXIT_CONFIG = 2
EXIT_RUNTIME = 3

_SECTION_KEYS = {
    "model": {"family", "k", "d", "l", "mu0", "sigma0", "sigma", "Sigma0",
              "arms", "nu", "Sigma", "b"},
    "allocation": {"strategy", "weights", "alpha", "n_w", "max_iters", "tol",
                   "multistarts"},
    "algorithm": {"name"},
    "experiment": {"setting", "budgets", "trials", "seed", "threads",
                   "resample_prior_means"},
    "output": {"csv"},
}

_MODEL_KEYS = {
    "mab": {"family", "k", "mu0", "sigma0", "sigma"},
    "linear": {"family", "d", "k", "mu0", "Sigma0", "arms", "sigma"},
    "hier": {"family", "l", "k", "nu", "Sigma", "b", "sigma0", "sigma"},
    "logistic": {"family", "d", "k", "mu0", "Sigma0", "arms"},
}


def _reject_unknown(name: str, section: dict, allowed: set) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"section '{name}': unknown keys {sorted(unknown)}")


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    _reject_unknown("<root>", cfg, set(_SECTION_KEYS) | {"sweep"})
    if "model" not in cfg:
        raise ConfigError("config is missing the required 'model' section")
    for name, allowed in _SECTION_KEYS.items():
        if name in cfg:
            if not isinstance(cfg[name], dict):
                raise ConfigError(f"section '{name}' must be a JSON object")
            _reject_unknown(name, cfg[name], allowed)
    return cfg


def build_model(section: dict):
    family = section.get("family")
    if family not in _MODEL_KEYS:
        raise ConfigError(f"model.family must be one of {sorted(_MODEL_KEYS)}, "
                          f"got {family!r}")
    _reject_unknown("model", section, _MODEL_KEYS[family])
    missing = _MODEL_KEYS[family] - set(section)
    if missing:
        raise ConfigError(f"model section missing keys {sorted(missing)}")
    try:
        if family == "mab":
            return MabPrior(k=int(section["k"]), mu0=section["mu0"],
                            sigma0=section["sigma0"], sigma=float(section["sigma"]))
        if family == "linear":
            return LinearPrior(d=int(section["d"]), k=int(section["k"]),
                               mu0=section["mu0"], Sigma0=section["Sigma0"],
                               arms=section["arms"], sigma=float(section["sigma"]))
        if family == "hier":
            return HierPrior(l=int(section["l"]), k=int(section["k"]),
                             nu=section["nu"], Sigma=section["Sigma"],
                             b=section["b"], sigma0=section["sigma0"],
                             sigma=float(section["sigma"]))
        return LogisticModel(d=int(section["d"]), k=int(section["k"]),
                             mu0=section["mu0"], Sigma0=section["Sigma0"],
                             arms=section["arms"])
    except ConfigError:
        raise
    except (PriorBaiError, TypeError, ValueError) as exc:
        raise ConfigError(f"model section invalid: {exc}") from exc


def _parse_budgets(text: str) -> list:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"--budgets must be comma-separated integers: {exc}")


def build_experiment(cfg: dict, args, algorithm: str | None = None,
                     allocation: str | None = None,
                     setting: str | None = None) -> ExperimentConfig:
    model = build_model(cfg["model"])
    exp = cfg.get("experiment", {})
    alloc = cfg.get("allocation", {})
    algo = cfg.get("algorithm", {})
    opt = OptimizerConfig(
        max_iters=int(alloc.get("max_iters", OptimizerConfig().max_iters)),
        tol=float(alloc.get("tol", OptimizerConfig().tol)),
        multistarts=int(alloc.get("multistarts", OptimizerConfig().multistarts)),
    )
    budgets = exp.get("budgets", [])
    if getattr(args, "budgets", None):
        budgets = _parse_budgets(args.budgets)
    seed = exp.get("seed", 0)
    if getattr(args, "seed", None) is not None:
        seed = args.seed
    threads = exp.get("threads", 1)
    if getattr(args, "threads", None) is not None:
        threads = args.threads
    weights = alloc.get("weights")
    return ExperimentConfig(
        setting=setting or exp.get("setting", "default"),
        model=model,
        algorithm=algorithm or algo.get("name", "pibai"),
        budgets=budgets,
        trials=int(exp.get("trials", 1000)),
        master_seed=int(seed),
        allocation=allocation or alloc.get("strategy", "uniform"),
        weights=None if weights is None else np.asarray(weights, dtype=np.float64),
        alpha=float(alloc.get("alpha", 0.5)),
        n_w=None if alloc.get("n_w") is None else int(alloc["n_w"]),
        resample_prior_means=bool(exp.get("resample_prior_means", False)),
        opt=opt,
        threads=int(threads),
    )


def _bound_report(model, omega, n):
    if isinstance(model, MabPrior):
        return bound_mab(model, omega, n)
    if isinstance(model, LinearPrior):
        return bound_linear(model, omega, n)
    if isinstance(model, HierPrior):
        return bound_hier(model, omega, n)
    raise ConfigError("no evaluable bound for logistic models")


def cmd_bound(args) -> int:
    cfg = load_config(args.config)
    config = build_experiment(cfg, args)
    model = config.model
    inline = None
    if args.omega:
        try:
            inline = np.array([float(t) for t in args.omega.split(",")])
        except ValueError:
            inline = None  # strategy name, resolved below
    for n in config.budgets or [0]:
        if inline is not None:
            try:
                omega = check_simplex(inline, model.k)
            except PriorBaiError as exc:
                raise ConfigError(str(exc)) from exc
        else:
            strategy = args.omega or config.allocation
            plan = fixed_plan(
                ExperimentConfig(**{**config.__dict__, "allocation": strategy,
                                    "budgets": (n,)}), n)
            omega = plan.weights
        report = _bound_report(model, omega, n)
        print(f"n={n} total={report.total:.10g}")
        for (i, j), terms in sorted(report.pair_terms.items()):
            detail = " ".join(f"{k}={v:.10g}" for k, v in sorted(terms.items())
                              if isinstance(v, float))
            print(f"  pair ({i},{j}): {detail}")
    return 0


def cmd_alloc(args) -> int:
    cfg = load_config(args.config)
    config = build_experiment(cfg, args)
    for n in config.budgets or [0]:
        plan = fixed_plan(config, n)
        weights = " ".join(f"{w:.6f}" for w in plan.weights)
        print(f"n={n} strategy={plan.strategy_tag} weights=[{weights}]")
        print(f"  per_arm_budget={plan.per_arm_budget.tolist()}")
        for key, val in sorted(plan.diagnostics.items()):
            if isinstance(val, float):
                print(f"  {key}={val:.10g}")
            else:
                print(f"  {key}={val}")
    return 0


def _emit_csv(lines, out_path: str | None) -> None:
    if out_path is None:
        for line in lines:
            print(line)
        return
    try:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    except BaseException:
        if os.path.exists(out_path):
            os.remove(out_path)  # never leave a partial CSV behind
        raise


def _summarize(result, file=sys.stderr) -> None:
    config = result.config
    for row in result.rows:
        print(f"[{config.setting}] {config.algorithm}"
              f"{'/' + config.allocation if config.algorithm == 'pibai' else ''}"
              f" n={row['budget']} poe={row['poe_mean']:.4f}"
              f"(±{row['poe_stderr']:.4f}) sr={row['sr_mean']:.4f}"
              f" in {row['runtime_ms']:.0f} ms", file=file)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    config = build_experiment(cfg, args)
    out_path = args.out or cfg.get("output", {}).get("csv")
    result = run_experiment(config)
    _summarize(result)
    _emit_csv([CSV_HEADER] + result_rows(result), out_path)
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    entries = cfg.get("sweep")
    if entries is None:
        entries = [{}]
    if not isinstance(entries, list):
        raise ConfigError("'sweep' must be a list of run entries")
    lines = [CSV_HEADER]
    out_path = args.out or cfg.get("output", {}).get("csv")
    for idx, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ConfigError(f"sweep entry {idx} must be a JSON object")
        _reject_unknown(f"sweep[{idx}]", entry,
                        {"algorithm", "allocation", "setting"})
        config = build_experiment(cfg, args,
                                  algorithm=entry.get("algorithm"),
                                  allocation=entry.get("allocation"),
                                  setting=entry.get("setting"))
        result = run_experiment(config)
        _summarize(result)
        lines.extend(result_rows(result))
    _emit_csv(lines, out_path)
    return 0


def _add_common(parser) -> None:
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--seed", type=int, default=None,
                        help="override experiment.seed")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (results are thread-invariant)")
    parser.add_argument("--out", default=None, help="output CSV path")
    parser.add_argument("--budgets", default=None,
                        help="comma-separated budget override")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="priorbai",
        description="Prior-informed fixed-budget best-arm identification")
    sub = parser.add_subparsers(dest="command", required=True)
    p_bound = sub.add_parser("bound", help="evaluate the error bound")
    _add_common(p_bound)
    p_bound.add_argument("--omega", default=None,
                         help="inline weights 'w1,...,wK' or a strategy name")
    p_bound.set_defaults(func=cmd_bound)
    p_alloc = sub.add_parser("alloc", help="compute an allocation")
    _add_common(p_alloc)
    p_alloc.set_defaults(func=cmd_alloc)
    p_sim = sub.add_parser("simulate", help="run one experiment")
    _add_common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)
    p_sweep = sub.add_parser("sweep", help="run every sweep entry in the config")
    _add_common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PriorBaiError as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
