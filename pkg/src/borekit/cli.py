"""Command-line entry point.

Subcommands:

- ``run``: execute the RunConfig in a TOML file over its seed list.
- ``theory``: the finite-domain theory-assessment experiment with the
  published defaults (classifier lam 0.025, GP lam 0.01, delta 0.1, fixed
  tau 0, squared-exponential lengthscale 0.1, 5 centers, 100 domain
  points, Gaussian noise variance 0.01), comparing bore_pls, bore_pp and
  gp_ucb across trials.
- ``bench``: execute a suite file (many variants x seeds).
- ``validate``: run the invariant/oracle battery and report pass/fail.

Exit codes: 1 for configuration problems, 2 for runtime failures.
Timing columns are blank unless ``--timings`` is passed, so repeated
invocations with identical arguments produce byte-identical CSVs.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from . import io, selfcheck
from .driver import ObjectiveConfig, RunConfig, run_batch, run_sequential
from .errors import InvalidInputError
from .kernels import Kernel


@dataclass(frozen=True)
class ExperimentSuite:
    """A named set of run variants executed over a shared seed list."""

    name: str
    variants: tuple[RunConfig, ...]
    seeds: tuple[int, ...]
    outdir: Path


def _execute(config: RunConfig, seed: int):
    if config.batch_size > 1:
        return run_batch(config, seed=seed)
    return run_sequential(config, seed=seed)


def run_suite(suite: ExperimentSuite) -> dict:
    """Run every (variant, seed) pair, write one CSV per pair, and summarise.

    Filenames are `{variant name}_{algorithm}_{seed}.csv`, so two variants of
    the same algorithm stay distinguishable through their names.
    """
    algorithms = [v.algorithm for v in suite.variants]
    grouped: dict[str, list] = {}
    for variant in suite.variants:
        key = (
            variant.algorithm
            if algorithms.count(variant.algorithm) == 1
            else f"{variant.name}:{variant.algorithm}"
        )
        for seed in suite.seeds:
            result = _execute(variant, seed)
            rows = io.results_rows(result, name=variant.name)
            fname = f"{variant.name}_{variant.algorithm}_{seed}.csv"
            io.write_results(rows, suite.outdir / fname)
            grouped.setdefault(key, []).append(result)
    summary = io.summarize(grouped)
    summary["suite"] = suite.name
    io.write_summary(summary, suite.outdir / f"{suite.name}_summary.json")
    return summary


def theory_configs(budget: int, timings: bool) -> list[RunConfig]:
    objective = ObjectiveConfig(
        kind="synthetic",
        n_centers=5,
        n_domain=100,
        dim=1,
        tau=0.0,
        noise_family="gaussian",
        noise_scale=0.1,
    )
    kernel = Kernel(lengthscales=(0.1,))
    shared = dict(
        budget=budget,
        fixed_tau=0.0,
        delta=0.1,
        norm_bound=1.0,
        kernel=kernel,
        objective=objective,
        record_timings=timings,
        name="theory",
    )
    return [
        RunConfig(algorithm="bore_pls", lam=0.025, **shared),
        RunConfig(algorithm="bore_pp", lam=0.025, **shared),
        RunConfig(algorithm="gp_ucb", lam=0.01, **shared),
    ]


def cmd_theory(args: argparse.Namespace) -> int:
    outdir = io.output_dir(args.outdir)
    seeds = [args.seed + i for i in range(args.trials)]
    by_algorithm: dict[str, list] = {}
    for config in theory_configs(args.budget, args.timings):
        rows = []
        results = []
        for seed in seeds:
            result = run_sequential(config, seed=seed)
            results.append(result)
            rows.extend(io.results_rows(result, name="theory"))
        io.write_results(rows, outdir / f"theory_{config.algorithm}.csv")
        by_algorithm[config.algorithm] = results
    summary = io.summarize(by_algorithm)
    summary["experiment"] = "theory"
    summary["trials"] = args.trials
    summary["budget"] = args.budget
    io.write_summary(summary, outdir / "theory_summary.json")
    print(f"theory: wrote {len(by_algorithm)} result files to {outdir}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = io.load_config(args.config)
    if args.timings:
        config = replace(config, record_timings=True)
    outdir = io.output_dir(args.outdir)
    seeds = [args.seed] if args.seed is not None else list(config.seeds)
    results = []
    for seed in seeds:
        result = _execute(config, seed)
        results.append(result)
        fname = f"{config.name}_{config.algorithm}_{seed}.csv"
        io.write_results(io.results_rows(result), outdir / fname)
    summary = io.summarize({config.algorithm: results})
    summary["run"] = config.name
    io.write_summary(summary, outdir / f"{config.name}_summary.json")
    print(f"run: wrote {len(results)} result files to {outdir}")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    suite = load_suite(args.suite, args.outdir)
    run_suite(suite)
    print(f"bench: suite {suite.name!r} finished, results in {suite.outdir}")
    return 0


def load_suite(path: str, outdir_flag: str | None) -> ExperimentSuite:
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"suite file not found: {path}")
    with open(path, "rb") as fh:
        tree = io.tomllib.load(fh)
    meta = tree.get("suite", {})
    name = meta.get("name", path.stem)
    seeds = tuple(int(s) for s in meta.get("seeds", [0]))
    variants = tuple(
        io.config_from_dict(v) for v in tree.get("variants", [])
    )
    if not variants:
        raise InvalidInputError("suite file declares no [[variants]]")
    outdir = io.output_dir(outdir_flag)
    return ExperimentSuite(name=name, variants=variants, seeds=seeds, outdir=outdir)


def cmd_validate(args: argparse.Namespace) -> int:
    results = selfcheck.run_all(fast=args.fast)
    failures = 0
    for res in results:
        status = "PASS" if res.ok else "FAIL"
        print(f"{status}  {res.name}: {res.detail}")
        failures += 0 if res.ok else 1
    print(f"{len(results) - failures}/{len(results)} checks passed")
    return 0 if failures == 0 else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="borekit",
        description="Density-ratio Bayesian optimisation experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one run configuration file")
    p_run.add_argument("--config", required=True, help="path to a TOML RunConfig")
    p_run.add_argument("--seed", type=int, default=None, help="override the seed list")
    p_run.add_argument("--outdir", default=None)
    p_run.add_argument("--timings", action="store_true", help="record wall-clock times")
    p_run.set_defaults(func=cmd_run)

    p_theory = sub.add_parser("theory", help="run the theory-assessment experiment")
    p_theory.add_argument("--trials", type=int, default=10)
    p_theory.add_argument("--budget", type=int, default=100)
    p_theory.add_argument("--seed", type=int, default=7, help="base seed; trial i uses seed+i")
    p_theory.add_argument("--outdir", default=None)
    p_theory.add_argument("--timings", action="store_true")
    p_theory.set_defaults(func=cmd_theory)

    p_bench = sub.add_parser("bench", help="execute an experiment suite file")
    p_bench.add_argument("--suite", required=True, help="path to a TOML suite file")
    p_bench.add_argument("--outdir", default=None)
    p_bench.set_defaults(func=cmd_bench)

    p_val = sub.add_parser("validate", help="run the invariant/oracle battery")
    p_val.add_argument("--fast", action="store_true", help="smaller problem sizes")
    p_val.set_defaults(func=cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidInputError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
