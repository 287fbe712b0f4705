"""Configuration files and results serialisation.

Run configurations live in TOML files mirroring the RunConfig tree; loading
is lossless, and ``save_config(load_config(p))`` reproduces an equal
RunConfig.  Results go to CSV with a fixed column order (one row per query
point; batch iterations emit one sub-row per point) and floats printed with
17 significant digits so re-reading reproduces them exactly.  Missing
metrics are explicit empty fields, never dropped columns.

Summaries aggregate per-iteration regret across seeds with a seeded
percentile bootstrap (1000 resamples) for the 95% interval.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict
from pathlib import Path

import numpy as np

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .driver import ObjectiveConfig, RunConfig, RunResult
from .errors import InvalidInputError
from .kernels import Kernel
from .svgd import SvgdConfig

CSV_COLUMNS = (
    "run_id",
    "algorithm",
    "seed",
    "t",
    "batch_index",
    "x",
    "y",
    "tau",
    "r_t",
    "R_t",
    "simple_regret",
    "beta_t",
    "sigma_at_query",
    "info_gain",
    "thm2_bound",
    "thm3_bound",
    "dist_regret",
    "kl_estimate",
    "wall_ms",
)

BOOTSTRAP_RESAMPLES = 1000
OUTPUT_DIR_ENV = "BOREKIT_OUTPUT_DIR"


def _fmt(value) -> str:
    """One CSV cell: 17-significant-digit floats, empty string for missing."""
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return format(value, ".17g")
    return str(value)


def _fmt_point(x: np.ndarray) -> str:
    return ";".join(format(float(v), ".17g") for v in np.atleast_1d(x))


def run_id_for(name: str, algorithm: str, seed: int) -> str:
    return f"{name}-{algorithm}-{seed}"


def results_rows(result: RunResult, name: str | None = None) -> list[dict]:
    """Flatten a run into CSV-ready dictionaries, one per query point."""
    cfg = result.config
    rid = run_id_for(name or cfg.name, cfg.algorithm, result.seed)
    rows = []
    for rec in result.records:
        m = rec.points.shape[0]
        for j in range(m):
            sigma = (
                float(rec.sigma_at_query[j])
                if rec.sigma_at_query is not None
                else None
            )
            rows.append(
                {
                    "run_id": rid,
                    "algorithm": cfg.algorithm,
                    "seed": result.seed,
                    "t": rec.iteration,
                    "batch_index": j,
                    "x": _fmt_point(rec.points[j]),
                    "y": float(rec.observations[j]),
                    "tau": rec.tau,
                    "r_t": rec.instant_regret,
                    "R_t": rec.cumulative_regret,
                    "simple_regret": rec.simple_regret,
                    "beta_t": rec.beta,
                    "sigma_at_query": sigma,
                    "info_gain": rec.info_gain,
                    "thm2_bound": rec.thm2_instant,
                    "thm3_bound": rec.thm3_instant,
                    "dist_regret": rec.dist_regret,
                    "kl_estimate": rec.kl_estimate,
                    "wall_ms": rec.wall_ms,
                }
            )
    return rows


def write_results(rows: list[dict], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row[col]) for col in CSV_COLUMNS])


def read_results(path: str | Path) -> list[dict]:
    """Read a results CSV back; numeric fields become floats, blanks None."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            parsed = dict(row)
            for key in row:
                if key in ("run_id", "algorithm", "x"):
                    continue
                parsed[key] = float(row[key]) if row[key] != "" else None
            out.append(parsed)
    return out


def bootstrap_ci(
    values: np.ndarray, rng: np.random.Generator, n_resamples: int = BOOTSTRAP_RESAMPLES
) -> tuple[float, float]:
    """Percentile-bootstrap 95% interval for the mean of ``values``."""
    values = np.asarray(values, dtype=float)
    idx = rng.integers(0, values.size, size=(n_resamples, values.size))
    means = values[idx].mean(axis=1)
    return float(np.percentile(means, 2.5)), float(np.percentile(means, 97.5))


def summarize(results_by_algorithm: dict[str, list[RunResult]]) -> dict:
    """Per-algorithm mean regret curves with bootstrap confidence bands."""
    summary: dict = {"algorithms": {}}
    for alg, results in results_by_algorithm.items():
        rng = np.random.default_rng(0)  # fixed stream: summaries are deterministic
        T = min(len(r.records) for r in results)
        cum = np.array(
            [[r.records[t].cumulative_regret for t in range(T)] for r in results]
        )
        simple = np.array(
            [[r.records[t].simple_regret for t in range(T)] for r in results]
        )
        lo, hi = [], []
        for t in range(T):
            a, b = bootstrap_ci(cum[:, t], rng)
            lo.append(a)
            hi.append(b)
        summary["algorithms"][alg] = {
            "iterations": list(range(1, T + 1)),
            "seeds": [r.seed for r in results],
            "mean_cumulative_regret": cum.mean(axis=0).tolist(),
            "ci_low": lo,
            "ci_high": hi,
            "mean_simple_regret": simple.mean(axis=0).tolist(),
        }
    return summary


def write_summary(summary: dict, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def output_dir(explicit: str | None = None) -> Path:
    """Resolve the output directory: flag > environment > ./results."""
    if explicit:
        return Path(explicit)
    env = os.environ.get(OUTPUT_DIR_ENV)
    return Path(env) if env else Path("results")


# -- TOML configuration ----------------------------------------------------------


def config_to_dict(config: RunConfig) -> dict:
    """RunConfig as a plain tree with None entries dropped (TOML has no null)."""

    def prune(obj):
        if isinstance(obj, dict):
            return {k: prune(v) for k, v in obj.items() if v is not None}
        if isinstance(obj, tuple):
            return [prune(v) for v in obj]
        return obj

    return prune(asdict(config))


def config_from_dict(tree: dict) -> RunConfig:
    data = dict(tree)
    try:
        if "kernel" in data:
            kdata = dict(data["kernel"])
            if "lengthscales" in kdata:
                kdata["lengthscales"] = tuple(kdata["lengthscales"])
            data["kernel"] = Kernel(**kdata)
        if "objective" in data:
            data["objective"] = ObjectiveConfig(**data["objective"])
        if "svgd" in data:
            data["svgd"] = SvgdConfig(**data["svgd"])
        if "seeds" in data:
            data["seeds"] = tuple(int(s) for s in data["seeds"])
        config = RunConfig(**data)
    except TypeError as exc:
        raise InvalidInputError(f"malformed run configuration: {exc}") from exc
    config.validate()
    return config


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        # repr round-trips exactly; force a float marker for integral values
        text = repr(value)
        return text if any(c in text for c in ".einf") else text + ".0"
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise InvalidInputError(f"cannot serialise {type(value).__name__} to TOML")


def dumps_toml(tree: dict, _prefix: str = "") -> str:
    """Minimal TOML writer for the configuration tree (scalars, lists, tables)."""
    lines = []
    tables = []
    for key, value in tree.items():
        if isinstance(value, dict):
            tables.append((key, value))
        else:
            lines.append(f"{key} = {_toml_value(value)}")
    for key, value in tables:
        name = f"{_prefix}{key}"
        lines.append("")
        lines.append(f"[{name}]")
        lines.append(dumps_toml(value, _prefix=f"{name}."))
    return "\n".join(lines).strip() + "\n"


def save_config(config: RunConfig, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(dumps_toml(config_to_dict(config)))


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"configuration file not found: {path}")
    try:
        with open(path, "rb") as fh:
            tree = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise InvalidInputError(f"invalid TOML in {path}: {exc}") from exc
    return config_from_dict(tree)
