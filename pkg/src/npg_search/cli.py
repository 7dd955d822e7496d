"""Command-line orchestration: ``run``, ``oracle`` and ``compare``.

Exit codes: 0 success, 2 config error, 3 runtime failure, 4 oracle refusal.
The worker count for independent seeds comes from ``NPG_WORKERS`` (default 1).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import statistics
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import algorithms as alg
from .metrics import NormalizationSpec, dominated_area_2d, hypervolume, run_metrics
from .objectives import ContractError
from .schedule import TemperatureSchedule
from .search_space import (
    DEFAULT_CORRELATION_STRENGTH,
    DEFAULT_SPREAD,
    EnumerationRefused,
    Evaluator,
    SequenceSpace,
    calibrate_sigma,
    make_benchmark,
    space_to_dict,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("npg_search")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_ORACLE = 0, 2, 3, 4
ALGORITHMS = ("adf", "adc", "rs", "mdf")
WORKERS_ENV = "NPG_WORKERS"


class ConfigError(ValueError):
    """Invalid run configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass
class RunConfig:
    algorithm: str
    seeds: list[int]
    space: dict
    evaluator: dict
    block: dict
    out: Path
    m: int = 2
    base_dir: Path = field(default_factory=Path.cwd)


# ---------------------------------------------------------------------------
# config ingestion


def load_config(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    try:
        if path.suffix == ".json":
            return json.loads(text)
        return tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError("config", f"cannot parse {path}: {exc}") from exc


def parse_config(raw: dict, base_dir: Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Validate a raw config mapping; every problem names its field."""
    overrides = overrides or {}
    base_dir = base_dir or Path.cwd()
    algorithm = raw.get("algorithm")
    if algorithm is None:
        raise ConfigError("algorithm", f"missing; expected one of {', '.join(ALGORITHMS)}")
    if algorithm not in ALGORITHMS:
        raise ConfigError("algorithm", f"unknown algorithm {algorithm!r}; expected one of {', '.join(ALGORITHMS)}")
    present = [a for a in ALGORITHMS if a in raw]
    if algorithm not in present:
        raise ConfigError(algorithm, f"missing [{algorithm}] block for algorithm {algorithm!r}")
    extra = [a for a in present if a != algorithm]
    if extra:
        raise ConfigError(extra[0], f"block [{extra[0]}] does not match algorithm {algorithm!r}")
    block = raw[algorithm]
    if not isinstance(block, dict):
        raise ConfigError(algorithm, "must be a table")

    seeds = overrides.get("seeds") or raw.get("seeds", [0])
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) for s in seeds):
        raise ConfigError("seeds", "must be a non-empty list of integers")
    if len(set(seeds)) != len(seeds):
        raise ConfigError("seeds", f"seeds must be distinct, got {seeds}")

    m = raw.get("objectives", 2)
    if m not in (2, 3):
        raise ConfigError("objectives", f"must be 2 or 3, got {m!r}")

    space = raw.get("space", {})
    if isinstance(space, str):
        space_path = (base_dir / space).resolve()
        try:
            space = json.loads(space_path.read_text())
        except (OSError, ValueError) as exc:
            raise ConfigError("space", f"cannot load space file {space_path}: {exc}") from exc
    if not isinstance(space, dict):
        raise ConfigError("space", "must be a table or a path to a JSON file")
    unknown = set(space) - {"seed", "L", "arities", "ranges", "correlation_strength", "sigma"}
    if unknown:
        raise ConfigError(f"space.{sorted(unknown)[0]}", "unknown key")

    evaluator = dict(raw.get("evaluator", {}))
    if "sigma" not in evaluator and "sigma" in space:
        evaluator["sigma"] = space["sigma"]
    unknown = set(evaluator) - {"sigma", "target_correlation", "spread"}
    if unknown:
        raise ConfigError(f"evaluator.{sorted(unknown)[0]}", "unknown key")
    if "sigma" in evaluator and "target_correlation" in evaluator:
        raise ConfigError("evaluator", "give either sigma or target_correlation, not both")

    if overrides.get("out"):
        out = Path(overrides["out"])
    else:
        out = Path(raw.get("out", "runs"))
        if not out.is_absolute():
            out = base_dir / out
    cfg = RunConfig(algorithm, list(seeds), space, evaluator, block, out, m, base_dir)
    build_algorithm_config(cfg)  # fail early on bad algorithm settings
    build_space(cfg)
    return cfg


def _dataclass_from(cls, data: dict, prefix: str):
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{prefix}.{sorted(unknown)[0]}", "unknown key")
    kwargs = {}
    for key, value in data.items():
        if key == "schedule":
            if not isinstance(value, dict):
                raise ConfigError(f"{prefix}.schedule", "must be a table with t_min, t_max, nu")
            value = _dataclass_from(TemperatureSchedule, value, f"{prefix}.schedule")
        elif key == "policy":
            if not isinstance(value, dict):
                raise ConfigError(f"{prefix}.policy", "must be a table")
            value = _dataclass_from(alg.PolicyConfig, value, f"{prefix}.policy")
        elif isinstance(value, list):
            value = tuple(math.inf if v is None else v for v in value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (ContractError, TypeError) as exc:
        raise ConfigError(prefix, str(exc)) from exc


def build_algorithm_config(cfg: RunConfig):
    cls = {"adf": alg.AdfConfig, "adc": alg.AdcConfig, "rs": alg.RsConfig, "mdf": alg.MdfConfig}[cfg.algorithm]
    block = dict(cfg.block)
    if "m" in block and block["m"] != cfg.m:
        raise ConfigError(f"{cfg.algorithm}.m", f"disagrees with objectives = {cfg.m}")
    block["m"] = cfg.m
    return _dataclass_from(cls, block, cfg.algorithm)


def build_space(cfg: RunConfig) -> SequenceSpace:
    s = cfg.space
    try:
        return make_benchmark(
            seed=int(s.get("seed", 0)),
            L=int(s.get("L", 8)),
            arities=s.get("arities", 4),
            correlation_strength=float(s.get("correlation_strength", DEFAULT_CORRELATION_STRENGTH)),
            ranges=s.get("ranges"),
        )
    except (ContractError, TypeError, ValueError) as exc:
        raise ConfigError("space", str(exc)) from exc


def build_evaluator(cfg: RunConfig, space: SequenceSpace) -> Evaluator:
    e = cfg.evaluator
    try:
        ev = Evaluator.calibrated(space, spread=float(e.get("spread", DEFAULT_SPREAD)))
        if "target_correlation" in e:
            return ev.with_sigma(calibrate_sigma(space, ev, float(e["target_correlation"])))
        return ev.with_sigma(float(e.get("sigma", 0.0)))
    except (ContractError, TypeError, ValueError) as exc:
        raise ConfigError("evaluator", str(exc)) from exc


def space_fingerprint(cfg: RunConfig, space: SequenceSpace) -> str:
    recipe = space_to_dict(space)
    recipe.pop("sigma")
    return alg.fingerprint({"space": recipe, "m": cfg.m})


# ---------------------------------------------------------------------------
# execution


def execute(cfg: RunConfig, seed: int) -> alg.RunRecord:
    """Run one (algorithm, seed) pair; a pure function of its inputs."""
    space = build_space(cfg)
    evaluator = build_evaluator(cfg, space)
    acfg = build_algorithm_config(cfg)
    rng = np.random.default_rng(seed)
    if cfg.algorithm == "adf":
        record = alg.run_adf(space, evaluator, None, acfg, rng)
    elif cfg.algorithm == "adc":
        record = alg.run_adc(space, evaluator, None, acfg, rng)
    elif cfg.algorithm == "rs":
        n = alg.DEFAULT_STEPS[cfg.m] if acfg.n_steps is None else acfg.n_steps
        record = alg.run_random(space, evaluator, n, rng, m=cfg.m)
    else:
        n = alg.DEFAULT_STEPS[2] if acfg.steps_per_target is None else acfg.steps_per_target
        record = alg.run_mdf(
            space, evaluator, acfg.n_targets, n, acfg.fixed_temperature, rng,
            m=cfg.m, delta=acfg.delta, policy_config=acfg.policy,
        )
    record.seed = seed
    record.fingerprint = alg.fingerprint(
        {"algorithm": cfg.algorithm, "config": acfg, "space": space_to_dict(space), "evaluator": evaluator}
    )
    record.space_fingerprint = space_fingerprint(cfg, space)
    return record


def atomic_write(path: Path, text: str) -> None:
    """Write ``text`` so that ``path`` is either complete or absent."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=True) + "\n"


def write_record(record: alg.RunRecord, run_dir: Path) -> dict:
    metrics = run_metrics(record)
    atomic_write(run_dir / "samples.csv", record.samples_csv())
    atomic_write(run_dir / "front.json", record.front_json() + "\n")
    atomic_write(run_dir / "metrics.json", dump_json(metrics))
    return metrics


def _run_one(cfg: RunConfig, seed: int) -> tuple[int, dict | None, str | None]:
    try:
        record = execute(cfg, seed)
        metrics = write_record(record, cfg.out / cfg.algorithm / str(seed))
        return seed, metrics, None
    except Exception as exc:  # one failing seed must not sink the others
        log.exception("seed %s failed", seed)
        return seed, None, f"{type(exc).__name__}: {exc}"


def _sd(xs: Sequence[float]) -> float:
    return statistics.stdev(xs) if len(xs) > 1 else 0.0


def summarize(metrics: Sequence[dict]) -> dict:
    """Mean and sample SD of the front metrics across runs."""
    out: dict[str, Any] = {"n_runs": len(metrics)}
    for key in ("dominated_area", "hypervolume", "front_size"):
        vals = [m[key] for m in metrics if m.get(key) is not None]
        if vals:
            out[key] = {"mean": statistics.fmean(vals), "sd": _sd(vals)}
    return out


def cmd_run(config_path: str | Path, seeds: list[int] | None = None, out: str | None = None) -> int:
    try:
        raw = load_config(config_path)
        cfg = parse_config(raw, Path(config_path).resolve().parent, {"seeds": seeds, "out": out})
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    workers = max(1, int(os.environ.get(WORKERS_ENV, "1")))
    if workers > 1 and len(cfg.seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, [cfg] * len(cfg.seeds), cfg.seeds))
    else:
        results = [_run_one(cfg, s) for s in cfg.seeds]
    results.sort(key=lambda r: cfg.seeds.index(r[0]))
    ok = [m for _, m, err in results if err is None]
    failures = {str(s): err for s, _, err in results if err is not None}
    summary = {
        "algorithm": cfg.algorithm,
        "seeds": cfg.seeds,
        "runs": {str(s): m for s, m, _ in results if m is not None},
        "failures": failures,
        **summarize(ok),
    }
    atomic_write(cfg.out / cfg.algorithm / "summary.json", dump_json(summary))
    for s, m, err in results:
        if err is None:
            area = m["dominated_area"] if m["dominated_area"] is not None else m["hypervolume"]
            print(f"{cfg.algorithm} seed={s} front={m['front_size']} area={area:.6f}")
        else:
            print(f"{cfg.algorithm} seed={s} FAILED {err}", file=sys.stderr)
    return EXIT_RUNTIME if failures else EXIT_OK


def cmd_oracle(config_path: str | Path, out: str | None = None) -> int:
    try:
        raw = load_config(config_path)
        raw = dict(raw)
        if "algorithm" not in raw:  # the oracle needs only space and evaluator
            raw["algorithm"], raw["rs"] = "rs", {}
        cfg = parse_config(raw, Path(config_path).resolve().parent, {"out": out})
        space = build_space(cfg)
        evaluator = build_evaluator(cfg, space)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not evaluator.deterministic:
        print("oracle refused: the evaluator is noisy (sigma > 0); the oracle needs sigma = 0", file=sys.stderr)
        return EXIT_ORACLE
    try:
        front = alg.brute_force_front(space, evaluator, cfg.m)
    except EnumerationRefused as exc:
        print(f"oracle refused: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    norm = NormalizationSpec.from_spec(front.spec)
    metrics = {
        "front_size": len(front),
        "dominated_area": dominated_area_2d(front, norm) if cfg.m == 2 else None,
        "hypervolume": hypervolume(front, norm),
        "normalization": norm.to_dict(),
        "reference_point": [0.0] * cfg.m,
        "space": space_to_dict(space),
        "space_fingerprint": space_fingerprint(cfg, space),
    }
    atomic_write(cfg.out / "oracle_front.json", json.dumps(front.to_dict(), sort_keys=True, indent=1) + "\n")
    atomic_write(cfg.out / "oracle_metrics.json", dump_json(metrics))
    print(f"oracle front={len(front)} hypervolume={metrics['hypervolume']:.6f} -> {cfg.out}")
    return EXIT_OK


def _find_metrics(dirs: Sequence[str | Path]) -> list[Path]:
    found = []
    for d in dirs:
        d = Path(d)
        if (d / "metrics.json").is_file():
            found.append(d / "metrics.json")
        elif d.is_dir():
            found.extend(sorted(d.rglob("metrics.json")))
    return sorted(set(found))


def compare_runs(dirs: Sequence[str | Path]) -> dict:
    paths = _find_metrics(dirs)
    if not paths:
        raise ConfigError("run_dirs", "no metrics.json found")
    runs = [json.loads(p.read_text()) for p in paths]
    spaces = {r["space_fingerprint"] for r in runs}
    if len(spaces) > 1:
        raise ConfigError("run_dirs", f"runs come from {len(spaces)} different spaces; normalizations are incomparable")
    by_alg: dict[str, list[dict]] = {}
    for r in runs:
        by_alg.setdefault(r["algorithm"], []).append(r)
    table = {}
    for name in sorted(by_alg):
        group = sorted(by_alg[name], key=lambda r: r["seed"])
        entry = summarize(group)
        entry["seeds"] = [r["seed"] for r in group]
        axes = group[0]["histograms"].keys()
        entry["histograms"] = {a: np.sum([r["histograms"][a] for r in group], axis=0).tolist() for a in axes}
        table[name] = entry
    return {"space_fingerprint": spaces.pop(), "normalization": runs[0]["normalization"], "algorithms": table}


def comparison_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["algorithm", "n_runs", "dominated_area_mean", "dominated_area_sd", "hypervolume_mean", "hypervolume_sd"])
    for name, e in report["algorithms"].items():
        da = e.get("dominated_area", {})
        hv = e["hypervolume"]
        w.writerow([name, e["n_runs"], _cell(da.get("mean")), _cell(da.get("sd")), _cell(hv["mean"]), _cell(hv["sd"])])
    return buf.getvalue()


def _cell(v: float | None) -> str:
    return "" if v is None else repr(float(v))


def cmd_compare(run_dirs: Sequence[str], out: str | None = None) -> int:
    try:
        report = compare_runs(run_dirs)
    except ConfigError as exc:
        print(f"compare refused: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(out or ".")
    atomic_write(out_dir / "comparison.json", dump_json(report))
    atomic_write(out_dir / "comparison.csv", comparison_csv(report))
    sys.stdout.write(comparison_csv(report))
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="npg-search", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an algorithm for every configured seed")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, action="append", dest="seeds", help="override seeds (repeatable)")
    p_run.add_argument("--out", help="override the output directory")
    p_oracle = sub.add_parser("oracle", help="enumerate the space and write the exact Pareto front")
    p_oracle.add_argument("--config", required=True)
    p_oracle.add_argument("--out", help="override the output directory")
    p_cmp = sub.add_parser("compare", help="tabulate front metrics across run directories")
    p_cmp.add_argument("run_dirs", nargs="+")
    p_cmp.add_argument("--out", help="directory for comparison.csv/json (default: cwd)")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "run":
        return cmd_run(args.config, args.seeds, args.out)
    if args.command == "oracle":
        return cmd_oracle(args.config, args.out)
    return cmd_compare(args.run_dirs, args.out)


if __name__ == "__main__":
    raise SystemExit(main())
