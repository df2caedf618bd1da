"""Experiment harness: analyze catalogs, run simulations and sweeps, emit tables.

Configuration is a JSON file with a version field; relative paths inside it
resolve against the file's own directory. Every run with identical inputs,
seeds, and flags produces byte-identical output files, regardless of the
SPOTSIM_THREADS setting.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .engine import (
    EngineSettings,
    InjectionMode,
    JobOutcome,
    RevocationInjector,
    simulate_job,
)
from .errors import ConfigError, ParseError, SimulationError, ValidationError
from .markets import MarketAnalytics, load_catalog
from .policies import (
    CheckpointConfig,
    MigrationConfig,
    PolicyConfig,
    ReplicationConfig,
    parse_policy,
    policy_type_name,
)
from .trace import SyntheticTraceSpec, generate_synthetic, write_trace_csv
from .workload import Job, WorkloadSpec, generate_workload, load_workload

RESULT_FIELDS = (
    "scenario_id",
    "policy",
    "job_id",
    "seed",
    "completion_hours",
    "useful_h",
    "startup_h",
    "checkpoint_h",
    "recovery_h",
    "reexec_h",
    "total_cost_usd",
    "useful_cost",
    "startup_cost",
    "checkpoint_cost",
    "recovery_cost",
    "reexec_cost",
    "buffer_cost",
    "num_revocations",
    "used_fallback",
)

TIME_CATEGORIES = ("useful_h", "startup_h", "checkpoint_h", "recovery_h", "reexec_h")
COST_CATEGORIES = (
    "useful_cost",
    "startup_cost",
    "checkpoint_cost",
    "recovery_cost",
    "reexec_cost",
    "buffer_cost",
)

SWEEP_AXES = ("job_length", "memory_footprint", "revocation_count")

_MARKET_ID_RE = re.compile(r"^[A-Za-z0-9._-]+$")


@dataclass
class ExperimentConfig:
    """In-memory form of one experiment file, paths already resolved."""

    catalog_path: Path
    jobs: list[Job]
    policies: list[PolicyConfig]
    injector: RevocationInjector
    seeds: int
    startup_seconds: float
    sweep_axis: str | None
    sweep_values: tuple | None
    output_path: Path
    output_format: str
    echo: dict


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _load_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(f"cannot read: {exc}", path=str(path)) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}", path=str(path)) from exc


def _reject_unknown(obj: dict, allowed, where: str) -> None:
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")


def parse_injector(obj) -> RevocationInjector:
    if not isinstance(obj, dict):
        raise ConfigError("injector must be an object")
    _reject_unknown(obj, ("mode", "seed", "revocations_per_day", "exact_count"), "injector")
    mode_raw = obj.get("mode", "probabilistic")
    try:
        mode = InjectionMode(mode_raw)
    except ValueError:
        raise ConfigError(f"unknown injector mode {mode_raw!r}") from None
    seed = obj.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("injector seed must be an integer")
    rate = obj.get("revocations_per_day", 0.0)
    if not _is_num(rate):
        raise ConfigError("injector revocations_per_day must be a number")
    exact = obj.get("exact_count", False)
    if not isinstance(exact, bool):
        raise ConfigError("injector exact_count must be a boolean")
    return RevocationInjector(
        mode=mode, seed=seed, revocations_per_day=float(rate), exact_count=exact
    )


def _parse_workload(obj, base: Path) -> list[Job]:
    if isinstance(obj, str):
        return load_workload(base / obj)
    if isinstance(obj, dict):
        _reject_unknown(
            obj, ("count", "length_choices_hours", "memory_choices_gb", "seed"), "workload"
        )
        try:
            spec = WorkloadSpec(**obj)
        except TypeError as exc:
            raise ConfigError(f"workload: {exc}") from exc
        return generate_workload(spec)
    raise ConfigError("workload must be a CSV path or an inline generator object")


def load_experiment(path) -> ExperimentConfig:
    path = Path(path)
    raw = _load_json(path)
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: experiment config must be a JSON object")
    base = path.parent
    _reject_unknown(
        raw,
        (
            "version",
            "catalog",
            "workload",
            "policies",
            "injector",
            "seeds",
            "startup_seconds",
            "sweep",
            "output",
        ),
        str(path),
    )
    if raw.get("version") != 1:
        raise ConfigError(f"{path}: config version must be 1")
    if not isinstance(raw.get("catalog"), str):
        raise ConfigError(f"{path}: catalog must be a path string")
    if "workload" not in raw:
        raise ConfigError(f"{path}: missing workload")
    policies_raw = raw.get("policies")
    if not isinstance(policies_raw, list) or not policies_raw:
        raise ConfigError(f"{path}: policies must be a non-empty array")
    policies = [parse_policy(p) for p in policies_raw]
    injector = parse_injector(raw.get("injector", {}))
    seeds = raw.get("seeds", 1)
    if not isinstance(seeds, int) or isinstance(seeds, bool) or seeds < 1:
        raise ConfigError(f"{path}: seeds must be an integer >= 1")
    startup = raw.get("startup_seconds", 120.0)
    if not _is_num(startup) or startup < 0:
        raise ConfigError(f"{path}: startup_seconds must be a number >= 0")

    sweep_axis = None
    sweep_values = None
    if "sweep" in raw:
        sweep = raw["sweep"]
        if not isinstance(sweep, dict):
            raise ConfigError(f"{path}: sweep must be an object")
        _reject_unknown(sweep, ("axis", "values"), "sweep")
        sweep_axis = sweep.get("axis")
        if sweep_axis not in SWEEP_AXES:
            raise ConfigError(f"{path}: sweep axis must be one of {', '.join(SWEEP_AXES)}")
        values = sweep.get("values")
        if not isinstance(values, list) or not values:
            raise ConfigError(f"{path}: sweep values must be a non-empty array")
        for v in values:
            if not _is_num(v) or v <= 0:
                raise ConfigError(f"{path}: sweep values must be positive numbers")
        sweep_values = tuple(values)

    output = raw.get("output", {})
    if not isinstance(output, dict):
        raise ConfigError(f"{path}: output must be an object")
    _reject_unknown(output, ("path", "format"), "output")
    out_path = output.get("path", "results.csv")
    if not isinstance(out_path, str):
        raise ConfigError(f"{path}: output path must be a string")
    out_format = output.get("format", "csv")
    if out_format not in ("csv", "json"):
        raise ConfigError(f"{path}: output format must be csv or json")

    return ExperimentConfig(
        catalog_path=base / raw["catalog"],
        jobs=_parse_workload(raw["workload"], base),
        policies=policies,
        injector=injector,
        seeds=seeds,
        startup_seconds=float(startup),
        sweep_axis=sweep_axis,
        sweep_values=sweep_values,
        output_path=base / out_path,
        output_format=out_format,
        echo=raw,
    )


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_lines(path: Path, lines: list[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _row(scenario_id: str, policy_label: str, job: Job, seed: int, out: JobOutcome) -> dict:
    t = out.time_decomposition
    c = out.cost_decomposition
    return {
        "scenario_id": scenario_id,
        "policy": policy_label,
        "job_id": job.job_id,
        "seed": seed,
        "completion_hours": out.completion_time_hours,
        "useful_h": t.useful,
        "startup_h": t.startup,
        "checkpoint_h": t.checkpoint,
        "recovery_h": t.recovery,
        "reexec_h": t.reexecution,
        "total_cost_usd": out.total_cost_usd,
        "useful_cost": c.useful,
        "startup_cost": c.startup,
        "checkpoint_cost": c.checkpoint,
        "recovery_cost": c.recovery,
        "reexec_cost": c.reexecution,
        "buffer_cost": c.buffer,
        "num_revocations": out.num_revocations,
        "used_fallback": out.used_fallback,
    }


def policy_labels(policies: list[PolicyConfig]) -> list[tuple[str, PolicyConfig]]:
    """Label each policy by type name; repeats get a 1-based position suffix."""
    names = [policy_type_name(p) for p in policies]
    labeled = []
    seen: dict[str, int] = {}
    for name, policy in zip(names, policies):
        if names.count(name) == 1:
            labeled.append((name, policy))
        else:
            seen[name] = seen.get(name, 0) + 1
            labeled.append((f"{name}-{seen[name]}", policy))
    return labeled


def _thread_count() -> int:
    raw = os.environ.get("SPOTSIM_THREADS")
    if raw is None or not raw.strip():
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"SPOTSIM_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError("SPOTSIM_THREADS must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def _run_cell(payload) -> list[dict]:
    scenario_id, label, policy, jobs, analytics, injector, run_seeds, settings = payload
    rows = []
    for job in jobs:
        for seed in run_seeds:
            outcome = simulate_job(job, policy, analytics, injector, seed=seed, settings=settings)
            rows.append(_row(scenario_id, label, job, seed, outcome))
    return rows


def _apply_axis(axis: str, value, jobs, labeled, injector):
    """Produce one sweep cell's jobs, policies, and injector for an axis value."""
    if axis == "job_length":
        jobs = [replace(j, execution_length_hours=float(value)) for j in jobs]
    elif axis == "memory_footprint":
        jobs = [replace(j, memory_footprint_gb=float(value)) for j in jobs]
    else:
        labeled = [
            (
                name,
                replace(p, revocations_per_day=float(value))
                if isinstance(p, (CheckpointConfig, MigrationConfig, ReplicationConfig))
                else p,
            )
            for name, p in labeled
        ]
        if injector.mode is InjectionMode.FIXED_RATE:
            injector = replace(injector, revocations_per_day=float(value))
    return jobs, labeled, injector


def _write_results(path: Path, fmt: str, rows: list[dict], echo: dict) -> None:
    if fmt == "csv":
        lines = [",".join(RESULT_FIELDS)]
        lines.extend(",".join(_fmt(r[f]) for f in RESULT_FIELDS) for r in rows)
        _write_lines(path, lines)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {"results": rows, "config_echo": echo}
        path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _mean(values: list[float]) -> float:
    return statistics.fmean(values) if values else 0.0


def _write_stacked(path: Path, cells: list[tuple[str, str, list[dict]]]) -> None:
    """One row per (cell, category): time categories fill mean_hours, cost ones mean_usd."""
    lines = ["axis_value,policy,category,mean_hours,mean_usd"]
    for axis_value, label, rows in cells:
        for cat in TIME_CATEGORIES:
            m = _mean([r[cat] for r in rows])
            lines.append(f"{axis_value},{label},{cat},{repr(m)},")
        for cat in COST_CATEGORIES:
            m = _mean([r[cat] for r in rows])
            lines.append(f"{axis_value},{label},{cat},,{repr(m)}")
    _write_lines(path, lines)


def _print_summaries(rows: list[dict], order: list[tuple[str, str]]) -> None:
    for scenario_id, label in order:
        cell = [r for r in rows if r["scenario_id"] == scenario_id and r["policy"] == label]
        if not cell:
            continue
        comp = [r["completion_hours"] for r in cell]
        cost = [r["total_cost_usd"] for r in cell]
        print(
            f"scenario={scenario_id} policy={label} runs={len(cell)} "
            f"mean_completion_h={statistics.fmean(comp):.4f} "
            f"std_completion_h={statistics.pstdev(comp):.4f} "
            f"mean_cost_usd={statistics.fmean(cost):.4f} "
            f"std_cost_usd={statistics.pstdev(cost):.4f}"
        )


def _execute(args, want_sweep: bool) -> int:
    cfg = load_experiment(args.config)
    if want_sweep and cfg.sweep_axis is None:
        raise ConfigError(f"{args.config}: sweep command needs a sweep section in the config")
    analytics = MarketAnalytics.build(load_catalog(cfg.catalog_path))
    labeled = policy_labels(cfg.policies)
    run_seeds = [args.seed_base + i for i in range(cfg.seeds)]
    settings = EngineSettings(startup_seconds=cfg.startup_seconds)

    # cells: (scenario_id, axis_value_str, label, policy, jobs, injector)
    cells = []
    if want_sweep:
        for value in cfg.sweep_values:
            jobs_v, labeled_v, injector_v = _apply_axis(
                cfg.sweep_axis, value, cfg.jobs, labeled, cfg.injector
            )
            scenario = f"{cfg.sweep_axis}={_fmt(value)}"
            for label, policy in labeled_v:
                cells.append((scenario, _fmt(value), label, policy, jobs_v, injector_v))
    else:
        for label, policy in labeled:
            cells.append(("base", "", label, policy, cfg.jobs, cfg.injector))

    payloads = [
        (scenario, label, policy, jobs, analytics, injector, run_seeds, settings)
        for scenario, _, label, policy, jobs, injector in cells
    ]
    threads = _thread_count()
    if threads > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(payloads))) as pool:
            per_cell = list(pool.map(_run_cell, payloads))
    else:
        per_cell = [_run_cell(p) for p in payloads]

    rows = [row for cell_rows in per_cell for row in cell_rows]
    fmt = args.format or cfg.output_format
    out_path = cfg.output_path
    if args.format and out_path.suffix.lstrip(".") not in ("", fmt):
        out_path = out_path.with_suffix(f".{fmt}")
    _write_results(out_path, fmt, rows, cfg.echo)
    written = [out_path]
    if want_sweep:
        stacked_path = out_path.parent / "stacked.csv"
        stacked_cells = [
            (cell[1], cell[2], cell_rows) for cell, cell_rows in zip(cells, per_cell)
        ]
        _write_stacked(stacked_path, stacked_cells)
        written.append(stacked_path)
    if not args.quiet:
        _print_summaries(rows, [(c[0], c[2]) for c in cells])
        for p in written:
            print(f"wrote {p}")
    return 0


def cmd_simulate(args) -> int:
    return _execute(args, want_sweep=False)


def cmd_sweep(args) -> int:
    return _execute(args, want_sweep=True)


def cmd_analyze(args) -> int:
    markets = load_catalog(Path(args.catalog))
    analytics = MarketAnalytics.build(markets)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    lines = ["market_id,mttr_hours,censored"]
    for m in analytics.markets:
        est = analytics.lifetimes[m.market_id]
        lines.append(f"{m.market_id},{repr(est.mttr_hours)},{_fmt(est.censored)}")
    _write_lines(out_dir / "lifetimes.csv", lines)

    ids = [m.market_id for m in analytics.markets]
    lines = ["market_id" + "".join(f",{i}" for i in ids)]
    for a in ids:
        row = [a] + [repr(analytics.correlation.get(a, b)) for b in ids]
        lines.append(",".join(row))
    _write_lines(out_dir / "correlation.csv", lines)

    if not args.quiet:
        print(f"wrote {out_dir / 'lifetimes.csv'}")
        print(f"wrote {out_dir / 'correlation.csv'}")
    return 0


_GEN_DEFAULTS = {
    "vcpus": 48,
    "window_hours": 2160.0,
    "sample_interval_seconds": 3600,
    "spike_duration_hours": 1.0,
    "instance_type": "synthetic",
    "az": "zone-a",
    "region": "local",
}


def cmd_gen_traces(args) -> int:
    spec_path = Path(args.spec)
    raw = _load_json(spec_path)
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{spec_path}: trace spec must be a non-empty JSON array")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    catalog = []
    seen: set[str] = set()
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise ConfigError(f"{spec_path}: entry #{i} is not an object")
        required = ("market_id", "on_demand_price", "memory_gb", "base_price", "spike_rate", "seed")
        _reject_unknown(entry, required + tuple(_GEN_DEFAULTS), f"{spec_path}: entry #{i}")
        for key in required:
            if key not in entry:
                raise ConfigError(f"{spec_path}: entry #{i} missing key {key!r}")
        market_id = entry["market_id"]
        if not isinstance(market_id, str) or not _MARKET_ID_RE.match(market_id):
            raise ConfigError(f"{spec_path}: entry #{i}: bad market_id")
        if market_id in seen:
            raise ConfigError(f"{spec_path}: duplicate market_id {market_id!r}")
        seen.add(market_id)
        if not isinstance(entry["seed"], int) or isinstance(entry["seed"], bool):
            raise ConfigError(f"{spec_path}: entry #{i}: seed must be an integer")
        for key in ("on_demand_price", "memory_gb", "base_price", "spike_rate"):
            if not _is_num(entry[key]):
                raise ConfigError(f"{spec_path}: entry #{i}: {key} must be a number")
        opts = {k: entry.get(k, v) for k, v in _GEN_DEFAULTS.items()}
        spec = SyntheticTraceSpec(
            base_price=float(entry["base_price"]),
            on_demand_price=float(entry["on_demand_price"]),
            spike_rate=float(entry["spike_rate"]),
            spike_duration_hours=float(opts["spike_duration_hours"]),
            sample_interval_seconds=int(opts["sample_interval_seconds"]),
            window_hours=float(opts["window_hours"]),
            seed=entry["seed"],
        )
        trace = generate_synthetic(spec, market_id=market_id)
        write_trace_csv(trace, out_dir / f"{market_id}.csv")
        catalog.append(
            {
                "market_id": market_id,
                "instance_type": str(opts["instance_type"]),
                "az": str(opts["az"]),
                "region": str(opts["region"]),
                "on_demand_price": float(entry["on_demand_price"]),
                "memory_gb": float(entry["memory_gb"]),
                "vcpus": int(opts["vcpus"]),
                "trace_file": f"{market_id}.csv",
            }
        )

    catalog_path = out_dir / "catalog.json"
    catalog_path.write_text(json.dumps(catalog, indent=2) + "\n", encoding="utf-8")
    if not args.quiet:
        print(f"wrote {len(catalog)} trace files and {catalog_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed-base", type=int, default=0, help="offset added to every run seed")
    common.add_argument(
        "--format", choices=("csv", "json"), default=None, help="override the output format"
    )
    common.add_argument("--quiet", action="store_true", help="suppress summary output")

    parser = argparse.ArgumentParser(
        prog="spotsim",
        description="Trace-driven simulator for transient cloud capacity provisioning policies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="derive lifetime and correlation tables")
    p.add_argument("--catalog", required=True, help="market catalog JSON")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", parents=[common], help="run one experiment config")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", parents=[common], help="run an axis sweep from a config")
    p.add_argument("--config", required=True, help="experiment config JSON with a sweep section")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen-traces", parents=[common], help="generate synthetic traces + catalog")
    p.add_argument("--spec", required=True, help="JSON array of per-market generator specs")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_gen_traces)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except (ParseError, ValidationError, ConfigError) as exc:
        print(f"spotsim: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"spotsim: error: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"spotsim: error: {exc}", file=sys.stderr)
        return 3


def run() -> None:
    sys.exit(main(sys.argv[1:]))
