#!/usr/bin/env python3
"""Regenerate the qualitative trend tables end to end.

Generates a synthetic six-market catalog, derives the lifetime and
correlation tables, then sweeps job length, memory footprint, and revocation
count. Prints one mean-completion table per sweep (plus deployment cost for
the revocation-count sweep) from the stacked decomposition files.

Usage: python scripts/reproduce_trends.py [--out DIR] [--seeds N]
"""

import argparse
import json
import sys
from collections import defaultdict
from pathlib import Path

from spotsim.cli import main as spotsim

GEN_SPEC = [
    {
        "market_id": f"m{i}",
        "on_demand_price": 1.0,
        "memory_gb": 192.0,
        "base_price": round(0.38 + 0.01 * i, 2),
        "spike_rate": 0.0015,
        "seed": 21 + i,
        "window_hours": 2160.0,
    }
    for i in range(6)
]

PSIWOFT = {"type": "psiwoft"}
CHECKPOINT = {"type": "checkpoint", "num_checkpoints": 4, "revocations_per_day": 2.0}
MIGRATION = {"type": "migration", "revocations_per_day": 2.0}
REPLICATION = {"type": "replication", "degree": 2, "revocations_per_day": 2.0}
ON_DEMAND = {"type": "on_demand"}


def check(rc, step):
    if rc != 0:
        sys.exit(f"step {step} failed with exit code {rc}")


def run_sweep(root, name, axis, values, policies, seeds):
    config = {
        "version": 1,
        "catalog": "traces/catalog.json",
        "workload": {
            "count": 1,
            "length_choices_hours": [24.0],
            "memory_choices_gb": [16.0],
            "seed": 3,
        },
        "policies": policies,
        "injector": {"mode": "probabilistic", "seed": 7},
        "seeds": seeds,
        "sweep": {"axis": axis, "values": values},
        "output": {"path": f"{name}/results.csv", "format": "csv"},
    }
    cfg_path = root / f"{name}.json"
    cfg_path.write_text(json.dumps(config, indent=2) + "\n")
    check(spotsim(["sweep", "--config", str(cfg_path), "--quiet"]), name)
    return root / name / "stacked.csv"


def load_stacked(path):
    """Sum the stacked categories back into (completion hours, cost) per cell."""
    hours = defaultdict(float)
    cost = defaultdict(float)
    for line in path.read_text().splitlines()[1:]:
        axis_value, policy, _, mean_hours, mean_usd = line.split(",")
        key = (axis_value, policy)
        if mean_hours:
            hours[key] += float(mean_hours)
        if mean_usd:
            cost[key] += float(mean_usd)
    return dict(hours), dict(cost)


def print_table(title, cells, values, policies):
    print(f"\n{title}")
    width = max(len(p) for p in policies) + 2
    print(" " * 12 + "".join(p.rjust(width) for p in policies))
    for v in values:
        row = "".join(f"{cells[(v, p)]:>{width}.2f}" for p in policies)
        print(f"{v:>10}  {row}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="trend_runs", help="working directory")
    parser.add_argument("--seeds", type=int, default=300, help="runs per cell")
    args = parser.parse_args()

    root = Path(args.out)
    root.mkdir(parents=True, exist_ok=True)
    spec_path = root / "genspec.json"
    spec_path.write_text(json.dumps(GEN_SPEC, indent=2) + "\n")
    traces = root / "traces"
    check(spotsim(["gen-traces", "--spec", str(spec_path), "--out", str(traces), "--quiet"]), "gen")
    check(spotsim(["analyze", "--catalog", str(traces / "catalog.json"), "--out", str(root / "tables"), "--quiet"]), "analyze")
    print(f"catalog, traces, and analytics tables under {root}")

    all_policies = [PSIWOFT, CHECKPOINT, MIGRATION, REPLICATION, ON_DEMAND]
    names = ["psiwoft", "checkpoint", "migration", "replication", "on_demand"]

    stacked = run_sweep(
        root, "by_length", "job_length", [6.0, 12.0, 24.0, 48.0], all_policies, args.seeds
    )
    hours, _ = load_stacked(stacked)
    print_table(
        "mean completion (h) by job length at 2 revocations/day",
        hours,
        [f"{v}" for v in (6.0, 12.0, 24.0, 48.0)],
        names,
    )

    stacked = run_sweep(
        root, "by_memory", "memory_footprint", [4.0, 8.0, 16.0, 32.0, 64.0],
        [PSIWOFT, CHECKPOINT, MIGRATION], args.seeds,
    )
    hours, _ = load_stacked(stacked)
    print_table(
        "mean completion (h) by memory footprint (GB), 24 h job",
        hours,
        [f"{v}" for v in (4.0, 8.0, 16.0, 32.0, 64.0)],
        ["psiwoft", "checkpoint", "migration"],
    )

    # restart-from-scratch policies cannot finish at the highest rates, so the
    # count axis compares the policies that always terminate
    stacked = run_sweep(
        root, "by_count", "revocation_count", [1.0, 2.0, 4.0, 8.0, 16.0],
        [PSIWOFT, CHECKPOINT, ON_DEMAND], args.seeds,
    )
    hours, cost = load_stacked(stacked)
    values = [f"{v}" for v in (1.0, 2.0, 4.0, 8.0, 16.0)]
    cols = ["psiwoft", "checkpoint", "on_demand"]
    print_table("mean completion (h) by revocations/day, 24 h job", hours, values, cols)
    print_table("mean deployment cost (USD) by revocations/day", cost, values, cols)


if __name__ == "__main__":
    main()
