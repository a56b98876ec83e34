"""Regenerate the bundled configs under configs/.

Writes the full matrix of tune configs (two tasks x four optimizer
families x three update rules), runs each one to produce the frozen
tuned specs in configs/tuned/, and emits the robustness / scan /
train-toy configs that reference them.  Everything is deterministic, so
rerunning this script must reproduce the tree byte for byte.

Usage: python3 scripts/make_bundles.py [--workers N]
"""
from __future__ import annotations

import argparse
import json
import shutil
import sys
import tempfile
from pathlib import Path

from optbench.cli import main as cli_main
from optbench.config import distribution_to_dict
from optbench.harness import default_eval_distribution
from optbench.optim import FAMILIES, UPDATE_KINDS

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"

ROBUSTNESS_SEED = 2024
TRAIN_TOY_MASTER_SEED = 2024

# The rosenbrock tasks are pinned at the harder curvature the stock
# evaluation distribution is centered on, so tuned rates remain usable
# under robustness sampling.
TASKS = {
    "convex2d": {
        "function": "convex2d",
        "alpha": 1.0,
        "beta": 20.0,
        "x0": [50.0, 50.0],
        "iterations": 100,
    },
    "rosenbrock": {
        "function": "rosenbrock",
        "alpha": 1.0,
        "beta": 60.0,
        "x0": [0.5, 3.0],
        "iterations": 100,
    },
}


def write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def tune_configs() -> list[Path]:
    paths = []
    for function, task in TASKS.items():
        for family in FAMILIES:
            for kind in UPDATE_KINDS:
                doc = {
                    "schema_version": 1,
                    "command": "tune",
                    "task": task,
                    "family": family,
                    "update_rule": kind,
                }
                path = CONFIGS / "tune" / f"{function}-{family}-{kind}.json"
                write_json(path, doc)
                paths.append(path)
    return paths


def tuned_specs(tune_paths: list[Path], workers: int) -> None:
    out_root = Path(tempfile.mkdtemp(prefix="optbench-tune-"))
    try:
        for config in tune_paths:
            out_dir = out_root / config.stem
            code = cli_main(
                [
                    "tune",
                    "--config",
                    str(config),
                    "--out",
                    str(out_dir),
                    "--parallelism",
                    str(workers),
                ]
            )
            if code != 0:
                raise SystemExit(f"tuning {config.name} failed with exit code {code}")
            target = CONFIGS / "tuned" / f"{config.stem}.json"
            target.parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(out_dir / "best.json", target)
            print(f"tuned {config.stem}", file=sys.stderr)
    finally:
        shutil.rmtree(out_root, ignore_errors=True)


def robustness_configs() -> None:
    for function in TASKS:
        dist = distribution_to_dict(default_eval_distribution(function))
        for family in FAMILIES:
            for kind in UPDATE_KINDS:
                name = f"{function}-{family}-{kind}"
                doc = {
                    "schema_version": 1,
                    "command": "robustness",
                    "distribution": dist,
                    "optimizer": {"path": f"../tuned/{name}.json"},
                    "n": 100,
                    "seed": ROBUSTNESS_SEED,
                }
                write_json(CONFIGS / "robustness" / f"{name}.json", doc)


def scan_configs() -> None:
    for function, task in TASKS.items():
        for kind in ("additive", "hybrid"):
            name = f"{function}-sgd-{kind}"
            doc = {
                "schema_version": 1,
                "command": "scan",
                "task": task,
                "optimizer": {"path": f"../tuned/{name}.json"},
                "grid_size": 25,
            }
            write_json(CONFIGS / "scan" / f"{name}.json", doc)


def train_toy_configs() -> None:
    for kind in UPDATE_KINDS:
        doc = {
            "schema_version": 1,
            "command": "train-toy",
            "family": "sgd",
            "update_rule": kind,
            "n_configs": 10,
            "master_seed": TRAIN_TOY_MASTER_SEED,
        }
        write_json(CONFIGS / "train-toy" / f"sgd-{kind}.json", doc)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workers", type=int, default=4, help="parallelism for the tuning runs")
    args = parser.parse_args()
    tune_paths = tune_configs()
    robustness_configs()
    scan_configs()
    train_toy_configs()
    tuned_specs(tune_paths, args.workers)
    print(f"wrote {len(list(CONFIGS.rglob('*.json')))} configs under {CONFIGS}", file=sys.stderr)


if __name__ == "__main__":
    main()
