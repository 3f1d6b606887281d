#!/usr/bin/env python3
"""Run the desk-scale benchmark on both array geometries and print the
mean-mse table per estimator.

Equivalent to `covcast run` on configs/desk_ula.cfg and
configs/desk_random.cfg, kept as a single script for convenience.
"""

import argparse
import sys
import time
from pathlib import Path

from covcast.config import parse_config
from covcast.harness import emit_csv, run_benchmark, strip_runtimes, summarize

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def run_one(config_path: Path, out_path: Path, workers: int) -> None:
    config = parse_config(config_path)
    start = time.time()
    records = run_benchmark(config, n_workers=workers)
    elapsed = time.time() - start
    emit_csv(strip_runtimes(records), out_path)
    print(f"\n{config_path.name}: {len(records)} records in {elapsed:.1f} s -> {out_path}")
    print(f"{'estimator':<38s} {'mean mse':>12s} {'n':>5s}")
    for (estimator, metric, k), cell in sorted(summarize(records).items()):
        label = f"{estimator}/{metric}" if metric else estimator
        if cell.count == 0:
            print(f"K={k} {label:<35s} {'(all failed)':>12s}")
        else:
            print(f"K={k} {label:<35s} {cell.mean_mse:>12.4f} {cell.count:>5d}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", type=Path, default=Path("results"))
    parser.add_argument("--workers", type=int, default=4)
    args = parser.parse_args()

    args.out_dir.mkdir(parents=True, exist_ok=True)
    run_one(CONFIG_DIR / "desk_ula.cfg", args.out_dir / "desk_ula.csv", args.workers)
    run_one(CONFIG_DIR / "desk_random.cfg", args.out_dir / "desk_random.csv", args.workers)
    return 0


if __name__ == "__main__":
    sys.exit(main())
