#!/usr/bin/env python3
"""Cost-versus-accuracy and cost-versus-dimension sweeps for every estimator.

Writes the CSV and prints log-log slopes against 1/eps and per-repetition d-ratios.
"""

import argparse
from pathlib import Path

from qgrad.harness import ExperimentConfig, loglog_slope, mean_cost, run_scaling_experiment, write_csv

HERE = Path(__file__).parent


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=HERE / "configs" / "scaling.json")
    ap.add_argument("--out", default="scaling.csv")
    args = ap.parse_args()
    cfg = ExperimentConfig.load(args.config)
    records = run_scaling_experiment(cfg)
    write_csv(records, args.out)
    inv = [1 / e for e in cfg.eps_values]
    print(f"{'method':22s} {'d':>2s} {'slope':>7s}  per-rep cost at eps={cfg.eps_values[-1]}")
    for method in cfg.methods:
        for d in cfg.dims:
            costs = [mean_cost(records, method, d, e) for e in cfg.eps_values]
            reps = max(r.repetitions for r in records if r.method == method and r.d == d) or 1
            print(f"{method:22s} {d:2d} {loglog_slope(inv, costs):7.3f}  {costs[-1] / reps:.4g}")
    skipped = sum(r.status != "ok" for r in records)
    print(f"{len(records)} records ({skipped} cost-only) -> {args.out}")


if __name__ == "__main__":
    main()
