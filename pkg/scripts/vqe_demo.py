#!/usr/bin/env python3
"""Gradient of a VQE objective through the converted Hadamard-test oracle."""

import argparse
import json
import math

from qgrad.circuits import VqeInstance, plan_vqe_gradient, sigma_y_instance


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", help="JSON with an 'instance' record and optional x, eps")
    ap.add_argument("--trials", type=int, default=30)
    args = ap.parse_args()
    cfg = json.load(open(args.config)) if args.config else {}
    inst = VqeInstance.from_dict(cfg["instance"]) if "instance" in cfg else sigma_y_instance()
    x = cfg.get("x", [math.pi / 8] * inst.d)
    eps = cfg.get("eps", 0.05)
    plan = plan_vqe_gradient(inst, x, eps, 1 / 3)
    reports = [plan.run(s) for s in range(args.trials)]
    wins = sum(r.err_inf <= eps for r in reports)
    r = reports[0]
    print(f"truth {r.truth.tolist()}  first estimate {r.estimate.tolist()}")
    print(f"{wins}/{args.trials} runs within eps={eps}")
    print(f"per run: {r.phase_query_units} phase units, {r.probability_queries} probability queries "
          f"(M={plan.conversion_M}, per-query accuracy {plan.conversion_eps:.2e}, "
          f"certified deviation {plan.certified_deviation:.1e})")


if __name__ == "__main__":
    main()
