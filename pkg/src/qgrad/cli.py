"""Command-line entry point: ``qgrad <subcommand> [--config F] [--seed S] [--out P] [--trials N]``.

Exit codes: 0 success, 2 validation or configuration error, 3 resource guard.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .bounds import HardFamily, gradient_lower_bound, hybrid_constant, hybrid_lower_bound, radial_points
from .errors import QGradError, ResourceError
from .gradient import GradientJob, prepare
from .grid import GridSpec, grid_labels
from .harness import ExperimentConfig, records_to_csv, run_scaling_experiment, sin_sum, sin_sum_gradient
from .oracles import PhaseOracle, QueryLedger, build_probability_oracle, probability_to_phase
from .stencil import central_coefficients, exact_coefficients


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise argparse.ArgumentTypeError(f"cannot read config {path}: {exc}")
    if not isinstance(data, dict):
        raise argparse.ArgumentTypeError("config must be a JSON object")
    return data


def _emit(args, payload) -> None:
    text = payload if isinstance(payload, str) else json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_grid(args, cfg: dict) -> None:
    grid = GridSpec.from_dict({"n": args.n, "d": 1, **cfg})
    _emit(args, {"grid": grid.to_dict(), "labels": [float(v) for v in grid_labels(grid.n)]})


def cmd_stencil(args, cfg: dict) -> None:
    m = int(cfg.get("m", args.m))
    scheme = central_coefficients(m)
    out = {"m": m, "coefficients": [float(a) for a in scheme.coefficients],
           "l1_half": scheme.l1_half(), "log_bound": math.log(m) + 1}
    if m <= 12:
        out["exact_positive"] = [str(a) for a in exact_coefficients(m)]
    _emit(args, out)


def cmd_convert(args, cfg: dict) -> None:
    rng = np.random.default_rng(args.seed)
    p = np.asarray(cfg.get("p", rng.uniform(0, 1, 4)), dtype=float)
    eps = float(cfg.get("eps", args.eps))
    t = float(cfg.get("t", 1.0))
    oracle = build_probability_oracle(p)
    conv = probability_to_phase(oracle, eps, t=t)
    _emit(args, {"p": p.tolist(), "eps": eps, "t": t, "M": conv.M, "k": conv.k,
                 "max_deviation": conv.max_deviation, "probability_queries": oracle.ledger.probability_queries,
                 "query_constant": conv.query_constant})


def cmd_gradient(args, cfg: dict) -> None:
    d = int(cfg.get("d", args.d))
    eps = float(cfg.get("eps", args.eps))
    rho = float(cfg.get("rho", 1 / 3))
    c = float(cfg.get("c", 1.0))
    y = cfg.get("center", [0.2] * d)
    job = GradientJob.smooth(d, eps, rho, c, y, scaling=cfg.get("scaling", "tight"))
    prepared = prepare(sin_sum, job)
    reports = []
    for t in range(args.trials):
        oracle = PhaseOracle(sin_sum, QueryLedger(keep_notes=False))
        reports.append(prepared.run(args.seed + t, oracle, sin_sum_gradient).to_dict())
    _emit(args, {"function": "sin(sum x)", "reports": reports})


def cmd_vqe(args, cfg: dict) -> None:
    from .circuits import VqeInstance, plan_vqe_gradient, sigma_y_instance

    inst = VqeInstance.from_dict(cfg["instance"]) if "instance" in cfg else sigma_y_instance()
    x = cfg.get("x", [math.pi / 8] * inst.d)
    plan = plan_vqe_gradient(inst, x, float(cfg.get("eps", args.eps)), float(cfg.get("rho", 1 / 3)),
                             float(cfg.get("c", 2.0)))
    reports = [plan.run(args.seed + t).to_dict() for t in range(args.trials)]
    _emit(args, {"conversion_M": plan.conversion_M, "conversion_eps": plan.conversion_eps,
                 "certified_deviation": plan.certified_deviation, "reports": reports})


def cmd_bounds(args, cfg: dict) -> None:
    c = float(cfg.get("c", args.c))
    eps = float(cfg.get("eps", args.eps))
    d = int(cfg.get("d", args.d))
    fam = HardFamily(d, eps, c)
    hb = hybrid_lower_bound(fam.table(radial_points(d, c)))
    _emit(args, {"c": c, "eps": eps, "d": d, "gradient_lower_bound": gradient_lower_bound(c, eps, d),
                 "hybrid_bound": hb.value, "hybrid_closed_form": hybrid_constant(d, eps, c),
                 "sum_bound": fam.sum_bound()})


def cmd_bench(args, cfg: dict) -> None:
    if args.trials is not None:
        cfg = {**cfg, "trials": args.trials}
    if args.seed is not None:
        cfg = {**cfg, "seed": args.seed}
    records = run_scaling_experiment(ExperimentConfig.from_dict(cfg))
    if args.out and args.out.endswith(".json"):
        _emit(args, [r.__dict__ for r in records])
    else:
        _emit(args, records_to_csv(records))


COMMANDS = {"grid": cmd_grid, "stencil": cmd_stencil, "convert": cmd_convert, "gradient": cmd_gradient,
            "vqe": cmd_vqe, "bounds": cmd_bounds, "bench": cmd_bench}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", help="output path (.csv or .json); stdout when omitted")
    common.add_argument("--trials", type=int, default=None)
    parser = argparse.ArgumentParser(prog="qgrad", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("grid", parents=[common], help="list grid labels")
    p.add_argument("--n", type=int, default=3)
    p = sub.add_parser("stencil", parents=[common], help="central-difference coefficients")
    p.add_argument("--m", type=int, default=2)
    p = sub.add_parser("convert", parents=[common], help="probability-to-phase conversion")
    p.add_argument("--eps", type=float, default=1e-2)
    p = sub.add_parser("gradient", parents=[common], help="smooth gradient of sin(sum x)")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--eps", type=float, default=0.05)
    p = sub.add_parser("vqe", parents=[common], help="VQE objective gradient")
    p.add_argument("--eps", type=float, default=0.05)
    p = sub.add_parser("bounds", parents=[common], help="lower-bound evaluation")
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--d", type=int, default=4)
    sub.add_parser("bench", parents=[common], help="scaling experiment to CSV")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config)
        if args.command != "bench":
            args.seed = 0 if args.seed is None else args.seed
            args.trials = 1 if args.trials is None else args.trials
        COMMANDS[args.command](args, cfg)
    except ResourceError as exc:
        print(f"qgrad: resource guard: {exc}", file=sys.stderr)
        return 3
    except (QGradError, argparse.ArgumentTypeError, KeyError, TypeError) as exc:
        print(f"qgrad: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
