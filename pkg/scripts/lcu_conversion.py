#!/usr/bin/env python3
"""Probability-to-phase conversion: certified deviation and query count against eps."""

import argparse
import math

import numpy as np

from qgrad.oracles import asymptotic_M, build_probability_oracle, lcu_beta, probability_to_phase


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--system-qubits", type=int, default=2)
    args = ap.parse_args()
    p = np.random.default_rng(args.seed).uniform(0, 1, 1 << args.system_qubits)
    print("   eps     M  M(asym)  deviation   queries  queries/log2(1/eps)  ||beta||_1")
    for eps in (1e-1, 1e-2, 1e-3, 1e-4, 1e-6):
        orc = build_probability_oracle(p)
        conv = probability_to_phase(orc, eps)
        q = orc.ledger.probability_queries
        print(f"{eps:7.0e} {conv.M:4d} {asymptotic_M(eps):8.2f}  {conv.max_deviation:9.2e} {q:8d} "
              f"{q / math.log2(1 / eps):18.1f}  {lcu_beta(conv.M).l1:10.4f}")


if __name__ == "__main__":
    main()
