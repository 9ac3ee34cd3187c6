#!/usr/bin/env python3
"""Hybrid-method bound on the hard family versus the closed form and the measured algorithm cost."""

import argparse

from qgrad.bounds import (HardFamily, gradient_lower_bound, hybrid_constant, hybrid_lower_bound,
                          radial_points, sandwich_check)
from qgrad.gradient import GradientJob


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c", type=float, default=1.0)
    args = ap.parse_args()
    c = args.c
    print(" d    eps   hybrid T  closed form  c sqrt(d)/(4 eps)  planned units  sandwich")
    for d in (1, 2, 4, 8):
        for eps in (0.1, 0.05, 0.01):
            T = hybrid_lower_bound(HardFamily(d, eps, c).table(radial_points(d, c))).value
            units = GradientJob.smooth(d, eps, 1 / 3, c).planned_units
            ok = sandwich_check(units, T, d, eps)["ok"]
            print(f"{d:2d} {eps:6.2f} {T:10.3f} {hybrid_constant(d, eps, c):12.3f} "
                  f"{gradient_lower_bound(c, eps, d):18.3f} {units:14d}  {ok}")


if __name__ == "__main__":
    main()
