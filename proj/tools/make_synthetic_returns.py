#!/usr/bin/env python3
"""Writes a synthetic monthly returns file (date, stock, bond, cpi) with two
high-inflation episodes, for exercising the filter/bootstrap pipeline without
proprietary data."""

import argparse
import csv

import numpy as np


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--start", type=int, default=1926)
    ap.add_argument("--end", type=int, default=2023)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    rows = []
    for year in range(args.start, args.end + 1):
        for month in range(1, 13):
            if 1940 <= year <= 1951 or 1968 <= year <= 1982:
                infl = 0.075
            else:
                infl = 0.02
            cpi = infl / 12 + rng.normal(0.0, 0.003)
            bill = max(cpi + 0.0002 + rng.normal(0.0, 0.0008), -0.005)
            stock = cpi + 0.005 + rng.normal(0.0, 0.045)
            if rng.random() < 0.01:
                stock -= rng.exponential(0.12)
            rows.append((f"{year:04d}-{month:02d}", stock, bill, cpi))

    with open(args.out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["date", "stock", "bond", "cpi"])
        for d, s, b, c in rows:
            w.writerow([d, f"{s:.6f}", f"{b:.6f}", f"{c:.6f}"])


if __name__ == "__main__":
    main()
