#!/usr/bin/env python3
"""Write a synthetic date,region,new_cases CSV from two Gamma growth curves.

log(lambda) = mu + alpha*log(t - t0) + beta*(t - t0), t in days after t0.
"""
import argparse
import datetime as dt

import numpy as np

GROUPS = [(18.0, -0.30), (9.0, -0.10)]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", required=True)
    ap.add_argument("--regions-per-group", type=int, default=5)
    ap.add_argument("--days", type=int, default=60)
    ap.add_argument("--t0", default="2020-01-11")
    ap.add_argument("--first-day", type=int, default=44)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    t0 = dt.date.fromisoformat(args.t0)
    rows = []
    for g, (alpha, beta) in enumerate(GROUPS):
        for j in range(args.regions_per_group):
            region = f"R{g + 1}{chr(ord('a') + j)}"
            mu = rng.normal(-49.0 if g == 0 else -25.0, 0.5)
            for d in range(args.first_day, args.first_day + args.days):
                lam = np.exp(mu + alpha * np.log(d) + beta * d)
                # Overdispersed counts: gamma-Poisson with variance ~ 3 * mean.
                y = rng.poisson(rng.gamma(lam / 2.0, 2.0)) if lam > 0 else 0
                rows.append((t0 + dt.timedelta(days=d), region, int(y)))
    rows.sort()
    with open(args.out, "w", newline="\n") as f:
        f.write("date,region,new_cases\n")
        for date, region, y in rows:
            f.write(f"{date.isoformat()},{region},{y}\n")


if __name__ == "__main__":
    main()
