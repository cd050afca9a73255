"""Seeded regression-recovery trials: how often does an ordinary least-squares
fit of noisy points on y = 8*log10(fc) - 10 land within tolerance?"""

import argparse
import math

import numpy as np

from fwaudit.corpus import fit_line


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--sigma", type=float, default=1.0)
    ap.add_argument("--slope-tol", type=float, default=0.5)
    ap.add_argument("--intercept-tol", type=float, default=1.5)
    args = ap.parse_args()

    slopes, intercepts, hits = [], [], 0
    for t in range(args.trials):
        rng = np.random.default_rng(t)
        x = np.log10(rng.uniform(30, 5000, args.n))
        y = 8 * x - 10 + rng.normal(0, args.sigma, args.n)
        f = fit_line(x.tolist(), y.tolist())
        slopes.append(f.slope)
        intercepts.append(f.intercept)
        hits += abs(f.slope - 8) <= args.slope_tol and abs(f.intercept + 10) <= args.intercept_tol
    s, i = np.array(slopes), np.array(intercepts)
    print(f"trials {args.trials}  n {args.n}  sigma {args.sigma}")
    print(f"slope      mean {s.mean():.4f}  sd {s.std(ddof=1):.4f}  range [{s.min():.4f}, {s.max():.4f}]")
    print(f"intercept  mean {i.mean():.4f}  sd {i.std(ddof=1):.4f}  range [{i.min():.4f}, {i.max():.4f}]")
    print(f"within tolerance: {hits}/{args.trials} ({100 * hits / args.trials:.1f}%)")
    print(f"prediction at fc=1000: {8 * math.log10(1000) - 10:.1f} errors")


if __name__ == "__main__":
    main()
