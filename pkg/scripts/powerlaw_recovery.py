"""Coverage of the discrete power-law fit: how often the estimate lands
within 3 standard errors of the true exponent.

    python3 scripts/powerlaw_recovery.py --reps 100 --n 10000
"""
import argparse
import time

import numpy as np

from tradegraph.powerlaw import approx_alpha, fit_power_law, sample_discrete_power_law


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--alphas", type=float, nargs="+", default=[1.8, 2.5, 3.2])
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--estimate-xmin", action="store_true",
                   help="choose x_min by KS instead of fixing it at 1")
    args = p.parse_args()

    print(f"{'alpha':>5} {'cover':>6} {'mean':>7} {'sd':>6} {'closed-form':>11} {'sec':>5}")
    for alpha in args.alphas:
        t0 = time.perf_counter()
        est, approx, hits = [], [], 0
        for rep in range(args.reps):
            x = sample_discrete_power_law(alpha, args.n, rng=int(alpha * 1000) + rep)
            fit = fit_power_law(x, x_min=None if args.estimate_xmin else 1)
            est.append(fit.alpha)
            approx.append(approx_alpha(x[x >= fit.x_min].astype(float), fit.x_min))
            hits += abs(fit.alpha - alpha) <= 3 * fit.sigma
        print(f"{alpha:5.2f} {hits / args.reps:6.2f} {np.mean(est):7.4f} {np.std(est):6.4f} "
              f"{np.mean(approx):11.4f} {time.perf_counter() - t0:5.1f}")


if __name__ == "__main__":
    main()
