"""Sweep the intensity-to-price coupling and record how well each graph's
activity explains the price.

    python3 scripts/kappa_sweep.py --kappas 0 0.2 0.4 0.8 --seeds 0 1 --days 200

With kappa = 0 the manipulators' activity carries no price information, so
every graph should fit about as poorly as the normal graph.
"""
import argparse
import tempfile

import numpy as np

from tradegraph.pipeline import RunConfig, decompose, prepare, price_fit, price_series
from tradegraph.synth import MarketConfig, generate_market


def fitted_pearson(market, graphs, workdir):
    paths = market.write(workdir)
    cfg = RunConfig(trades=str(paths["trades"]), reference=str(paths["reference"]),
                    graphs=graphs)
    data = prepare(cfg)
    out = {}
    for g in graphs:
        dec = decompose(data, g, cfg)
        report, _ = price_fit(dec.svd, price_series(data, dec.matrix.days), dec.N)
        out[g] = report["fitted"]["pearson"]
    return out


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--kappas", type=float, nargs="+", default=[0.0, 0.2, 0.4, 0.8, 1.6])
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--days", type=int, default=300)
    p.add_argument("--graphs", default="ABG,NMG")
    args = p.parse_args()
    graphs = args.graphs.split(",")

    print(f"{'kappa':>5} " + " ".join(f"{g:>12}" for g in graphs))
    for kappa in args.kappas:
        rows = []
        for seed in args.seeds:
            market = generate_market(MarketConfig(seed=seed, kappa=kappa, days=args.days))
            with tempfile.TemporaryDirectory() as tmp:
                rows.append(fitted_pearson(market, graphs, tmp))
        cells = []
        for g in graphs:
            v = np.array([r[g] for r in rows], dtype=float)
            cells.append(f"{np.nanmean(v):6.3f}±{np.nanstd(v):.3f}")
        print(f"{kappa:5.2f} " + " ".join(f"{c:>12}" for c in cells))


if __name__ == "__main__":
    main()
