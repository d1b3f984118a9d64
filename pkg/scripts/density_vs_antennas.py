#!/usr/bin/env python3
"""Quick interactive study: maximum density of the four receivers versus the
antenna count, printed as a table with the matching analytical bounds."""

import argparse
import math

from simo_adhoc import bounds, experiments
from simo_adhoc.field import NetworkConfig
from simo_adhoc.receivers import full_zf, mmse, mrc, pzf


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--alpha", type=float, default=4.0)
    parser.add_argument("--n-r", type=int, nargs="+", default=[2, 4, 8])
    parser.add_argument("--trials", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    theta = bounds.theta_star(args.alpha)
    print(f"alpha={args.alpha}  theta*={theta:.3f}  (beta=1, eps=0.1, no noise)")
    header = f"{'n_r':>4} {'mrc':>8} {'pzf*':>8} {'zf':>8} {'mmse':>8} {'thm1_lb':>8} {'thm2_ub':>8}"
    print(header)
    for n_r in args.n_r:
        cfg = NetworkConfig(d=1.0, alpha=args.alpha, snr=math.inf, beta=1.0,
                            epsilon=0.1, n_r=n_r)
        k = min(max(int(round(theta * n_r)), 0), n_r - 1)
        table = experiments.density_table(
            cfg, [mrc(), pzf(k), full_zf(), mmse()], args.trials, args.seed
        )
        thm1 = bounds.pzf_density_lb_markov(cfg, k)
        lb = f"{thm1.value:8.4f}" if thm1.valid else "   --   "
        ub = bounds.mmse_density_ub(cfg).value
        print(
            f"{n_r:>4} {table['mrc'].lam:8.4f} {table[f'pzf{k}'].lam:8.4f} "
            f"{table['full_zf'].lam:8.4f} {table['mmse'].lam:8.4f} {lb} {ub:8.4f}"
        )


if __name__ == "__main__":
    main()
