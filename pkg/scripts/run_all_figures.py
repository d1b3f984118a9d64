#!/usr/bin/env python3
"""Produce every figure CSV with the preset configurations, then render the
images if the figrender package is installed.

Full presets take a while (the fig3/fig4 density sweeps dominate); pass
--quick for a reduced-trial smoke run.
"""

import argparse
import os
import subprocess
import sys

FIGS = ["fig2", "fig3", "fig4", "fig5", "fig7", "fig8"]


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--outdir", default="runs")
    parser.add_argument("--quick", action="store_true", help="reduced trials")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    os.makedirs(args.outdir, exist_ok=True)
    for fig in FIGS:
        cmd = [sys.executable, "-m", "simo_adhoc", fig, "--seed", str(args.seed),
               "--out", os.path.join(args.outdir, f"{fig}.csv")]
        if args.quick:
            cmd += ["--trials", "2000"]
        print("+", " ".join(cmd), flush=True)
        subprocess.run(cmd, check=True)
    try:
        import figrender  # noqa: F401
    except ImportError:
        print("figrender not installed; CSVs written, skipping image rendering")
        return 0
    for fig in FIGS:
        cmd = [sys.executable, "-m", "figrender.render", fig, args.outdir, args.outdir]
        print("+", " ".join(cmd), flush=True)
        subprocess.run(cmd, check=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
