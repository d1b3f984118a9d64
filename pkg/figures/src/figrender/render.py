"""Figure renderers for the experiment CSVs.

Each figure id maps to one renderer reading one CSV (``<figure>.csv`` in the
input directory) and writing ``<figure>.png``.  Conventions: Monte Carlo
series draw markers with error bars taken from the ci_low/ci_high columns;
analytical bounds draw as plain lines; the fig7 per-curve argmax rows are
marked with an X, as flagged in the CSV.

Usage: ``simo-adhoc-figures <figure-id> <input-dir> <output-dir>``.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


class RenderError(RuntimeError):
    """CSV missing, empty, or lacking a column the figure needs."""


@dataclass(frozen=True)
class PlotSpec:
    """What to render: figure id, source CSVs, scales, and series labels."""

    figure: str
    inputs: tuple[str, ...]
    output: str
    xscale: str = "linear"
    yscale: str = "linear"
    labels: dict = field(default_factory=dict)


def read_table(path: str) -> list[dict]:
    """Rows of an experiment CSV, skipping the '#' comment header."""
    if not os.path.exists(path):
        raise RenderError(f"missing input CSV: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        rows = [dict(r) for r in reader]
    if not rows:
        raise RenderError(f"empty CSV: {path}")
    return rows


def column(rows: list[dict], name: str) -> list[str]:
    if name not in rows[0]:
        raise RenderError(f"column {name!r} not present (have {sorted(rows[0])})")
    return [r[name] for r in rows]


def _floats(rows, name):
    return [float(v) for v in column(rows, name)]


def _errbar(ax, x, y, lo, hi, label, marker="o"):
    yerr = [[yi - li for yi, li in zip(y, lo)], [hi_ - yi for yi, hi_ in zip(y, hi)]]
    ax.errorbar(x, y, yerr=yerr, marker=marker, linestyle="-", capsize=3, label=label)


def render_fig2(spec: PlotSpec) -> str:
    rows = read_table(spec.inputs[0])
    fig, ax = plt.subplots(figsize=(7, 5))
    for mode, marker in (("at_lambda_eps", "o"), ("fixed", "s")):
        sel = [r for r in rows if r["lambda_mode"] == mode]
        if not sel:
            continue
        ax.plot(_floats(sel, "alpha"), _floats(sel, "correlation"),
                marker=marker, linestyle="-", label=f"measured ({mode})")
    approx = sorted({(float(r["alpha"]), float(r["two_over_alpha"])) for r in rows})
    ax.plot([a for a, _ in approx], [v for _, v in approx], "k--", label="2/alpha")
    ax.set_xlabel("path loss exponent alpha")
    ax.set_ylabel("mean squared correlation |v^H h0|^2 / (|v|^2 |h0|^2)")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.savefig(spec.output, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return spec.output


_FIG34_SERIES = (
    ("mmse_mc", "mc", "MMSE (MC)"),
    ("pzf_theta_mc", "mc", "PZF theta* (MC)"),
    ("mrc_mc", "mc", "MRC (MC)"),
    ("full_zf_mc", "mc", "full ZF (MC)"),
    ("thm2_density_ub", "bound", "MMSE upper bound (Markov)"),
    ("cheby_mmse_density_ub", "bound", "MMSE upper bound (Chebyshev)"),
    ("thm1_density_lb", "bound", "PZF lower bound (Markov)"),
    ("cheby_pzf_density_lb", "bound", "PZF lower bound (Chebyshev)"),
)


def render_fig34(spec: PlotSpec) -> str:
    rows = read_table(spec.inputs[0])
    for col in ("n_r", "series", "value", "ci_low", "ci_high", "valid"):
        column(rows, col)
    fig, ax = plt.subplots(figsize=(7.5, 5.5))
    for series, kind, label in _FIG34_SERIES:
        sel = [r for r in rows if r["series"] == series]
        if kind == "bound":
            sel = [r for r in sel if r["valid"] == "True" and r["value"] not in ("nan", "")]
        if not sel:
            continue
        x = [int(r["n_r"]) for r in sel]
        y = [float(r["value"]) for r in sel]
        if kind == "mc":
            lo = [float(r["ci_low"]) for r in sel]
            hi = [float(r["ci_high"]) for r in sel]
            _errbar(ax, x, y, lo, hi, label)
        else:
            ax.plot(x, y, linestyle="--", label=label)
    ax.set_xscale(spec.xscale)
    ax.set_yscale(spec.yscale)
    ax.set_xlabel("receive antennas n_R")
    ax.set_ylabel("maximum density lambda_eps (1/m^2)")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, which="both")
    fig.savefig(spec.output, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return spec.output


def render_fig5(spec: PlotSpec) -> str:
    rows = read_table(spec.inputs[0])
    fig, ax = plt.subplots(figsize=(7, 5))
    perfect = [r for r in rows if r["series"] == "perfect_csi"]
    if perfect:
        lam = float(perfect[0]["lambda_eps"])
        ax.axhline(lam, color="k", linestyle=":", label="perfect CSI")
    for series, marker, label in (
        ("sample_cov", "o", "sample covariance (K obs.)"),
        ("sample_cov_est_h0", "s", "sample covariance + estimated h0"),
    ):
        sel = [r for r in rows if r["series"] == series]
        if not sel:
            continue
        x = [int(r["snapshots"]) for r in sel]
        _errbar(ax, x, _floats(sel, "lambda_eps"), _floats(sel, "ci_low"),
                _floats(sel, "ci_high"), label, marker=marker)
    approx = [r for r in rows if r["series"] == "sample_cov" and r["approx"] not in ("", None)]
    if approx:
        ax.plot([int(r["snapshots"]) for r in approx],
                [float(r["approx"]) for r in approx], "r--",
                label="perfect CSI x (1-(n_R-1)/(K+1))^(2/alpha)")
    ax.set_xlabel("interference observations K")
    ax.set_ylabel("maximum density lambda_eps (1/m^2)")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.savefig(spec.output, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return spec.output


def render_fig7(spec: PlotSpec) -> str:
    rows = read_table(spec.inputs[0])
    for col in ("n_r", "p", "efp", "ci_low", "ci_high", "is_argmax"):
        column(rows, col)
    fig, ax = plt.subplots(figsize=(7, 5))
    n_values = sorted({int(r["n_r"]) for r in rows})
    for n_r in n_values:
        sel = [r for r in rows if int(r["n_r"]) == n_r]
        sel.sort(key=lambda r: float(r["p"]))
        x = [float(r["p"]) for r in sel]
        _errbar(ax, x, _floats(sel, "efp"), _floats(sel, "ci_low"),
                _floats(sel, "ci_high"), f"n_R = {n_r}", marker=".")
        best = [r for r in sel if r["is_argmax"] == "True"]
        for r in best:
            ax.plot(float(r["p"]), float(r["efp"]), marker="x", markersize=12,
                    color="k", linestyle="none")
    ax.set_xlabel("transmission probability p")
    ax.set_ylabel("expected forward progress")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.savefig(spec.output, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return spec.output


def render_fig8(spec: PlotSpec) -> str:
    rows = read_table(spec.inputs[0])
    fig, ax = plt.subplots(figsize=(7, 5))
    x = [int(r["n_r"]) for r in rows]
    _errbar(ax, x, _floats(rows, "lambda_poisson"), _floats(rows, "poisson_ci_low"),
            _floats(rows, "poisson_ci_high"), "Poisson field")
    _errbar(ax, x, _floats(rows, "lambda_grid"), _floats(rows, "grid_ci_low"),
            _floats(rows, "grid_ci_high"), "square grid", marker="s")
    ax.set_xlabel("receive antennas n_R")
    ax.set_ylabel("maximum density lambda_eps (1/m^2)")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.savefig(spec.output, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return spec.output


FIGURES = {
    "fig2": (render_fig2, "linear", "linear"),
    "fig3": (render_fig34, "log", "log"),
    "fig4": (render_fig34, "log", "log"),
    "fig5": (render_fig5, "linear", "linear"),
    "fig7": (render_fig7, "linear", "linear"),
    "fig8": (render_fig8, "linear", "linear"),
}


def render(spec: PlotSpec) -> str:
    """Render one figure; returns the written image path."""
    if spec.figure not in FIGURES:
        raise RenderError(f"unknown figure {spec.figure!r} (have {sorted(FIGURES)})")
    renderer, _, _ = FIGURES[spec.figure]
    return renderer(spec)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="simo-adhoc-figures",
        description="render experiment CSVs into figures",
    )
    parser.add_argument("figure", choices=sorted(FIGURES), help="figure id")
    parser.add_argument("input_dir", help="directory holding <figure>.csv")
    parser.add_argument("output_dir", help="directory for <figure>.png")
    args = parser.parse_args(argv)
    renderer, xscale, yscale = FIGURES[args.figure]
    os.makedirs(args.output_dir, exist_ok=True)
    spec = PlotSpec(
        figure=args.figure,
        inputs=(os.path.join(args.input_dir, f"{args.figure}.csv"),),
        output=os.path.join(args.output_dir, f"{args.figure}.png"),
        xscale=xscale,
        yscale=yscale,
    )
    try:
        path = renderer(spec)
    except RenderError as err:
        print(f"render error: {err}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
