"""Experiment runner: every estimator and bound behind one subcommand each,
plus figure presets that emit the CSV artifacts the plotting component
consumes.

Configuration is plain ``key=value`` text (one pair per line, ``#``
comments) merged with ``-p key=value`` flag overrides (flags win).  Unknown
keys are rejected.  Output is RFC-4180 CSV with ``#``-prefixed header
comments carrying the fully resolved configuration, tool version, and seed,
so re-running a config reproduces the file byte for byte.

Exit codes: 0 success, 2 configuration error, 3 numerical-validity failure
(a vacuous bound requested as hard output, or an unbracketable search).
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys


from . import __version__, bounds, experiments
from .efp import EfpConfig, efp_curve
from .field import NetworkConfig
from .receivers import ReceiverKind, ReceiverSpec

EXPERIMENTS = (
    "outage",
    "density",
    "bounds",
    "sweep",
    "fig2",
    "fig3",
    "fig4",
    "fig5",
    "fig7",
    "fig8",
)

OUTDIR_ENV = "SIMO_ADHOC_OUTDIR"

_NETWORK_KEYS = ("d", "alpha", "snr", "beta", "epsilon", "n_r")

#: Per-experiment defaults; every key an experiment accepts appears here.
PRESETS: dict[str, dict] = {
    "outage": {
        "d": 1.0, "alpha": 4.0, "snr": "inf", "beta": 1.0, "epsilon": 0.1, "n_r": 4,
        "lambda": 0.05, "receiver": "mmse", "k": 1, "snapshots": 8,
        "dump_field": "",
        "trials": 20000, "seed": 0, "threads": 0,
    },
    "density": {
        "d": 1.0, "alpha": 4.0, "snr": "inf", "beta": 1.0, "epsilon": 0.1, "n_r": 8,
        "receiver": "mmse", "k": 1, "snapshots": 8, "geometry": "ppp",
        "trials": 20000, "seed": 0, "threads": 0,
    },
    "bounds": {
        "d": 1.0, "alpha": 4.0, "snr": "inf", "beta": 1.0, "epsilon": 0.1, "n_r": 12,
        "lambda": 0.3, "k": 6, "require_valid": False,
        "trials": 0, "seed": 0, "threads": 0,
    },
    "sweep": {
        "d": 1.0, "alpha": 4.0, "snr": "inf", "beta": 1.0, "epsilon": 0.1, "n_r": 12,
        "k_list": "2,3,4,5,6,7,8,9,10",
        "trials": 20000, "seed": 0, "threads": 0,
    },
    "fig2": {
        "d": 1.0, "snr": "inf", "beta": 1.0, "epsilon": 0.1, "n_r": 8,
        "alpha_list": "2.5,3,3.5,4,4.5,5", "fixed_lambda": 0.25,
        "trials": 20000, "seed": 0, "threads": 0,
    },
    "fig3": {
        "d": 1.0, "alpha": 3.0, "snr": "inf", "beta": 1.0, "epsilon": 0.1,
        "n_r_list": "2,4,8,12,16",
        "trials": 20000, "seed": 0, "threads": 0,
    },
    "fig4": {
        "d": 1.0, "alpha": 4.0, "snr": "inf", "beta": 1.0, "epsilon": 0.1,
        "n_r_list": "2,4,8,12,16",
        "trials": 20000, "seed": 0, "threads": 0,
    },
    "fig5": {
        "d": 1.0, "alpha": 3.0, "snr": 10.0, "beta": 1.0, "epsilon": 0.1, "n_r": 6,
        "k_list": "6,9,12,16,20,28,40", "pilot_snr": 10.0,
        "trials": 20000, "seed": 0, "threads": 0,
    },
    "fig7": {
        "nu": 1.0, "alpha": 3.0, "beta": 1.0,
        "n_r_list": "1,2,4,8", "p_scale": 0.045,
        "p_factors": "0.3,0.5,0.75,1.0,1.4,2.0",
        "trials": 10000, "seed": 0, "threads": 0,
    },
    "fig8": {
        "d": 1.0, "alpha": 4.0, "snr": "inf", "beta": 1.0, "epsilon": 0.1,
        "n_r_list": "2,4,8",
        "trials": 20000, "seed": 0, "threads": 0,
    },
}


class ConfigError(ValueError):
    pass


class ValidityError(RuntimeError):
    pass


def _parse_value(raw: str):
    raw = raw.strip()
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def read_config_file(path: str) -> dict:
    table = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            table[key.strip()] = _parse_value(value)
    return table


def resolve_config(experiment: str, file_table: dict, overrides: dict) -> dict:
    preset = dict(PRESETS[experiment])
    for source in (file_table, overrides):
        for key, value in source.items():
            if key not in preset:
                raise ConfigError(f"unknown key {key!r} for experiment {experiment!r}")
            preset[key] = value
    return preset


def _as_int_list(value) -> list[int]:
    if isinstance(value, (int, float)):
        return [int(value)]
    return [int(tok) for tok in str(value).split(",") if tok.strip()]


def _as_float_list(value) -> list[float]:
    if isinstance(value, (int, float)):
        return [float(value)]
    return [float(tok) for tok in str(value).split(",") if tok.strip()]


def _network_config(params: dict, n_r: int | None = None) -> NetworkConfig:
    try:
        return NetworkConfig(
            d=float(params["d"]),
            alpha=float(params["alpha"]),
            snr=float(params["snr"]),
            beta=float(params["beta"]),
            epsilon=float(params["epsilon"]),
            n_r=int(n_r if n_r is not None else params["n_r"]),
        )
    except (ValueError, TypeError) as err:
        raise ConfigError(str(err)) from err


def _receiver_spec(params: dict) -> ReceiverSpec:
    name = str(params["receiver"]).lower()
    try:
        kind = ReceiverKind(name)
    except ValueError as err:
        raise ConfigError(f"unknown receiver {name!r}") from err
    if kind is ReceiverKind.PZF:
        return ReceiverSpec(kind, k=int(params["k"]))
    if kind is ReceiverKind.MMSE_SAMPLE_COV:
        return ReceiverSpec(kind, snapshots=int(params["snapshots"]))
    return ReceiverSpec(kind)


def _threads(params: dict) -> int | None:
    value = int(params.get("threads", 0))
    return None if value <= 0 else value  # 0 means all cores


def write_csv(path: str, experiment: str, params: dict, columns: list[str], rows: list):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# simo-adhoc {__version__}\n")
        fh.write(f"# experiment = {experiment}\n")
        for key in sorted(params):
            fh.write(f"# {key} = {params[key]}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".10g")
    return str(x)


def _run_outage(params):
    cfg = _network_config(params)
    spec = _receiver_spec(params)
    est = experiments.estimate_outage(
        cfg, float(params["lambda"]), spec,
        trials=int(params["trials"]), seed=int(params["seed"]), threads=_threads(params),
    )
    if params["dump_field"]:
        _dump_first_field(cfg, float(params["lambda"]), int(params["seed"]),
                          str(params["dump_field"]))
    cols = ["receiver", "lambda", "p_out", "ci_low", "ci_high", "trials", "seed"]
    rows = [[spec.label(), _fmt(est.lam), _fmt(est.p_hat), _fmt(est.ci_low),
             _fmt(est.ci_high), est.trials, est.seed]]
    return cols, rows


def _dump_first_field(cfg, lam, seed, path):
    """Debug dump of trial 0's realization (index, |X|^2, channel parts)."""
    from . import engine as _engine
    from .field import field_to_csv_rows, sample_ppp_field

    m, _ = _engine.effective_truncation(cfg, lam)
    f = sample_ppp_field(cfg, lam, m, _engine.trial_generator(seed, 0))
    header = ["index", "sq_distance"]
    for j in range(cfg.n_r):
        header += [f"h{j}_re", f"h{j}_im"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(field_to_csv_rows(f))


def _run_density(params):
    cfg = _network_config(params)
    spec = _receiver_spec(params)
    try:
        dens = experiments.max_density(
            cfg, spec, trials=int(params["trials"]), seed=int(params["seed"]),
            threads=_threads(params), geometry=str(params["geometry"]),
        )
    except experiments.BracketError as err:
        raise ValidityError(str(err)) from err
    cols = ["receiver", "lambda_eps", "ci_low", "ci_high", "outage_at_lambda",
            "trials", "seed"]
    rows = [[spec.label(), _fmt(dens.lam), _fmt(dens.ci_low), _fmt(dens.ci_high),
             _fmt(dens.outage.p_hat), dens.outage.trials, dens.outage.seed]]
    return cols, rows


def _run_bounds(params):
    cfg = _network_config(params)
    lam = float(params["lambda"])
    k = int(params["k"])
    entries = []

    def add(name, result):
        entries.append((name, result))

    try:
        moments = bounds.expected_interference(cfg, lam, k)
        add("expected_interference_exact", bounds.BoundResult(moments.exact))
        if moments.upper is not None:
            add("expected_interference_upper", bounds.BoundResult(moments.upper))
        else:
            add("expected_interference_upper",
                bounds.BoundResult(math.nan, False, "requires k > ceil(alpha/2)"))
    except Exception as err:  # divergent mean
        add("expected_interference_exact", bounds.BoundResult(math.nan, False, str(err)))
    add("pzf_markov_outage_ub", bounds.pzf_markov(cfg, lam, k))
    add("pzf_density_lb_markov", bounds.pzf_density_lb_markov(cfg, k))
    add("mmse_markov_outage_lb", bounds.mmse_markov(cfg, lam))
    add("mmse_density_ub", bounds.mmse_density_ub(cfg))
    add("mrc_density_ub", bounds.mrc_density_ub(cfg))
    add("full_zf_density_ub", bounds.full_zf_density_ub(cfg))
    add("var_ub_interference", bounds.var_ub_interference(cfg, lam, k))
    add("pzf_chebyshev_outage_ub", bounds.pzf_chebyshev(cfg, lam, k))
    add("mmse_chebyshev_outage_lb", bounds.mmse_chebyshev(cfg, lam))
    add("theta_star", bounds.BoundResult(bounds.theta_star(cfg.alpha)))
    if bool(params["require_valid"]) and any(not r.valid for _, r in entries):
        bad = "; ".join(f"{n}: {r.reason}" for n, r in entries if not r.valid)
        raise ValidityError(f"invalid bounds requested as hard output: {bad}")
    cols = ["bound", "value", "valid", "reason"]
    rows = [[name, _fmt(res.value), res.valid, res.reason] for name, res in entries]
    return cols, rows


def _run_sweep(params):
    cfg = _network_config(params)
    ks = _as_int_list(params["k_list"])
    table = experiments.pzf_density_sweep(
        cfg, ks, trials=int(params["trials"]), seed=int(params["seed"]),
        threads=_threads(params),
    )
    cols = ["k", "lambda_eps", "ci_low", "ci_high", "trials", "seed"]
    rows = [[k, _fmt(table[k].lam), _fmt(table[k].ci_low), _fmt(table[k].ci_high),
             int(params["trials"]), int(params["seed"])] for k in ks]
    return cols, rows


def _run_fig2(params):
    alphas = _as_float_list(params["alpha_list"])
    trials, seed = int(params["trials"]), int(params["seed"])
    threads = _threads(params)
    cols = ["alpha", "lambda_mode", "lambda", "correlation", "two_over_alpha",
            "trials", "seed"]
    rows = []
    for alpha in alphas:
        cfg = _network_config({**params, "alpha": alpha})
        dens = experiments.max_density(
            cfg, ReceiverSpec(ReceiverKind.MMSE), trials, seed, threads
        )
        corr_eps = experiments.mmse_correlation(cfg, dens.lam, trials, seed, threads)
        rows.append([_fmt(alpha), "at_lambda_eps", _fmt(dens.lam), _fmt(corr_eps),
                     _fmt(2.0 / alpha), trials, seed])
        lam_fixed = float(params["fixed_lambda"])
        corr_fixed = experiments.mmse_correlation(cfg, lam_fixed, trials, seed, threads)
        rows.append([_fmt(alpha), "fixed", _fmt(lam_fixed), _fmt(corr_fixed),
                     _fmt(2.0 / alpha), trials, seed])
    return cols, rows


def _run_fig34(params):
    trials, seed = int(params["trials"]), int(params["seed"])
    threads = _threads(params)
    theta = bounds.theta_star(float(params["alpha"]))
    cols = ["n_r", "series", "kind", "value", "ci_low", "ci_high", "valid",
            "trials", "seed"]
    rows = []
    for n_r in _as_int_list(params["n_r_list"]):
        cfg = _network_config(params, n_r=n_r)
        k = int(round(theta * n_r))
        k = min(max(k, 0), n_r - 1)
        specs = [
            ReceiverSpec(ReceiverKind.MRC),
            ReceiverSpec(ReceiverKind.PZF, k=k),
            ReceiverSpec(ReceiverKind.FULL_ZF),
            ReceiverSpec(ReceiverKind.MMSE),
        ]
        table = experiments.density_table(cfg, specs, trials, seed, threads)
        name_map = {
            specs[0].label(): "mrc_mc",
            specs[1].label(): "pzf_theta_mc",
            specs[2].label(): "full_zf_mc",
            specs[3].label(): "mmse_mc",
        }
        for spec in specs:
            dens = table[spec.label()]
            rows.append([n_r, name_map[spec.label()], "mc", _fmt(dens.lam),
                         _fmt(dens.ci_low), _fmt(dens.ci_high), True, trials, seed])
        thm1 = bounds.pzf_density_lb_markov(cfg, k)
        rows.append([n_r, "thm1_density_lb", "bound", _fmt(thm1.value), "", "",
                     thm1.valid, 0, seed])
        cheb_pzf = _invert_or_invalid(
            lambda lam, c=cfg, kk=k: _valid_value(bounds.pzf_chebyshev(c, lam, kk)), cfg
        )
        rows.append([n_r, "cheby_pzf_density_lb", "bound", _fmt(cheb_pzf[0]), "", "",
                     cheb_pzf[1], 0, seed])
        thm2 = bounds.mmse_density_ub(cfg)
        rows.append([n_r, "thm2_density_ub", "bound", _fmt(thm2.value), "", "",
                     thm2.valid, 0, seed])
        cheb_mmse = _invert_or_invalid(
            lambda lam, c=cfg: _valid_value(bounds.mmse_chebyshev(c, lam)), cfg
        )
        rows.append([n_r, "cheby_mmse_density_ub", "bound", _fmt(cheb_mmse[0]), "", "",
                     cheb_mmse[1], 0, seed])
    return cols, rows


def _valid_value(result: bounds.BoundResult) -> float:
    return result.value if result.valid else 0.0


def _invert_or_invalid(outage_fn, cfg) -> tuple[float, bool]:
    try:
        return bounds.density_from_bound(outage_fn, cfg), True
    except bounds.BracketError:
        return math.nan, False


def _run_fig5(params):
    cfg = _network_config(params)
    k_list = _as_int_list(params["k_list"])
    points = experiments.csi_density_curve(
        cfg, k_list, trials=int(params["trials"]), seed=int(params["seed"]),
        threads=_threads(params), pilot_snr=float(params["pilot_snr"]),
    )
    cols = ["series", "snapshots", "lambda_eps", "ci_low", "ci_high", "approx",
            "trials", "seed"]
    rows = []
    for pt in points:
        rows.append([
            pt.series,
            "" if pt.snapshots is None else pt.snapshots,
            _fmt(pt.density.lam), _fmt(pt.density.ci_low), _fmt(pt.density.ci_high),
            "" if pt.approx is None else _fmt(pt.approx),
            int(params["trials"]), int(params["seed"]),
        ])
    return cols, rows


def _run_fig7(params):
    trials, seed = int(params["trials"]), int(params["seed"])
    factors = _as_float_list(params["p_factors"])
    p_scale = float(params["p_scale"])
    cols = ["n_r", "p", "efp", "ci_low", "ci_high", "mean_progress", "is_argmax",
            "trials", "seed"]
    rows = []
    for n_r in _as_int_list(params["n_r_list"]):
        cfg = EfpConfig(
            node_density=float(params["nu"]), alpha=float(params["alpha"]),
            beta=float(params["beta"]), n_r=n_r,
        )
        grid = [min(max(f * p_scale * n_r, 1e-4), 0.95) for f in factors]
        curve = efp_curve(cfg, grid, trials, seed)
        best = max(range(len(curve)), key=lambda i: (curve[i].efp, -curve[i].p))
        for i, est in enumerate(curve):
            rows.append([n_r, _fmt(est.p), _fmt(est.efp), _fmt(est.ci_low),
                         _fmt(est.ci_high), _fmt(est.mean_progress), i == best,
                         trials, seed])
    return cols, rows


def _run_fig8(params):
    trials, seed = int(params["trials"]), int(params["seed"])
    cfgs = [_network_config(params, n_r=n) for n in _as_int_list(params["n_r_list"])]
    table = experiments.geometry_comparison(cfgs, trials, seed, _threads(params))
    cols = ["n_r", "lambda_poisson", "poisson_ci_low", "poisson_ci_high",
            "lambda_grid", "grid_ci_low", "grid_ci_high", "ratio", "trials", "seed"]
    rows = []
    for n_r, poisson, grid in table:
        rows.append([n_r, _fmt(poisson.lam), _fmt(poisson.ci_low), _fmt(poisson.ci_high),
                     _fmt(grid.lam), _fmt(grid.ci_low), _fmt(grid.ci_high),
                     _fmt(grid.lam / poisson.lam), trials, seed])
    return cols, rows


_RUNNERS = {
    "outage": _run_outage,
    "density": _run_density,
    "bounds": _run_bounds,
    "sweep": _run_sweep,
    "fig2": _run_fig2,
    "fig3": _run_fig34,
    "fig4": _run_fig34,
    "fig5": _run_fig5,
    "fig7": _run_fig7,
    "fig8": _run_fig8,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simo-adhoc",
        description="Monte Carlo and analytical-bound experiments for SIMO ad hoc networks",
    )
    parser.add_argument("--version", action="version", version=f"simo-adhoc {__version__}")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", help="key=value config file")
        sp.add_argument(
            "-p", "--param", action="append", default=[], metavar="KEY=VALUE",
            help="override one config key (repeatable; wins over --config)",
        )
        sp.add_argument("--seed", type=int, help="RNG seed")
        sp.add_argument("--trials", type=int, help="Monte Carlo trials")
        sp.add_argument("--threads", type=int, help="worker threads (0 = all cores)")
        sp.add_argument("--out", help="output CSV path")
        sp.add_argument("--log", help="optional sidecar log (timings live here, not in the CSV)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    experiment = args.experiment
    try:
        file_table = read_config_file(args.config) if args.config else {}
        overrides = {}
        for item in args.param:
            if "=" not in item:
                raise ConfigError(f"-p expects KEY=VALUE, got {item!r}")
            key, value = item.split("=", 1)
            overrides[key.strip()] = _parse_value(value)
        for flag in ("seed", "trials", "threads"):
            value = getattr(args, flag)
            if value is not None:
                overrides[flag] = value
        params = resolve_config(experiment, file_table, overrides)
        cols, rows = _RUNNERS[experiment](params)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except ValidityError as err:
        print(f"numerical-validity failure: {err}", file=sys.stderr)
        return 3
    out = args.out
    if out is None:
        out = os.path.join(os.environ.get(OUTDIR_ENV, "."), f"{experiment}.csv")
    write_csv(out, experiment, params, cols, rows)
    if args.log:
        import time

        with open(args.log, "a", encoding="utf-8") as fh:
            fh.write(f"{time.strftime('%Y-%m-%dT%H:%M:%S')} {experiment} -> {out}\n")
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
