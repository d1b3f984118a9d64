"""Monte Carlo ground truth: outage estimation, maximum-density search, and
the measurement campaigns behind the correlation, imperfect-CSI, and
grid-geometry studies.

All estimators use per-trial RNG streams keyed by (seed, trial index) only,
so outage estimates at different densities (and different receivers) share
their randomness: density searches bisect a monotone-smooth curve and
receiver comparisons are paired.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import bounds, engine
from .field import NetworkConfig
from .receivers import ReceiverKind, ReceiverSpec

#: Default trial counts: density searches / distribution-style estimates.
DENSITY_TRIALS = 20_000
DISTRIBUTION_TRIALS = 100_000


class BracketError(RuntimeError):
    """The density search could not bracket the outage constraint."""


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054):
    """95% Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = successes / trials
    denom = 1.0 + z**2 / trials
    center = (p + z**2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z**2 / (4 * trials**2)) / denom
    # clamp against roundoff at the endpoints so the interval contains p
    return min(p, max(0.0, center - half)), max(p, min(1.0, center + half))


@dataclass
class OutageEstimate:
    """Monte Carlo outage probability with a 95% Wilson interval."""

    p_hat: float
    trials: int
    ci_low: float
    ci_high: float
    seed: int
    lam: float = math.nan
    receiver: str = ""

    def __post_init__(self):
        if not self.ci_low <= self.p_hat <= self.ci_high:
            raise ValueError("confidence interval must contain the estimate")


@dataclass
class DensityEstimate:
    """Bisected maximum density with an uncertainty interval.

    ``ci_low``/``ci_high`` combine the bisection width with the Wilson
    interval of the outage estimate at the returned density, mapped through
    the local slope of the outage curve.
    """

    lam: float
    ci_low: float
    ci_high: float
    outage: OutageEstimate
    receiver: str = ""
    n_r: int = 0

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)


class _PoissonEvaluator:
    """Outage as a function of density over a shared common-random tape."""

    def __init__(self, cfg, specs, trials, seed, lam_ref, threads=None, snapshots=None,
                 pilot_snr=None):
        self.cfg = cfg
        self.trials = trials
        self.seed = seed
        self.threads = threads
        self._want_mmse = any(
            s.kind in (ReceiverKind.MMSE, ReceiverKind.MMSE_SAMPLE_COV) for s in specs
        )
        self._ks = engine.required_ks(cfg, specs)
        self._snapshots = snapshots
        self._pilot_snr = pilot_snr
        self._build(lam_ref)

    def _build(self, lam_ref):
        self.lam_ref = lam_ref
        self.tape = engine.build_tape(
            self.cfg,
            lam_ref,
            self.trials,
            self.seed,
            pzf_ks=self._ks,
            want_mmse=self._want_mmse,
            snapshots=self._snapshots,
            pilot_snr=self._pilot_snr,
            threads=self.threads,
        )

    def ensure(self, lam):
        if lam > self.lam_ref:
            self._build(lam)

    def sinr(self, lam, spec, estimated_h0=False):
        self.ensure(lam)
        if spec.kind is ReceiverKind.MMSE_SAMPLE_COV and estimated_h0:
            return engine.samplecov_sinr(self.tape, lam, estimated_h0=True)
        return engine.sinr_samples(self.tape, lam, spec)

    def outage(self, lam, spec, estimated_h0=False):
        return float(np.mean(self.sinr(lam, spec, estimated_h0) <= self.cfg.beta))


class _GridEvaluator:
    """Grid-geometry counterpart (MMSE receiver only)."""

    def __init__(self, cfg, trials, seed, lam_ref):
        self.cfg = cfg
        self.trials = trials
        self.seed = seed
        self._build(lam_ref)

    def _build(self, lam_ref):
        self.lam_ref = lam_ref
        self._eng = engine.GridEngine.create(self.cfg, lam_ref, self.trials, self.seed)

    def ensure(self, lam):
        if lam > self.lam_ref:
            self._build(lam)

    def sinr(self, lam, spec, estimated_h0=False):
        if spec.kind is not ReceiverKind.MMSE:
            raise ValueError("grid geometry supports the MMSE receiver only")
        self.ensure(lam)
        return self._eng.mmse_sinr(lam)

    def outage(self, lam, spec, estimated_h0=False):
        return float(np.mean(self.sinr(lam, spec) <= self.cfg.beta))


def _outage_estimate(evaluator, lam, spec, seed, estimated_h0=False) -> OutageEstimate:
    sinr = evaluator.sinr(lam, spec, estimated_h0)
    hits = int(np.count_nonzero(sinr <= evaluator.cfg.beta))
    trials = sinr.size
    lo, hi = wilson_interval(hits, trials)
    return OutageEstimate(
        p_hat=hits / trials,
        trials=trials,
        ci_low=lo,
        ci_high=hi,
        seed=seed,
        lam=lam,
        receiver=spec.label(),
    )


def estimate_outage(
    cfg: NetworkConfig,
    lam: float,
    spec: ReceiverSpec,
    trials: int = DENSITY_TRIALS,
    seed: int = 0,
    threads: int | None = None,
) -> OutageEstimate:
    """Fraction of iid realizations with SINR <= beta, plus Wilson interval."""
    if trials < 1000:
        raise ValueError("use at least 1e3 trials")
    evaluator = _PoissonEvaluator(
        cfg, [spec], trials, seed, lam_ref=lam, threads=threads,
        snapshots=spec.snapshots,
    )
    return _outage_estimate(evaluator, lam, spec, seed)


def _bisect_density(evaluator, spec, seed, rel_width=0.01, estimated_h0=False) -> DensityEstimate:
    cfg = evaluator.cfg
    eps = cfg.epsilon
    lam_hi = bounds.mmse_density_ub(cfg).value
    for _ in range(60):
        if evaluator.outage(lam_hi, spec, estimated_h0) > eps:
            break
        lam_hi *= 2.0
    else:
        raise BracketError("outage never exceeds epsilon while doubling lambda")
    lam_lo = lam_hi / 2.0
    for _ in range(60):
        if evaluator.outage(lam_lo, spec, estimated_h0) <= eps:
            break
        lam_lo /= 2.0
    else:
        raise BracketError("outage exceeds epsilon for arbitrarily small lambda")
    while lam_hi - lam_lo > rel_width * 0.5 * (lam_hi + lam_lo):
        mid = 0.5 * (lam_lo + lam_hi)
        if evaluator.outage(mid, spec, estimated_h0) <= eps:
            lam_lo = mid
        else:
            lam_hi = mid
    lam_hat = 0.5 * (lam_lo + lam_hi)
    est = _outage_estimate(evaluator, lam_hat, spec, seed, estimated_h0)
    # Map the outage Wilson interval to a density interval via the local
    # secant slope of the (monotone, common-random-number) outage curve.
    d_lam = max(lam_hat * 0.05, lam_hi - lam_lo)
    p_up = evaluator.outage(lam_hat + d_lam, spec, estimated_h0)
    p_dn = evaluator.outage(max(lam_hat - d_lam, lam_hat * 0.25), spec, estimated_h0)
    slope = (p_up - p_dn) / (lam_hat + d_lam - max(lam_hat - d_lam, lam_hat * 0.25))
    slope = max(slope, 1e-12)
    spread = (est.ci_high - est.ci_low) / (2.0 * slope)
    half = max(spread, 0.5 * (lam_hi - lam_lo))
    return DensityEstimate(
        lam=lam_hat,
        ci_low=max(lam_hat - half, 0.0),
        ci_high=lam_hat + half,
        outage=est,
        receiver=spec.label(),
        n_r=cfg.n_r,
    )


def max_density(
    cfg: NetworkConfig,
    spec: ReceiverSpec,
    trials: int = DENSITY_TRIALS,
    seed: int = 0,
    threads: int | None = None,
    geometry: str = "ppp",
) -> DensityEstimate:
    """Largest density with outage at most epsilon, by common-random-number
    bisection from the MMSE density upper bound downward (1% relative width).
    """
    lam_ref = bounds.mmse_density_ub(cfg).value
    if geometry == "grid":
        evaluator = _GridEvaluator(cfg, trials, seed, lam_ref)
    elif geometry == "ppp":
        evaluator = _PoissonEvaluator(
            cfg, [spec], trials, seed, lam_ref, threads=threads, snapshots=spec.snapshots
        )
    else:
        raise ValueError(f"unknown geometry {geometry!r}")
    return _bisect_density(evaluator, spec, seed)


def density_table(
    cfg: NetworkConfig,
    specs: list[ReceiverSpec],
    trials: int = DENSITY_TRIALS,
    seed: int = 0,
    threads: int | None = None,
) -> dict[str, DensityEstimate]:
    """Maximum density for several receivers over one shared tape (paired
    comparisons, one generation pass)."""
    snapshots = None
    for s in specs:
        if s.kind is ReceiverKind.MMSE_SAMPLE_COV:
            snapshots = s.snapshots
    lam_ref = bounds.mmse_density_ub(cfg).value
    evaluator = _PoissonEvaluator(
        cfg, specs, trials, seed, lam_ref, threads=threads, snapshots=snapshots
    )
    return {spec.label(): _bisect_density(evaluator, spec, seed) for spec in specs}


def mmse_correlation(
    cfg: NetworkConfig,
    lam: float,
    trials: int = DENSITY_TRIALS,
    seed: int = 0,
    threads: int | None = None,
) -> float:
    """Mean squared correlation between the MMSE filter and h0 at density lam."""
    tape = engine.build_tape(
        cfg, lam, trials, seed, want_mmse=True, threads=threads
    )
    return float(engine.mmse_correlation_samples(tape, lam).mean())


def reed_mallett_ratio(
    cfg: NetworkConfig,
    lam: float,
    snapshots: int,
    trials: int = DENSITY_TRIALS,
    seed: int = 0,
    threads: int | None = None,
) -> float:
    """Mean SINR with the K-snapshot sample-covariance filter over the mean
    SINR with the true MMSE filter, on common realizations.

    Large snapshot counts are processed in trial windows so the snapshot
    block never exceeds a few hundred MB; per-trial streams make the
    windowed result identical to a single pass.
    """
    if snapshots < cfg.n_r:
        raise ValueError(f"need snapshots >= n_r={cfg.n_r}")
    window = max(64, min(trials, int(192e6 / (16 * cfg.n_r * snapshots))))
    num = 0.0
    den = 0.0
    for start in range(0, trials, window):
        count = min(window, trials - start)
        tape = engine.build_tape(
            cfg, lam, count, seed, want_mmse=True, snapshots=snapshots,
            threads=threads, trial_offset=start,
        )
        num += float(engine.samplecov_sinr(tape, lam).sum())
        den += float(engine.mmse_sinr(tape, lam).sum())
    return num / den


@dataclass
class CsiDensityPoint:
    """One point of the density-versus-snapshots curve."""

    snapshots: int | None  # None marks the perfect-CSI anchor
    series: str
    density: DensityEstimate
    approx: float | None = None  # anchor * (1 - (n_r-1)/(K+1))^(2/alpha)


def csi_density_curve(
    cfg: NetworkConfig,
    snapshot_counts: list[int],
    trials: int = DENSITY_TRIALS,
    seed: int = 0,
    threads: int | None = None,
    pilot_snr: float | None = None,
) -> list[CsiDensityPoint]:
    """Maximum density versus number of interference observations K.

    Returns the perfect-CSI anchor, one sample-covariance point per K (plus
    a pilot-estimated-h0 series when ``pilot_snr`` is given), and the
    analytic approximation anchored at the measured perfect-CSI density.
    """
    if any(k < cfg.n_r for k in snapshot_counts):
        raise ValueError("all snapshot counts must be at least n_r")
    points: list[CsiDensityPoint] = []
    perfect = max_density(cfg, ReceiverSpec(ReceiverKind.MMSE), trials, seed, threads)
    points.append(CsiDensityPoint(snapshots=None, series="perfect_csi", density=perfect))
    inv_a = 2.0 / cfg.alpha
    for k_snap in snapshot_counts:
        spec = ReceiverSpec(ReceiverKind.MMSE_SAMPLE_COV, snapshots=k_snap)
        lam_ref = bounds.mmse_density_ub(cfg).value
        evaluator = _PoissonEvaluator(
            cfg, [spec], trials, seed, lam_ref, threads=threads,
            snapshots=k_snap, pilot_snr=pilot_snr,
        )
        factor = (1.0 - (cfg.n_r - 1) / (k_snap + 1)) ** inv_a
        points.append(
            CsiDensityPoint(
                snapshots=k_snap,
                series="sample_cov",
                density=_bisect_density(evaluator, spec, seed),
                approx=perfect.lam * factor,
            )
        )
        if pilot_snr is not None:
            points.append(
                CsiDensityPoint(
                    snapshots=k_snap,
                    series="sample_cov_est_h0",
                    density=_bisect_density(evaluator, spec, seed, estimated_h0=True),
                    approx=None,
                )
            )
    return points


def geometry_comparison(
    cfgs: list[NetworkConfig],
    trials: int = DENSITY_TRIALS,
    seed: int = 0,
    threads: int | None = None,
) -> list[tuple[int, DensityEstimate, DensityEstimate]]:
    """Paired Poisson/grid maximum densities (MMSE receiver) per config."""
    rows = []
    spec = ReceiverSpec(ReceiverKind.MMSE)
    for cfg in cfgs:
        poisson = max_density(cfg, spec, trials, seed, threads, geometry="ppp")
        grid = max_density(cfg, spec, trials, seed, threads, geometry="grid")
        rows.append((cfg.n_r, poisson, grid))
    return rows


def pzf_density_sweep(
    cfg: NetworkConfig,
    ks: list[int],
    trials: int = DENSITY_TRIALS,
    seed: int = 0,
    threads: int | None = None,
) -> dict[int, DensityEstimate]:
    """Maximum PZF-k density for every k in ``ks`` over one shared tape."""
    specs = [ReceiverSpec(ReceiverKind.PZF, k=k) for k in ks]
    table = density_table(cfg, specs, trials, seed, threads)
    return {k: table[f"pzf{k}"] for k in ks}
