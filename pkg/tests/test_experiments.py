import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simo_adhoc import experiments
from simo_adhoc.experiments import (
    DensityEstimate,
    OutageEstimate,
    estimate_outage,
    max_density,
    mmse_correlation,
    pzf_density_sweep,
    reed_mallett_ratio,
    wilson_interval,
)
from simo_adhoc.receivers import full_zf, mmse, mrc, pzf

import oracles
from conftest import make_cfg


@settings(deadline=None, max_examples=60)
@given(
    hits=st.integers(min_value=0, max_value=5000),
    trials=st.integers(min_value=1, max_value=5000),
)
def test_wilson_interval_contains_estimate(hits, trials):
    hits = min(hits, trials)
    lo, hi = wilson_interval(hits, trials)
    p = hits / trials
    assert 0.0 <= lo <= p <= hi <= 1.0


def test_wilson_interval_shrinks():
    w1 = wilson_interval(100, 1000)
    w2 = wilson_interval(1000, 10000)
    assert (w2[1] - w2[0]) < (w1[1] - w1[0])


def test_estimate_outage_matches_classical_oracle():
    cfg = make_cfg(alpha=4.0, n_r=1)
    lam = 0.05
    est = estimate_outage(cfg, lam, mrc(), trials=20_000, seed=5)
    want = oracles.rayleigh_ppp_outage(lam, 1.0, 4.0, 1.0)
    half = (est.ci_high - est.ci_low) / 2
    assert abs(est.p_hat - want) <= 3 * half


def test_estimate_outage_deterministic():
    cfg = make_cfg(alpha=4.0, n_r=2)
    a = estimate_outage(cfg, 0.05, mmse(), trials=2_000, seed=9)
    b = estimate_outage(cfg, 0.05, mmse(), trials=2_000, seed=9)
    c = estimate_outage(cfg, 0.05, mmse(), trials=2_000, seed=9, threads=3)
    assert a.p_hat == b.p_hat == c.p_hat
    assert a.ci_low == b.ci_low == c.ci_low


def test_estimate_outage_requires_enough_trials():
    with pytest.raises(ValueError):
        estimate_outage(make_cfg(), 0.1, mrc(), trials=10, seed=0)


def test_outage_vanishes_at_tiny_density():
    cfg = make_cfg(alpha=4.0, n_r=2)
    est = estimate_outage(cfg, 1e-7, mrc(), trials=2_000, seed=1)
    assert est.p_hat == 0.0


def test_max_density_single_antenna_oracle():
    cfg = make_cfg(alpha=4.0, n_r=1)
    dens = max_density(cfg, mrc(), trials=10_000, seed=3)
    want = oracles.rayleigh_ppp_max_density(0.1, 1.0, 4.0, 1.0)
    assert dens.lam == pytest.approx(want, rel=0.08)
    assert dens.ci_low <= dens.lam <= dens.ci_high
    assert dens.outage.p_hat == pytest.approx(0.1, abs=0.02)


def test_max_density_beta_scaling():
    # doubling beta scales the n_r=1 density by 2^(-2/alpha), paired seeds
    n, seed = 10_000, 7
    d1 = max_density(make_cfg(alpha=4.0, n_r=1, beta=1.0), mrc(), n, seed)
    d2 = max_density(make_cfg(alpha=4.0, n_r=1, beta=2.0), mrc(), n, seed)
    assert d2.lam / d1.lam == pytest.approx(2.0 ** (-0.5), rel=0.03)


def test_max_density_noise_floor_unreachable():
    # at snr with P[S snr < beta] > eps no density satisfies the constraint
    cfg = make_cfg(alpha=4.0, n_r=1, snr=0.5)
    with pytest.raises(experiments.BracketError):
        max_density(cfg, mrc(), trials=2_000, seed=0)


def test_density_table_pairs_receivers():
    cfg = make_cfg(alpha=4.0, n_r=4)
    table = experiments.density_table(cfg, [mrc(), pzf(2), full_zf(), mmse()], 4_000, 11)
    assert set(table) == {"mrc", "pzf2", "full_zf", "mmse"}
    assert table["mmse"].lam >= table["pzf2"].lam >= table["mrc"].lam
    # table searches agree with standalone searches on the same seed
    solo = max_density(cfg, mmse(), 4_000, 11)
    assert solo.lam == pytest.approx(table["mmse"].lam, rel=1e-12)


def test_pzf_density_sweep_shares_tape():
    cfg = make_cfg(alpha=4.0, n_r=8)
    sweep = pzf_density_sweep(cfg, [3, 4, 5], trials=4_000, seed=2)
    assert set(sweep) == {3, 4, 5}
    for dens in sweep.values():
        assert isinstance(dens, DensityEstimate)
        assert dens.lam > 0


def test_mmse_correlation_decreases_with_alpha():
    lam, n, seed = 0.4, 8_000, 4
    c3 = mmse_correlation(make_cfg(alpha=3.0, n_r=8), lam, n, seed)
    c4 = mmse_correlation(make_cfg(alpha=4.0, n_r=8), lam, n, seed)
    assert 0.0 < c4 < c3 < 1.0


def test_reed_mallett_example():
    # n_r=6, K=10: factor 1 - 5/11
    cfg = make_cfg(alpha=4.0, n_r=6, snr=10.0)
    ratio = reed_mallett_ratio(cfg, 0.1, 10, trials=6_000, seed=6)
    assert ratio == pytest.approx(1.0 - 5.0 / 11.0, abs=0.05)


def test_reed_mallett_requires_enough_snapshots():
    with pytest.raises(ValueError):
        reed_mallett_ratio(make_cfg(n_r=6), 0.1, 4, trials=2_000, seed=0)


def test_outage_estimate_invariant():
    with pytest.raises(ValueError):
        OutageEstimate(p_hat=0.5, trials=10, ci_low=0.6, ci_high=0.7, seed=0)
