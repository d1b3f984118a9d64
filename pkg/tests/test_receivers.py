import math

import numpy as np
import pytest
from scipy import stats

from simo_adhoc import field, receivers
from simo_adhoc.engine import trial_generator
from simo_adhoc.field import FieldRealization
from simo_adhoc.mathkit import complex_normal
from simo_adhoc.receivers import (
    ReceiverKind,
    ReceiverSpec,
    build_filter,
    evaluate_sinr,
    full_zf,
    interference_covariance,
    mmse,
    mmse_sample_cov,
    mrc,
    pzf,
)

from conftest import make_cfg


def empty_field(n_r, rng):
    return FieldRealization(
        sq_distances=np.empty(0),
        channels=np.empty((0, n_r), dtype=complex),
        h0=complex_normal(rng, n_r),
        m=0,
    )


def test_spec_validation():
    with pytest.raises(ValueError):
        ReceiverSpec(ReceiverKind.PZF)  # k missing
    with pytest.raises(ValueError):
        ReceiverSpec(ReceiverKind.MRC, k=1)
    with pytest.raises(ValueError):
        ReceiverSpec(ReceiverKind.MMSE_SAMPLE_COV)  # snapshots missing
    assert mrc().cancelled_count(6) == 0
    assert full_zf().cancelled_count(6) == 5
    assert pzf(3).cancelled_count(6) == 3


def test_mmse_without_interferers_is_mrc():
    cfg = make_cfg(n_r=4, snr=10.0)
    rng = np.random.default_rng(0)
    f = empty_field(4, rng)
    v = build_filter(mmse(), f, cfg)
    assert np.allclose(v, f.h0 / np.linalg.norm(f.h0), atol=1e-12)


def test_pzf_full_cancellation_two_antennas():
    cfg = make_cfg(n_r=2)
    f = field.sample_ppp_field(cfg, 0.2, 6, np.random.default_rng(1))
    v = build_filter(full_zf(), f, cfg)
    assert abs(np.vdot(v, f.channels[0])) ** 2 < 1e-20
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)


def test_mrc_equals_pzf0_bitwise():
    cfg = make_cfg(n_r=5)
    f = field.sample_ppp_field(cfg, 0.2, 12, np.random.default_rng(2))
    assert np.array_equal(build_filter(mrc(), f, cfg), build_filter(pzf(0), f, cfg))


def test_evaluate_sinr_single_antenna_no_interference():
    cfg = make_cfg(n_r=1, snr=7.0)
    rng = np.random.default_rng(3)
    f = empty_field(1, rng)
    v = build_filter(mrc(), f, cfg)
    sample = evaluate_sinr(v, f, cfg)
    assert sample.sinr == pytest.approx(7.0 * abs(f.h0[0]) ** 2, rel=1e-12)
    assert sample.correlation == pytest.approx(1.0, rel=1e-12)


def test_mmse_sinr_matches_quadratic_form():
    # evaluated SINR of the (normalized) MMSE filter equals h0^H Sigma^-1 h0
    cfg = make_cfg(n_r=6, snr=100.0)
    for seed in range(5):
        f = field.sample_ppp_field(cfg, 0.3, 40, np.random.default_rng(seed))
        v = build_filter(mmse(), f, cfg)
        sample = evaluate_sinr(v, f, cfg)
        sigma = interference_covariance(f, cfg)
        direct = float(np.real(f.h0.conj() @ np.linalg.solve(sigma, f.h0)))
        assert sample.sinr == pytest.approx(direct, rel=1e-8)


def test_sinr_identity_and_skip():
    cfg = make_cfg(n_r=6)
    f = field.sample_ppp_field(cfg, 0.3, 30, np.random.default_rng(4))
    v = build_filter(pzf(3), f, cfg)
    skipped = evaluate_sinr(v, f, cfg, skip=3)
    full = evaluate_sinr(v, f, cfg, skip=0)
    # cancelled contributions are numerically ~1e-30, so both SINRs agree
    assert skipped.sinr == pytest.approx(full.sinr, rel=1e-9)
    assert skipped.sinr == pytest.approx(
        skipped.signal_power / (cfg.inv_snr + skipped.interference_power), rel=1e-9
    )


def test_lemma1_statistics_small():
    # n_r=6, k=3: signal chi-square with mean 3; next coefficient unit-mean
    # exponential; both independent (the 1e5-trial version is acceptance 3)
    cfg = make_cfg(n_r=6)
    n, k = 20_000, 3
    sig = np.empty(n)
    h4 = np.empty(n)
    for t in range(n):
        f = field.sample_ppp_field(cfg, 0.2, 8, trial_generator(13, t))
        v = build_filter(pzf(k), f, cfg)
        sig[t] = abs(np.vdot(v, f.h0)) ** 2
        h4[t] = abs(np.vdot(v, f.channels[k])) ** 2
    assert sig.mean() == pytest.approx(3.0, rel=0.02)
    assert stats.kstest(sig, "gamma", args=(3,)).pvalue > 0.01
    assert stats.kstest(h4, "expon").pvalue > 0.01
    assert abs(np.corrcoef(sig, h4)[0, 1]) < 0.02


def test_mmse_dominates_pzf_small():
    cfg = make_cfg(n_r=4)
    for t in range(300):
        f = field.sample_ppp_field(cfg, 0.3, 25, trial_generator(17, t))
        best = evaluate_sinr(build_filter(mmse(), f, cfg), f, cfg).sinr
        for k in range(cfg.n_r):
            v = build_filter(pzf(k), f, cfg)
            assert best >= evaluate_sinr(v, f, cfg, skip=k).sinr - 1e-9


def test_sample_cov_requires_enough_snapshots():
    cfg = make_cfg(n_r=4)
    for seed in range(20):
        rng = np.random.default_rng(seed)
        f = field.sample_ppp_field(cfg, 0.2, 10, rng)
        with pytest.raises(ValueError):
            build_filter(mmse_sample_cov(3), f, cfg, rng)


def test_sample_cov_converges_to_mmse():
    # K -> inf: sample-covariance filter aligns with the true MMSE filter
    cfg = make_cfg(n_r=4, snr=10.0)
    angles = []
    for t in range(60):
        g = trial_generator(23, t)
        f = field.sample_ppp_field(cfg, 0.3, 20, g)
        v_hat = build_filter(mmse_sample_cov(1000 * cfg.n_r), f, cfg, g)
        v = build_filter(mmse(), f, cfg)
        angles.append(math.degrees(math.acos(min(1.0, abs(np.vdot(v_hat, v))))))
    assert np.median(angles) < 2.0


def test_sample_cov_snapshot_covariance_is_unbiased():
    # E[Sigma_hat] = Sigma: check the Frobenius-averaged estimate
    cfg = make_cfg(n_r=3, snr=5.0)
    rng = np.random.default_rng(29)
    f = field.sample_ppp_field(cfg, 0.3, 15, rng)
    sigma = interference_covariance(f, cfg)
    acc = np.zeros_like(sigma)
    reps = 3000
    for _ in range(reps):
        acc += receivers.sample_covariance(f, cfg, 8, rng)
    rel = np.linalg.norm(acc / reps - sigma) / np.linalg.norm(sigma)
    assert rel < 0.05
