import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from simo_adhoc import mathkit

import oracles


def test_ln_gamma_values():
    assert mathkit.ln_gamma(1.0) == pytest.approx(0.0, abs=1e-15)
    assert mathkit.ln_gamma(5.0) == pytest.approx(math.log(24.0), rel=1e-12)
    # ln Gamma(1/2) = ln sqrt(pi)
    assert mathkit.ln_gamma(0.5) == pytest.approx(0.5723649429247001, rel=1e-12)


def test_ln_gamma_domain():
    with pytest.raises(ValueError):
        mathkit.ln_gamma(0.0)
    with pytest.raises(ValueError):
        mathkit.ln_gamma(-3.0)


def test_digamma_values():
    euler = 0.5772156649015329
    assert mathkit.digamma(1.0) == pytest.approx(-euler, abs=1e-10)
    assert mathkit.digamma(2.0) == pytest.approx(1.0 - euler, abs=1e-10)
    assert mathkit.digamma(10.0) == pytest.approx(2.251752589066721, abs=1e-10)
    with pytest.raises(ValueError):
        mathkit.digamma(0.0)


@pytest.mark.parametrize("x", [0.5, 1.0, 3.0, 10.0])
def test_digamma_recurrence(x):
    assert mathkit.digamma(x + 1.0) - mathkit.digamma(x) - 1.0 / x == pytest.approx(
        0.0, abs=1e-10
    )


def test_chi2_moment_values():
    assert mathkit.chi2_moment(3, 0.0) == pytest.approx(1.0, rel=1e-14)
    assert mathkit.chi2_moment(3, 1.0) == pytest.approx(3.0, rel=1e-12)
    assert mathkit.chi2_moment(4, -2.0) == pytest.approx(1.0 / 6.0, rel=1e-12)
    with pytest.raises(mathkit.DivergentMomentError):
        mathkit.chi2_moment(2, -2.0)


@settings(deadline=None, max_examples=60)
@given(
    i=st.integers(min_value=1, max_value=2000),
    b=st.floats(min_value=-0.9, max_value=5.0),
)
def test_chi2_moment_positive(i, b):
    assert mathkit.chi2_moment(i, b) > 0.0
    assert mathkit.chi2_moment(i, 0.0) == pytest.approx(1.0, rel=1e-12)


def test_gamma_ratio_tail_sum_against_series():
    # telescoped closed form vs accelerated high-precision summation
    for s, start in [(2.0, 4), (1.5, 4), (1.5, 2), (2.5, 5), (3.0, 7)]:
        assert mathkit.gamma_ratio_tail_sum(s, start) == pytest.approx(
            oracles.gamma_ratio_series(s, start), rel=1e-10
        )
    with pytest.raises(mathkit.DivergentMomentError):
        mathkit.gamma_ratio_tail_sum(2.0, 2)


def test_sample_chi2_moments():
    rng = np.random.default_rng(7)
    draws = np.array([mathkit.sample_chi2(4.0, rng) for _ in range(200_000)])
    assert draws.mean() == pytest.approx(4.0, abs=0.02)
    assert draws.var() == pytest.approx(4.0, abs=0.05)
    rng = np.random.default_rng(8)
    small = np.array([mathkit.sample_chi2(0.5, rng) for _ in range(200_000)])
    assert small.mean() == pytest.approx(0.5, abs=0.01)


@pytest.mark.parametrize("s", [1.0, 2.0, 7.5])
def test_sample_chi2_ks(s):
    # package-convention chi-square == gamma(shape s, unit scale)
    rng = np.random.default_rng(int(s * 100))
    draws = np.array([mathkit.sample_chi2(s, rng) for _ in range(100_000)])
    result = stats.kstest(draws, "gamma", args=(s,))
    assert result.pvalue > 0.01


def test_sample_chi2_unit_mean_exponential():
    rng = np.random.default_rng(3)
    draws = np.array([mathkit.sample_chi2(1.0, rng) for _ in range(100_000)])
    assert draws.mean() == pytest.approx(1.0, abs=0.01)


def test_hermitian_solve_identity_and_scaling():
    rng = np.random.default_rng(0)
    b = mathkit.complex_normal(rng, 4)
    assert np.allclose(mathkit.hermitian_solve(np.eye(4), b), b)
    assert np.allclose(mathkit.hermitian_solve(2.0 * np.eye(4), b), b / 2.0)


def test_hermitian_solve_residual():
    rng = np.random.default_rng(1)
    a = mathkit.complex_normal(rng, (4, 4))
    spd = a @ a.conj().T + 0.1 * np.eye(4)
    b = mathkit.complex_normal(rng, 4)
    x = mathkit.hermitian_solve(spd, b)
    assert np.linalg.norm(spd @ x - b) <= 1e-9 * np.linalg.norm(b)


def test_hermitian_solve_rejects_indefinite():
    with pytest.raises(mathkit.NotPositiveDefiniteError):
        mathkit.hermitian_solve(np.diag([1.0, -1.0]), np.ones(2))


def test_nullspace_project_mrc_case():
    rng = np.random.default_rng(2)
    h0 = mathkit.complex_normal(rng, 5)
    v = mathkit.nullspace_project(h0, [])
    assert np.allclose(v, h0 / np.linalg.norm(h0))


def test_nullspace_project_orthogonal_input_unchanged():
    h0 = np.array([1.0 + 0j, 0.0, 0.0])
    h1 = np.array([0.0, 1.0 + 0j, 0.0])
    v = mathkit.nullspace_project(h0, [h1])
    assert np.allclose(v, h0)


def test_nullspace_project_two_dim():
    rng = np.random.default_rng(3)
    h0 = mathkit.complex_normal(rng, 2)
    h1 = mathkit.complex_normal(rng, 2)
    v = mathkit.nullspace_project(h0, [h1])
    assert abs(np.vdot(v, h1)) ** 2 < 1e-20
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)


@settings(deadline=None, max_examples=40)
@given(
    dim=st.integers(min_value=2, max_value=12),
    k=st.integers(min_value=0, max_value=10),
    seed=st.integers(min_value=0, max_value=10_000),
)
def test_nullspace_project_properties(dim, k, seed):
    k = min(k, dim - 1)
    rng = np.random.default_rng(seed)
    h0 = mathkit.complex_normal(rng, dim)
    cancelled = [mathkit.complex_normal(rng, dim) for _ in range(k)]
    v = mathkit.nullspace_project(h0, cancelled)
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)
    for h in cancelled:
        assert abs(np.vdot(v, h)) <= 1e-10 * np.linalg.norm(h)


def test_nullspace_project_errors():
    rng = np.random.default_rng(4)
    h0 = mathkit.complex_normal(rng, 3)
    too_many = [mathkit.complex_normal(rng, 3) for _ in range(3)]
    with pytest.raises(ValueError):
        mathkit.nullspace_project(h0, too_many)
    # desired channel inside the cancelled span leaves no residual
    h1 = mathkit.complex_normal(rng, 3)
    h2 = mathkit.complex_normal(rng, 3)
    h0_dep = 0.3 * h1 - 1.7j * h2
    with pytest.raises(mathkit.DegenerateProjectionError):
        mathkit.nullspace_project(h0_dep, [h1, h2])
