"""Receive filters (MRC, PZF-k, full ZF, MMSE, sample-covariance MMSE) and
SINR evaluation for a single field realization.

All filters are returned unit-norm.  The partial-zero-forcing filter cancels
the k nearest interferers (ties are impossible a.s. under the Poisson field
and broken by index under the grid) and aligns with the projection of the
desired channel on the remaining subspace.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import mathkit
from .field import FieldRealization, NetworkConfig


class ReceiverKind(enum.Enum):
    MRC = "mrc"
    PZF = "pzf"
    FULL_ZF = "full_zf"
    MMSE = "mmse"
    MMSE_SAMPLE_COV = "mmse_sample_cov"


@dataclass(frozen=True)
class ReceiverSpec:
    """Which filter to build.

    ``k`` applies to PZF only (0 <= k <= n_r - 1); MRC is PZF with k = 0 and
    FULL_ZF is PZF with k = n_r - 1.  ``snapshots`` is the number K of
    interference observations for the sample-covariance MMSE filter
    (requires K >= n_r, otherwise the sample covariance is singular).
    """

    kind: ReceiverKind
    k: int | None = None
    snapshots: int | None = None

    def __post_init__(self):
        if self.kind is ReceiverKind.PZF and self.k is None:
            raise ValueError("PZF requires k")
        if self.kind is not ReceiverKind.PZF and self.k is not None:
            raise ValueError("k is only meaningful for PZF")
        if self.kind is ReceiverKind.MMSE_SAMPLE_COV and self.snapshots is None:
            raise ValueError("sample-covariance MMSE requires snapshots")
        if self.kind is not ReceiverKind.MMSE_SAMPLE_COV and self.snapshots is not None:
            raise ValueError("snapshots is only meaningful for MMSE_SAMPLE_COV")

    def cancelled_count(self, n_r: int) -> int:
        """Number of nearest interferers the filter nulls exactly."""
        if self.kind is ReceiverKind.MRC:
            return 0
        if self.kind is ReceiverKind.FULL_ZF:
            return n_r - 1
        if self.kind is ReceiverKind.PZF:
            if not 0 <= self.k <= n_r - 1:
                raise ValueError(f"PZF needs 0 <= k <= n_r-1, got k={self.k}")
            return self.k
        return 0

    def label(self) -> str:
        if self.kind is ReceiverKind.PZF:
            return f"pzf{self.k}"
        if self.kind is ReceiverKind.MMSE_SAMPLE_COV:
            return f"mmse_cov{self.snapshots}"
        return self.kind.value


def mrc() -> ReceiverSpec:
    return ReceiverSpec(ReceiverKind.MRC)


def pzf(k: int) -> ReceiverSpec:
    return ReceiverSpec(ReceiverKind.PZF, k=k)


def full_zf() -> ReceiverSpec:
    return ReceiverSpec(ReceiverKind.FULL_ZF)


def mmse() -> ReceiverSpec:
    return ReceiverSpec(ReceiverKind.MMSE)


def mmse_sample_cov(snapshots: int) -> ReceiverSpec:
    return ReceiverSpec(ReceiverKind.MMSE_SAMPLE_COV, snapshots=snapshots)


@dataclass
class SinrSample:
    """SINR of one realization, with its signal/interference decomposition.

    ``correlation`` is |v^H h0|^2 / (||v||^2 ||h0||^2), the squared
    correlation between the filter and the desired channel; it measures the
    fraction of degrees of freedom spent on array gain.
    """

    sinr: float
    signal_power: float
    interference_power: float
    correlation: float


def interference_weights(field: FieldRealization, cfg: NetworkConfig) -> np.ndarray:
    """Per-interferer power scale d^alpha |X_i|^-alpha."""
    return cfg.d**cfg.alpha * field.sq_distances ** (-cfg.alpha / 2.0)


def interference_covariance(field: FieldRealization, cfg: NetworkConfig) -> np.ndarray:
    """Spatial covariance of interference plus noise over the retained field:
    (1/snr) I + d^alpha sum_i |X_i|^-alpha h_i h_i^H.
    """
    w = interference_weights(field, cfg)
    hw = field.channels * w[:, None]
    sigma = hw.T @ field.channels.conj()
    sigma += cfg.inv_snr * np.eye(cfg.n_r)
    return sigma


def sample_covariance(
    field: FieldRealization, cfg: NetworkConfig, snapshots: int, rng: np.random.Generator
) -> np.ndarray:
    """Sample covariance from K observations of interference plus noise.

    Each snapshot is r_t = sum_i sqrt(d^alpha |X_i|^-alpha) h_i u_it + z_t
    with iid standard complex Gaussian symbols u_it and noise of per-antenna
    variance 1/snr, so E[r r^H] equals the true covariance.
    """
    if snapshots < cfg.n_r:
        raise ValueError(f"need at least n_r={cfg.n_r} snapshots, got {snapshots}")
    amps = np.sqrt(interference_weights(field, cfg))
    symbols = mathkit.complex_normal(rng, (field.m, snapshots))
    r = (field.channels * amps[:, None]).T @ symbols
    if cfg.inv_snr > 0:
        r += math.sqrt(cfg.inv_snr) * mathkit.complex_normal(rng, (cfg.n_r, snapshots))
    return r @ r.conj().T / snapshots


def build_filter(
    spec: ReceiverSpec,
    field: FieldRealization,
    cfg: NetworkConfig,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Unit-norm receive filter for one realization.

    MMSE solves Sigma v = h0 with the covariance built from the retained
    interferers; the PZF family projects h0 on the nullspace of the k
    nearest interferer channels.  The sample-covariance variant draws its K
    snapshots from ``rng`` (h0 itself is assumed known).
    """
    if spec.kind in (ReceiverKind.MRC, ReceiverKind.PZF, ReceiverKind.FULL_ZF):
        k = spec.cancelled_count(cfg.n_r)
        if k >= cfg.n_r:
            raise ValueError(f"cannot cancel k={k} interferers with n_r={cfg.n_r}")
        # Fewer interferers than cancellation slots: cancel what exists.
        k = min(k, field.m)
        return mathkit.nullspace_project(field.h0, list(field.channels[:k]))
    if spec.kind is ReceiverKind.MMSE:
        sigma = interference_covariance(field, cfg)
        v = mathkit.hermitian_solve(sigma, field.h0)
        return v / np.linalg.norm(v)
    if spec.kind is ReceiverKind.MMSE_SAMPLE_COV:
        if rng is None:
            raise ValueError("sample-covariance filter needs an rng for snapshots")
        sigma_hat = sample_covariance(field, cfg, spec.snapshots, rng)
        v = mathkit.hermitian_solve(sigma_hat, field.h0)
        return v / np.linalg.norm(v)
    raise ValueError(f"unknown receiver kind {spec.kind}")


def evaluate_sinr(
    filt: np.ndarray, field: FieldRealization, cfg: NetworkConfig, skip: int = 0
) -> SinrSample:
    """SINR of a unit-norm filter on one realization.

    ``skip`` zeroes the contribution of the first ``skip`` interferers; it is
    used for PZF where those terms are exactly cancelled, keeping 1e-20
    numerical residues out of the interference statistics.
    """
    signal = abs(np.vdot(filt, field.h0)) ** 2
    w = interference_weights(field, cfg)[skip:]
    cross = np.abs(field.channels[skip:].conj() @ filt) ** 2
    interference = float(w @ cross)
    sinr = signal / (cfg.inv_snr + interference)
    h0_sq = np.linalg.norm(field.h0) ** 2
    v_sq = np.linalg.norm(filt) ** 2
    return SinrSample(
        sinr=float(sinr),
        signal_power=float(signal),
        interference_power=interference,
        correlation=float(signal / (h0_sq * v_sq)),
    )
