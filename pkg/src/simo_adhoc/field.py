"""Interferer geometry and fading: Poisson and square-grid fields.

A field realization holds the ordered squared distances of the M nearest
interferers to the reference receiver together with their vector channels
and the desired channel.  Ordered squared distances of a planar Poisson
process of density ``lam`` form a 1-D Poisson process of intensity
``pi * lam``, so they are sampled as cumulative sums of unit-mean
exponentials divided by ``pi * lam``; this ordered nearest-M representation
has no window edge effects.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import mathkit

#: Hard cap on the number of retained interferers per realization.
MAX_TRUNCATION = 100_000


class TruncationCapWarning(UserWarning):
    """The truncation rule asked for more points than the hard cap."""


@dataclass(frozen=True)
class NetworkConfig:
    """Physical parameters shared by all formulas.

    Attributes
    ----------
    d : TX-RX separation in meters.
    alpha : path-loss exponent, > 2.
    snr : interference-free SNR ``rho d^-alpha / eta`` (linear scale,
        ``math.inf`` for the no-noise case).  Transmit power and noise
        level never appear separately.
    beta : SINR threshold (linear).
    epsilon : outage constraint, in (0, 1).
    n_r : number of receive antennas.
    """

    d: float
    alpha: float
    snr: float
    beta: float
    epsilon: float
    n_r: int

    def __post_init__(self):
        if not self.alpha > 2:
            raise ValueError(f"alpha must exceed 2, got {self.alpha}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not self.snr > 0:
            raise ValueError(f"snr must be positive, got {self.snr}")
        if not (isinstance(self.n_r, (int, np.integer)) and self.n_r >= 1):
            raise ValueError(f"n_r must be a positive integer, got {self.n_r}")

    @property
    def inv_snr(self) -> float:
        return 0.0 if math.isinf(self.snr) else 1.0 / self.snr


@dataclass
class FieldRealization:
    """One draw of interferer geometry and fading.

    ``sq_distances`` are the strictly increasing squared distances |X_i|^2
    (m^2) of the m retained interferers, ``channels[i]`` is the n_r-vector
    channel of the i-th nearest interferer, and ``h0`` is the desired
    channel.
    """

    sq_distances: np.ndarray
    channels: np.ndarray
    h0: np.ndarray
    m: int

    def __post_init__(self):
        if self.sq_distances.shape != (self.m,):
            raise ValueError("sq_distances length must equal m")
        if self.channels.shape[0] != self.m:
            raise ValueError("one channel per interferer required")
        if self.m > 1 and not np.all(np.diff(self.sq_distances) > 0):
            raise ValueError("sq_distances must be strictly increasing")


def lemma2_tail_bound(cfg: NetworkConfig, lam: float, m: int) -> float:
    """Upper bound on the mean interference from points beyond index m.

    Kershaw-based bound: (pi d^2 lam)^(a/2) (a/2-1)^-1 (m - ceil(a/2))^(1-a/2),
    valid for m > ceil(alpha/2).
    """
    s = cfg.alpha / 2.0
    c = math.ceil(s)
    if m <= c:
        return math.inf
    return (math.pi * cfg.d**2 * lam) ** s / (s - 1.0) * (m - c) ** (1.0 - s)


def lemma2_tail_mean(cfg: NetworkConfig, lam: float, m: int) -> float:
    """Exact mean interference from points beyond index m (telescoped series)."""
    s = cfg.alpha / 2.0
    return (math.pi * cfg.d**2 * lam) ** s * mathkit.gamma_ratio_tail_sum(s, m + 1)


def truncation_order(cfg: NetworkConfig, lam: float, tol: float) -> int:
    """Number of interferers M to retain per realization.

    Smallest M >= 5 n_r such that the Lemma-2 tail bound beyond M is at most
    ``tol`` times (1/snr + mean interference with ceil(alpha/2)+1 cancelled).
    Capped at MAX_TRUNCATION with a TruncationCapWarning; slowly decaying
    tails (alpha close to 2, no noise) hit the cap.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    s = cfg.alpha / 2.0
    c = math.ceil(s)
    k_ref = c + 1
    mean_ref = (math.pi * cfg.d**2 * lam) ** s * mathkit.gamma_ratio_tail_sum(s, k_ref + 1)
    target = tol * (cfg.inv_snr + mean_ref)
    # Invert tail(M) = (pi d^2 lam)^s (s-1)^-1 (M-c)^(1-s) <= target.
    scale = (math.pi * cfg.d**2 * lam) ** s / (s - 1.0)
    needed = c + math.ceil((target / scale) ** (-1.0 / (s - 1.0)))
    m = max(5 * cfg.n_r, needed)
    if m > MAX_TRUNCATION:
        warnings.warn(
            f"truncation order {m} exceeds cap {MAX_TRUNCATION}; capping",
            TruncationCapWarning,
            stacklevel=2,
        )
        m = MAX_TRUNCATION
    return int(m)


def sample_ppp_field(
    cfg: NetworkConfig, lam: float, m: int, rng: np.random.Generator
) -> FieldRealization:
    """Draw the m nearest Poisson interferers and all fading channels.

    Draw order is fixed (distances, then h0, then interferer channels) so
    that a given generator state maps to exactly one realization.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if not lam > 0:
        raise ValueError("lam must be positive")
    gaps = rng.standard_exponential(m)
    sq_distances = np.cumsum(gaps) / (math.pi * lam)
    h0 = mathkit.complex_normal(rng, cfg.n_r)
    channels = mathkit.complex_normal(rng, (m, cfg.n_r))
    return FieldRealization(sq_distances=sq_distances, channels=channels, h0=h0, m=m)


def grid_candidate_points(lam: float, m: int, d: float) -> np.ndarray:
    """Lattice points a/sqrt(lam), (a, b) != (0, 0), guaranteed to contain the
    m nearest to any receiver within distance d of the origin.

    Returned in lexicographic (a, b) order, as an (n, 2) float array.
    """
    # Radius around the receiver that surely holds m lattice points, padded
    # for lattice fluctuation (Gauss circle error is O(R)).
    r_pts = math.sqrt((1.3 * m + 16.0) / (math.pi * lam)) + 2.0 / math.sqrt(lam)
    extent = int(math.ceil((r_pts + d) * math.sqrt(lam))) + 1
    axis = np.arange(-extent, extent + 1)
    aa, bb = np.meshgrid(axis, axis, indexing="ij")
    pts = np.column_stack([aa.ravel(), bb.ravel()]).astype(float)
    pts = pts[~np.all(pts == 0.0, axis=1)]  # origin cell hosts the desired TX
    return pts / math.sqrt(lam)


def _strictly_increasing(sq: np.ndarray) -> np.ndarray:
    """Bump exact ties upward by one ULP so the ordering contract holds."""
    out = sq.copy()
    for i in range(1, out.size):
        if out[i] <= out[i - 1]:
            out[i] = np.nextafter(out[i - 1], np.inf)
    return out


def sample_grid_field(
    cfg: NetworkConfig, lam: float, m: int, rng: np.random.Generator
) -> FieldRealization:
    """Square-grid interferers with lattice constant 1/sqrt(lam).

    The desired TX sits on the origin lattice point (removed from the
    interferer set) and the receiver at a uniform random point on the circle
    of radius d around it.  The m nearest lattice points to the receiver are
    retained, sorted by distance with lexicographic (a, b) tie-breaking;
    fading is iid Rayleigh exactly as in the Poisson case.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if not lam > 0:
        raise ValueError("lam must be positive")
    phi = rng.uniform(0.0, 2.0 * math.pi)
    rx = cfg.d * np.array([math.cos(phi), math.sin(phi)])
    pts = grid_candidate_points(lam, m, cfg.d)
    diff = pts - rx
    sq = diff[:, 0] ** 2 + diff[:, 1] ** 2
    order = np.lexsort((pts[:, 1], pts[:, 0], sq))[:m]
    sq_distances = _strictly_increasing(sq[order])
    h0 = mathkit.complex_normal(rng, cfg.n_r)
    channels = mathkit.complex_normal(rng, (m, cfg.n_r))
    return FieldRealization(sq_distances=sq_distances, channels=channels, h0=h0, m=m)


def field_to_csv_rows(field: FieldRealization):
    """Debug dump: one row per interferer (index, |X|^2, channel components)."""
    for i in range(field.m):
        row = [i + 1, field.sq_distances[i]]
        for c in field.channels[i]:
            row.extend([c.real, c.imag])
        yield row
