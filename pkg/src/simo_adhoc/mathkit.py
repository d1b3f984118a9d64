"""Special functions, chi-square sampling, and small complex linear algebra.

Conventions used throughout the package:

* Complex vectors and Hermitian matrices are plain ``numpy`` arrays of
  ``complex128``; no wrapper types.
* "Chi-square with 2s degrees of freedom" follows the communications
  convention: a unit-scale gamma with shape ``s`` (PDF ``x^{s-1} e^{-x} /
  Gamma(s)``), so its mean is ``s`` and not ``2s``.  This is the single
  canonical convention module-wide; any interop with probability-convention
  code must rescale explicitly.
"""

from __future__ import annotations

import numpy as np
from scipy import special as _sp


class DivergentMomentError(ValueError):
    """A requested gamma/chi-square moment does not exist."""


class NotPositiveDefiniteError(ValueError):
    """Matrix passed as a covariance is not positive definite."""


class DegenerateProjectionError(ValueError):
    """Nullspace projection left a numerically zero residual."""


def ln_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0."""
    if not x > 0:
        raise ValueError(f"ln_gamma requires x > 0, got {x}")
    return float(_sp.gammaln(x))


def digamma(x: float) -> float:
    """Digamma (psi_0) function for x > 0."""
    if not x > 0:
        raise ValueError(f"digamma requires x > 0, got {x}")
    return float(_sp.psi(x))


def chi2_moment(i: float, b: float) -> float:
    """E[T^b] = Gamma(i + b) / Gamma(i) for T chi-square with 2i d.o.f.

    Valid when i + b > 0; computed through log-gamma differences so large
    orders (i up to ~1e4 in series tails) do not overflow.
    """
    if not i > 0:
        raise ValueError(f"chi2_moment requires i > 0, got {i}")
    if not i + b > 0:
        raise DivergentMomentError(f"moment E[T_{i}^{b}] diverges (i + b <= 0)")
    return float(np.exp(_sp.gammaln(i + b) - _sp.gammaln(i)))


def gamma_ratio_tail_sum(s: float, start: float) -> float:
    """Sum_{i=start..inf} Gamma(i - s)/Gamma(i), exactly, for s > 1.

    The series telescopes: with a_i = Gamma(i - s) / ((s - 1) Gamma(i - 1))
    one has a_i - a_{i+1} = Gamma(i - s)/Gamma(i), and a_i -> 0, so the sum
    equals a_start.  Requires start > s (all terms finite) and start > 1.
    """
    if not s > 1:
        raise ValueError(f"tail sum requires s > 1, got {s}")
    if not start > s:
        raise DivergentMomentError(f"series diverges for start={start} <= s={s}")
    return float(np.exp(_sp.gammaln(start - s) - _sp.gammaln(start - 1)) / (s - 1))


def sample_chi2(s: float, rng: np.random.Generator) -> float:
    """One chi-square draw with 2s d.o.f. in the package convention (mean s)."""
    return float(rng.standard_gamma(s))


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """iid unit-variance complex Gaussians: CN(0, 1) per entry.

    Real and imaginary parts are drawn adjacently (variance 1/2 each) so a
    given generator state always yields the same values for the same shape.
    """
    if np.isscalar(shape):
        shape = (shape,)
    parts = rng.standard_normal(tuple(shape) + (2,))
    return (parts[..., 0] + 1j * parts[..., 1]) / np.sqrt(2.0)


def hermitian_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A x = b for Hermitian positive-definite A via Cholesky."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as err:
        raise NotPositiveDefiniteError("Cholesky factorization failed") from err
    y = np.linalg.solve(chol, b)
    return np.linalg.solve(chol.conj().T, y)


def orthonormal_basis(vectors: list[np.ndarray] | np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Orthonormal basis of span(vectors) by modified Gram-Schmidt.

    One re-orthogonalization pass is applied to each vector.  Vectors that
    are linearly dependent on their predecessors (residual below ``rtol``
    relative to the input norm) raise ``DegenerateProjectionError``; the
    callers all assume generic (independent) channel vectors.
    """
    basis: list[np.ndarray] = []
    for v in vectors:
        v = np.asarray(v, dtype=complex)
        norm_in = np.linalg.norm(v)
        u = v.copy()
        for _ in range(2):  # MGS + one re-orthogonalization pass
            for q in basis:
                u = u - q * np.vdot(q, u)
        norm_out = np.linalg.norm(u)
        if norm_out < rtol * norm_in:
            raise DegenerateProjectionError("dependent vector in cancellation set")
        basis.append(u / norm_out)
    return np.array(basis) if basis else np.zeros((0, 0), dtype=complex)


def nullspace_project(h0: np.ndarray, cancelled, rtol: float = 1e-12) -> np.ndarray:
    """Unit vector along the projection of h0 onto the orthogonal complement
    of span(cancelled).

    This is the partial-zero-forcing filter direction: among unit filters
    orthogonal to every cancelled vector it maximizes |v^H h0|^2.  With an
    empty cancellation set it reduces to h0 / ||h0|| (pure MRC).
    """
    h0 = np.asarray(h0, dtype=complex)
    dim = h0.shape[0]
    cancelled = list(cancelled)
    if len(cancelled) >= dim:
        raise ValueError(f"cannot cancel {len(cancelled)} vectors in dimension {dim}")
    if not cancelled:
        norm = np.linalg.norm(h0)
        if norm == 0.0:
            raise DegenerateProjectionError("zero desired channel")
        return h0 / norm
    basis = orthonormal_basis(cancelled, rtol=rtol)
    residual = h0.copy()
    for _ in range(2):
        residual = residual - (basis.conj() @ residual) @ basis  # r - Q (Q^H r)
    norm = np.linalg.norm(residual)
    if norm < rtol * np.linalg.norm(h0):
        raise DegenerateProjectionError("desired channel lies in the cancelled span")
    return residual / norm
