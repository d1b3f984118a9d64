"""Independent oracles used to freeze expected values.

These are written directly from first principles (classical closed forms and
high-precision mpmath series), never through the package's own code paths,
so a test comparing the two is a genuine cross-check.
"""

import math

import mpmath as mp

mp.mp.dps = 30


def rayleigh_ppp_outage(lam: float, d: float, alpha: float, beta: float) -> float:
    """Single-antenna outage over a Rayleigh/Poisson field without noise.

    Success probability exp(-pi lam d^2 beta^(2/a) Gamma(1+2/a) Gamma(1-2/a)).
    """
    inv_a = 2.0 / alpha
    expo = (
        math.pi * lam * d * d * beta**inv_a * math.gamma(1 + inv_a) * math.gamma(1 - inv_a)
    )
    return 1.0 - math.exp(-expo)


def rayleigh_ppp_max_density(eps: float, d: float, alpha: float, beta: float) -> float:
    """Density solving the closed-form single-antenna outage equal to eps."""
    inv_a = 2.0 / alpha
    denom = math.pi * d * d * beta**inv_a * math.gamma(1 + inv_a) * math.gamma(1 - inv_a)
    return -math.log(1.0 - eps) / denom


def gamma_ratio_series(s: float, start: int) -> float:
    """sum_{i>=start} Gamma(i-s)/Gamma(i) by high-precision Euler-Maclaurin
    summation (the terms decay algebraically, too slowly for extrapolation)."""
    return float(
        mp.nsum(lambda i: mp.gamma(i - s) / mp.gamma(i), [start, mp.inf], method="e")
    )


def digamma_series(alpha: float, start: int) -> float:
    """sum_{i>=start} exp(-(gamma + (alpha/2) psi0(i)))."""
    g = mp.euler
    return float(
        mp.nsum(
            lambda i: mp.e ** (-(g + alpha / 2 * mp.digamma(i))),
            [start, mp.inf],
            method="e",
        )
    )


def var_ub_series(alpha: float, k: int) -> float:
    """Theorem-style variance bound divided by (pi d^2 lam)^alpha.

    sum_{i>k} (E[T_i^-a] + Var(T_i^-a/2)) plus twice the upper-triangle
    product of sqrt-variances; the cross term is ((sum sqrt V)^2 - sum V)/2
    by algebra.
    """
    s = alpha / 2

    def mom(i, b):
        return mp.gamma(i + b) / mp.gamma(i)

    def var_half(i):
        return mom(i, -alpha) - mom(i, -s) ** 2

    sum_a = mp.nsum(lambda i: mom(i, -alpha), [k + 1, mp.inf], method="e")
    sum_v = mp.nsum(var_half, [k + 1, mp.inf], method="e")
    sum_sqrt = mp.nsum(lambda i: mp.sqrt(var_half(i)), [k + 1, mp.inf], method="e")
    cross = (sum_sqrt**2 - sum_v) / 2
    return float(sum_a + sum_v + 2 * cross)


def theta_map(theta: float, alpha: float) -> float:
    """(1-theta)^(2/a) theta^(1-2/a), the shared theta dependence of the bounds."""
    inv_a = 2.0 / alpha
    return (1 - theta) ** inv_a * theta ** (1 - inv_a)


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-9) -> float:
    """Argmax of a unimodal function by golden-section search."""
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    while b - a > tol:
        if f(c) > f(d):
            b, d = d, c
            c = b - phi * (b - a)
        else:
            a, c = c, d
            d = a + phi * (b - a)
    return 0.5 * (a + b)
