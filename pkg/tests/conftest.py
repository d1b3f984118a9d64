import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from simo_adhoc import bounds, experiments
from simo_adhoc.field import NetworkConfig
from simo_adhoc.receivers import full_zf, mmse, mrc, pzf


def make_cfg(alpha=4.0, n_r=4, snr=math.inf, beta=1.0, epsilon=0.1, d=1.0):
    return NetworkConfig(d=d, alpha=alpha, snr=snr, beta=beta, epsilon=epsilon, n_r=n_r)


def theta_k(alpha: float, n_r: int) -> int:
    """Cancellation count k = round(theta* n_r), clipped to the legal range."""
    k = int(round(bounds.theta_star(alpha) * n_r))
    return min(max(k, 0), n_r - 1)


@pytest.fixture(scope="session")
def density_tables():
    """Maximum densities for the four standard receivers, 2e4 trials/point,
    on the grid used by the scaling and sandwich acceptance criteria.

    Shared session-wide because the searches dominate the suite's runtime.
    """
    tables = {}
    for alpha in (3.0, 4.0):
        for n_r in (2, 4, 8, 12, 16):
            cfg = make_cfg(alpha=alpha, n_r=n_r)
            k = theta_k(alpha, n_r)
            specs = [mrc(), pzf(k), full_zf(), mmse()]
            table = experiments.density_table(cfg, specs, trials=20_000, seed=101)
            tables[(alpha, n_r)] = {
                "mrc": table["mrc"],
                "pzf_theta": table[f"pzf{k}"],
                "full_zf": table["full_zf"],
                "mmse": table["mmse"],
                "k": k,
            }
    return tables
