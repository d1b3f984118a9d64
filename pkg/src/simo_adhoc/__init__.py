"""Monte Carlo simulator and closed-form bounds for SIMO receivers in
Poisson (and grid) ad hoc networks.

The package estimates the maximum transmitter density that keeps outage
below a target for MRC, partial zero forcing, full zero forcing, and MMSE
receive filters, and evaluates the matching analytical lower/upper bounds.
"""

__version__ = "0.1.0"

from .field import NetworkConfig, FieldRealization
from .receivers import ReceiverKind, ReceiverSpec, SinrSample
from .bounds import BoundResult
from .experiments import OutageEstimate, DensityEstimate

__all__ = [
    "NetworkConfig",
    "FieldRealization",
    "ReceiverKind",
    "ReceiverSpec",
    "SinrSample",
    "BoundResult",
    "OutageEstimate",
    "DensityEstimate",
    "__version__",
]
