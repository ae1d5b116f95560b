"""Sparse recovery by partial inversion, with the ensembles and harness used to study it."""

from .recovery import (
    RecoveryConfig,
    RecoveryResult,
    cosamp,
    l1_baseline,
    partinv,
    partinv_wavelet,
)

__version__ = "0.1.0"

__all__ = [
    "RecoveryConfig",
    "RecoveryResult",
    "cosamp",
    "l1_baseline",
    "partinv",
    "partinv_wavelet",
    "__version__",
]
