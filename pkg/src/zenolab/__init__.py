"""Quantum Zeno effect under repeated quantum-nondemolition measurements.

Subpackages
-----------
spectral
    Hermitian eigendecomposition, unitary exponentials, matrix powers.
zeno
    Generic system + apparatus engine, first-order closed forms and
    critical measurement times.
xx
    XX chain as free fermions: correlation-matrix propagation under
    repeated measurement of site 0.
oracle
    Fock-space and single-particle brute-force validators.
cli
    The ``zeno`` command-line front end.
"""
from .errors import (
    ConfigError,
    ConvergenceFailure,
    NonHermitian,
    NumericDrift,
    SizeLimit,
    ZenoError,
    ZeroEigenvalue,
)
from .spectral import SpectralDecomposition, eig_hermitian, expm_unitary, matpow
from .xx import ChainConfig, MeasurementConfig, XxTrace, run_trace
from .zeno import BlockSpectra, QndModel, ZenoSchedule, ZenoTrace, evolve_exact

__all__ = [
    "BlockSpectra",
    "ChainConfig",
    "ConfigError",
    "ConvergenceFailure",
    "MeasurementConfig",
    "NonHermitian",
    "NumericDrift",
    "QndModel",
    "SizeLimit",
    "SpectralDecomposition",
    "XxTrace",
    "ZenoError",
    "ZenoSchedule",
    "ZenoTrace",
    "ZeroEigenvalue",
    "eig_hermitian",
    "evolve_exact",
    "expm_unitary",
    "matpow",
    "run_trace",
]

__version__ = "0.1.0"
