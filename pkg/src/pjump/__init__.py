"""Numerics for the periodically forced p-Laplacian oscillator with a jumping nonlinearity.

Subpackages build on each other: :mod:`ptrig` (generalized sine), :mod:`jumping`
(coefficients and auxiliary orbit), :mod:`dynamics` (integration, Poincare map,
action-angle chart), :mod:`reduction` (averaged potential and growth-rate
scans), :mod:`analysis` (rotation, twist, invariant curves, boundedness).
"""
from .dynamics import ActionAngle, PhaseState
from .errors import (AnalysisError, DomainError, HypothesisError, IntegrationError, InversionError,
                     ParameterError)
from .forcing import ForcingSpec, Harmonic
from .jumping import JumpingParams, derive_params

__version__ = "0.1.0"

__all__ = [
    "ActionAngle",
    "PhaseState",
    "ForcingSpec",
    "Harmonic",
    "JumpingParams",
    "derive_params",
    "DomainError",
    "ParameterError",
    "HypothesisError",
    "IntegrationError",
    "InversionError",
    "AnalysisError",
]
