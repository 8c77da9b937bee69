"""Stochastic-geometry analysis of downlink and uplink cellular interference."""

from .errors import (AccuracyError, DomainError, SgcellError, UnsupportedConfigurationError,
                     ValidationError)
from .geometry import AnnularRegion, NetworkConfig, Tier, TierSet
from .interference import Constellation, EiDRepresentation, SignalingMode
from .metrics import ModulationScheme
from .numerics import QuadratureSpec
from .simulator import EmpiricalDistribution, SimulationPlan
from .transforms import LaplaceTransform

__version__ = "0.1.0"

__all__ = [
    "AccuracyError", "DomainError", "SgcellError", "UnsupportedConfigurationError",
    "ValidationError", "AnnularRegion", "NetworkConfig", "Tier", "TierSet", "Constellation",
    "EiDRepresentation", "SignalingMode", "ModulationScheme", "QuadratureSpec",
    "EmpiricalDistribution", "SimulationPlan", "LaplaceTransform",
]
