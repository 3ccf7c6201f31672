"""Coded caching with inactive users: placement, delivery, loads and LP optimisation."""
from __future__ import annotations

from cachesim.core import (
    DemandVector,
    InactivityProfile,
    SystemConfig,
    binomial,
    enumerate_subsets,
    worst_case_demand,
)
from cachesim.placement import (
    DivisibilityError,
    Library,
    WeightVector,
    decentralized_placement,
    man_placement,
    weighted_placement,
)
from cachesim.delivery import (
    DecodeError,
    Transcript,
    centralized_delivery,
    decentralized_delivery_I,
    decentralized_delivery_II,
    decode,
    measured_load,
    weighted_delivery,
)

__version__ = "0.1.0"
