"""Transonic shocks in nearly cylindrical axisymmetric nozzles."""

from .gas import (
    FlowState,
    GasParameters,
    NormalShockPair,
    normal_shock_downstream,
    normal_shock_pair,
)

__all__ = [
    "FlowState",
    "GasParameters",
    "NormalShockPair",
    "normal_shock_downstream",
    "normal_shock_pair",
]
