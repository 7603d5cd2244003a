"""Polytropic gas thermodynamics and plane normal shocks."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, NotAShockError


@dataclass(frozen=True)
class GasParameters:
    gamma: float = 1.4
    c_v: float = 1.0
    s0: float = 0.0

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise DomainError(f"gamma must exceed 1, got {self.gamma}")
        if not self.c_v > 0.0:
            raise DomainError(f"c_v must be positive, got {self.c_v}")

    @property
    def mu2(self) -> float:
        return (self.gamma - 1.0) / (self.gamma + 1.0)

    def A(self, s):
        """Entropy function in p = A(s) rho^gamma, with A(s0) = gamma - 1."""
        return (self.gamma - 1.0) * np.exp((np.asarray(s) - self.s0) / self.c_v)

    def entropy(self, p, rho):
        """Inverse of the state equation: s such that p = A(s) rho^gamma."""
        p = np.asarray(p, dtype=float)
        rho = np.asarray(rho, dtype=float)
        return self.s0 + self.c_v * np.log(p / ((self.gamma - 1.0) * rho**self.gamma))


# Array helpers. All accept numpy arrays and broadcast.

def density_ps(p, s, gas: GasParameters):
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0):
        raise DomainError("pressure must be positive")
    return (p / gas.A(s)) ** (1.0 / gas.gamma)


def sound_speed2_ps(p, s, gas: GasParameters):
    return gas.gamma * np.asarray(p) / density_ps(p, s, gas)


def enthalpy_ps(p, s, gas: GasParameters):
    return gas.gamma * np.asarray(p) / ((gas.gamma - 1.0) * density_ps(p, s, gas))


def temperature_ps(p, s, gas: GasParameters):
    """T = di/ds at fixed p, i.e. p / ((gamma-1) c_v rho)."""
    return np.asarray(p) / ((gas.gamma - 1.0) * gas.c_v * density_ps(p, s, gas))


def bernoulli_pqs(p, q, s, gas: GasParameters):
    return 0.5 * np.asarray(q) ** 2 + enthalpy_ps(p, s, gas)


def speed_from_bernoulli(B, p, s, gas: GasParameters):
    """Speed q > 0 with 0.5 q^2 + i(p, s) = B."""
    k2 = 2.0 * (B - enthalpy_ps(p, s, gas))
    if np.any(k2 <= 0.0):
        raise DomainError("Bernoulli constant too small for the given pressure")
    return np.sqrt(k2)


@dataclass(frozen=True)
class FlowState:
    theta: float
    p: float
    q: float
    s: float

    def rho(self, gas: GasParameters) -> float:
        return float(density_ps(self.p, self.s, gas))

    def c(self, gas: GasParameters) -> float:
        return math.sqrt(float(sound_speed2_ps(self.p, self.s, gas)))

    def mach(self, gas: GasParameters) -> float:
        return self.q / self.c(gas)

    def enthalpy(self, gas: GasParameters) -> float:
        return float(enthalpy_ps(self.p, self.s, gas))

    def bernoulli(self, gas: GasParameters) -> float:
        return 0.5 * self.q**2 + self.enthalpy(gas)

    def temperature(self, gas: GasParameters) -> float:
        return float(temperature_ps(self.p, self.s, gas))

    def mass_flux(self, gas: GasParameters) -> float:
        return self.rho(gas) * self.q

    def as_array(self) -> np.ndarray:
        return np.array([self.theta, self.p, self.q, self.s])

    @classmethod
    def from_rho(cls, theta, p, q, rho, gas: GasParameters) -> "FlowState":
        return cls(theta, p, q, float(gas.entropy(p, rho)))


def density(state: FlowState, gas: GasParameters) -> float:
    return state.rho(gas)


def bernoulli(state: FlowState, gas: GasParameters) -> float:
    return state.bernoulli(gas)


def normal_shock_downstream(upstream: FlowState, gas: GasParameters) -> FlowState:
    """Downstream state of a plane normal shock."""
    if upstream.theta != 0.0:
        raise DomainError("normal shock needs an axial upstream state")
    m = upstream.mach(gas)
    if m <= 1.0:
        raise NotAShockError(f"upstream Mach number {m} is not supersonic")
    mu2 = gas.mu2
    g = gas.gamma
    pm, qm = upstream.p, upstream.q
    rm = upstream.rho(gas)
    cm2 = g * pm / rm
    pp = ((1.0 + mu2) * m**2 - mu2) * pm
    qp = mu2 * (qm + 2.0 / (g - 1.0) * cm2 / qm)
    rp = rm * qm / qp
    return FlowState.from_rho(0.0, pp, qp, rp, gas)


def critical_speed2(upstream: FlowState, gas: GasParameters) -> float:
    """c_*^2, equal to q_+ q_- across a normal shock."""
    cm2 = upstream.c(gas) ** 2
    return gas.mu2 * (upstream.q**2 + 2.0 * cm2 / (gas.gamma - 1.0))


def rh_residual_normal(up: FlowState, down: FlowState, gas: GasParameters):
    """Jumps ([rho q], [p + rho q^2], [B]) across an axial discontinuity."""
    if up.theta != 0.0 or down.theta != 0.0:
        raise DomainError("normal-shock residual needs axial states")
    rm, rp = up.rho(gas), down.rho(gas)
    return (
        rp * down.q - rm * up.q,
        (down.p + rp * down.q**2) - (up.p + rm * up.q**2),
        down.bernoulli(gas) - up.bernoulli(gas),
    )


@dataclass(frozen=True)
class NormalShockPair:
    upstream: FlowState
    downstream: FlowState
    gas: GasParameters
    xbar_s: float | None = None
    # rho_normalized / rho_physical; velocities scale by 1/sqrt of this.
    scale: float = 1.0

    def __post_init__(self):
        if not self.jump_p > 0.0:
            raise NotAShockError("pressure must increase across the shock")

    @property
    def jump_p(self) -> float:
        return self.downstream.p - self.upstream.p

    @property
    def mass_flux(self) -> float:
        return self.upstream.mass_flux(self.gas)

    @property
    def c_star2(self) -> float:
        return critical_speed2(self.upstream, self.gas)

    @property
    def normalized(self) -> bool:
        return abs(self.mass_flux - 2.0) < 1e-12

    def side(self, which: str) -> FlowState:
        return self.downstream if which == "+" else self.upstream

    def to_physical(self, rho, q):
        """Undo the mass-flux normalization on density and speed arrays."""
        return np.asarray(rho) / self.scale, np.asarray(q) * math.sqrt(self.scale)

    def with_xbar(self, xbar_s: float) -> "NormalShockPair":
        return replace(self, xbar_s=xbar_s)


def normal_shock_pair(mach, p, rho, gas: GasParameters, normalize=True):
    """Background pair from upstream (M, p, rho).

    With ``normalize`` the density is rescaled (p and M fixed, speed
    rescaled to match) so that rho q = 2 on both sides. This is the
    similarity scaling rho -> k rho, q -> q / sqrt(k) of the steady Euler
    equations, so geometry and Mach numbers are unchanged.
    """
    if mach <= 1.0:
        raise NotAShockError(f"upstream Mach number {mach} is not supersonic")
    if p <= 0.0 or rho <= 0.0:
        raise DomainError("upstream pressure and density must be positive")
    scale = 1.0
    if normalize:
        rho_n = 4.0 / (gas.gamma * p * mach**2)
        scale = rho_n / rho
        rho = rho_n
    q = mach * math.sqrt(gas.gamma * p / rho)
    up = FlowState.from_rho(0.0, p, q, rho, gas)
    return NormalShockPair(up, normal_shock_downstream(up, gas), gas, scale=scale)
