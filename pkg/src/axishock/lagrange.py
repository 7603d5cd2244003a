"""Modified Lagrange coordinates (xi, eta) and the shock-fixing transform.

With the mass flux normalized to 2, eta is the square root of the stream
function, so eta = r for the background flow and the nozzle wall sits at
eta = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np
from scipy.integrate import quad

from .errors import DegenerateMapError, GridError, InvalidFrontError


@dataclass(frozen=True)
class MeridianGrid:
    xi_nodes: np.ndarray
    eta_nodes: np.ndarray

    def __post_init__(self):
        xi = np.asarray(self.xi_nodes, dtype=float)
        eta = np.asarray(self.eta_nodes, dtype=float)
        object.__setattr__(self, "xi_nodes", xi)
        object.__setattr__(self, "eta_nodes", eta)
        for name, a in (("xi", xi), ("eta", eta)):
            if a.ndim != 1 or a.size < 3:
                raise GridError(f"{name} needs at least 3 nodes")
            if np.any(np.diff(a) <= 0):
                raise GridError(f"{name} nodes must be strictly increasing")
        if eta[0] != 0.0 or eta[-1] != 1.0:
            raise GridError("eta nodes must run from 0 to 1")

    @classmethod
    def uniform(cls, a, b, n_xi, n_eta) -> "MeridianGrid":
        return cls(np.linspace(a, b, n_xi), np.linspace(0.0, 1.0, n_eta))

    @property
    def shape(self):
        return (self.xi_nodes.size, self.eta_nodes.size)


@dataclass(frozen=True)
class Field2D:
    grid: MeridianGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise GridError(f"field shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise GridError("field has non-finite values")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class ShockFront:
    """Front xi = psi(eta) with psi(1) = xi_star.

    ``slope`` is psi' on ``eta``. ``psi`` may be given when the caller uses
    its own quadrature; otherwise it is built by the trapezoid rule.
    """

    xi_star: float
    eta: np.ndarray
    slope: np.ndarray
    psi_values: np.ndarray | None = field(default=None)

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=float)
        slope = np.asarray(self.slope, dtype=float)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "slope", slope)
        if self.psi_values is None:
            if eta[-1] != 1.0:
                raise GridError("front nodes must end at eta = 1")
            tail = np.concatenate(
                [np.cumsum((0.5 * (slope[1:] + slope[:-1]) * np.diff(eta))[::-1])[::-1], [0.0]]
            )
            object.__setattr__(self, "psi_values", self.xi_star - tail)
        else:
            object.__setattr__(self, "psi_values", np.asarray(self.psi_values, dtype=float))

    @classmethod
    def flat(cls, xi_star, eta) -> "ShockFront":
        eta = np.asarray(eta, dtype=float)
        return cls(xi_star, eta, np.zeros_like(eta))

    def psi(self, eta):
        return np.interp(eta, self.eta, self.psi_values)

    def dpsi(self, eta):
        return np.interp(eta, self.eta, self.slope)

    def check_inside(self, L: float):
        if np.any(self.psi_values >= L) or np.any(self.psi_values <= 0.0):
            raise InvalidFrontError("shock front leaves (0, L)", stage="front")


def _integrate(f, a, b, tol):
    val, _ = quad(lambda t: float(f(np.array([t]))[0]), a, b, epsabs=tol, epsrel=tol, limit=200)
    return val


def eta_from_physical(z, r, rho_u, tol=1e-13):
    """Modified Lagrangian ordinate of (z, r): sqrt(int_0^r t rho_u(z, t) dt).

    ``rho_u(z, t)`` is the axial mass flux; it must stay positive on the path.
    """
    if r < 0:
        raise DegenerateMapError("radius must be non-negative")
    if r == 0:
        return 0.0

    def g(t):
        m = np.asarray(rho_u(z, t), dtype=float) * np.ones_like(t)
        if np.any(m <= 0):
            raise DegenerateMapError("axial mass flux vanishes on the integration path")
        return t * m

    return math.sqrt(_integrate(g, 0.0, r, tol))


def radius_from_eta(xi, eta, rho_u, tol=1e-13):
    """Physical radius r(xi, eta) = (4 int_0^eta t / rho_u(xi, t) dt)^(1/2)."""
    if eta == 0:
        return 0.0

    def g(t):
        m = np.asarray(rho_u(xi, t), dtype=float) * np.ones_like(t)
        if np.any(m <= 0):
            raise DegenerateMapError("non-positive axial mass flux sample")
        return t / m

    return math.sqrt(4.0 * _integrate(g, 0.0, eta, tol))


def jacobian(xi, eta, r, rho_u):
    """r rho_u / (2 eta); at the axis the limit sqrt(rho_u / 2)."""
    m = rho_u(xi, eta) if callable(rho_u) else rho_u
    if eta == 0:
        return math.sqrt(m / 2.0)
    return r * m / (2.0 * eta)


def radius_squared_profile(rho_u_half, h):
    """r^2 on a uniform eta grid from the axial mass flux at cell midpoints.

    ``rho_u_half`` has the cell index on its last axis. Returns
    (r2_nodes, r2_half) with n+1 and n entries along that axis. The midpoint
    sums reproduce r = eta exactly for rho_u = 2.
    """
    m = np.asarray(rho_u_half, dtype=float)
    if np.any(m <= 0):
        raise DegenerateMapError("non-positive axial mass flux sample")
    n = m.shape[-1]
    eta_half = (np.arange(n) + 0.5) * h
    inc = 4.0 * h * eta_half / m
    r2_nodes = np.concatenate([np.zeros(m.shape[:-1] + (1,)), np.cumsum(inc, axis=-1)], axis=-1)
    r2_half = r2_nodes[..., :-1] + 2.0 * h * (eta_half - 0.25 * h) / m
    return r2_nodes, r2_half


class ShockFixTransform:
    """xi~ = L + (L - xi_ref)(xi - L)/(L - psi(eta)).

    Maps {psi(eta) < xi < L} onto {xi_ref < xi~ < L}, fixing eta.
    ``psi`` and ``dpsi`` are callables of eta.
    """

    def __init__(self, psi, dpsi, L, xi_ref):
        self.psi = psi
        self.dpsi = dpsi
        self.L = float(L)
        self.xi_ref = float(xi_ref)

    def _gap(self, eta):
        gap = self.L - np.asarray(self.psi(eta))
        if np.any(gap <= 0):
            raise InvalidFrontError("front reaches the exit", stage="transform")
        return gap

    def forward(self, xi, eta):
        return self.L + (self.L - self.xi_ref) * (np.asarray(xi) - self.L) / self._gap(eta)

    def inverse(self, xit, eta):
        return self.L + self._gap(eta) * (np.asarray(xit) - self.L) / (self.L - self.xi_ref)

    def stretch(self, eta):
        """d xi~ / d xi = (L - xi_ref)/(L - psi)."""
        return (self.L - self.xi_ref) / self._gap(eta)

    def zeta(self, xit, eta):
        """d xi~ / d eta at fixed xi, written in xi~."""
        return (np.asarray(xit) - self.L) * np.asarray(self.dpsi(eta)) / self._gap(eta)


def shock_fix_transform(front: ShockFront, L, xi_star_dot):
    """Return the pair (T, T^-1) for ``front``."""
    if np.any(front.psi_values >= L):
        raise InvalidFrontError("front reaches the exit", stage="transform")
    tr = ShockFixTransform(front.psi, front.dpsi, L, xi_star_dot)
    return tr.forward, tr.inverse
