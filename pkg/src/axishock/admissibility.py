"""Shock-position criterion: R(z), the exit-pressure functional, and the root solve."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import DegenerateRootWarning, HypothesisError, InadmissibleExitPressure
from .gas import NormalShockPair
from .rankine_hugoniot import kdot as _kdot

QUAD_TOL = 1e-13
DEGENERATE_THETA = 1e-8


class Profile:
    """A scalar profile given by polynomial coefficients or a sample table."""

    def __init__(self, fn, kind, data):
        self._fn = fn
        self.kind = kind
        self.data = data

    @classmethod
    def polynomial(cls, coeffs) -> "Profile":
        """Coefficients in ascending powers."""
        poly = Polynomial(np.asarray(coeffs, dtype=float))
        return cls(poly, "polynomial", list(map(float, coeffs)))

    @classmethod
    def table(cls, x, y) -> "Profile":
        x = np.asarray(x, dtype=float)
        if np.any(np.diff(x) <= 0):
            raise HypothesisError("table abscissae must be strictly increasing")
        return cls(CubicSpline(x, np.asarray(y, dtype=float)), "table", (x.tolist(), list(y)))

    @classmethod
    def constant(cls, c) -> "Profile":
        return cls.polynomial([c])

    @classmethod
    def from_callable(cls, fn) -> "Profile":
        return cls(fn, "callable", None)

    def __call__(self, x):
        return self._fn(x)

    def derivative(self, n=1):
        if self.kind in ("polynomial", "table"):
            d = self._fn.deriv(n) if self.kind == "polynomial" else self._fn.derivative(n)
            return d
        h = 1e-3

        def fd(x, k=n):
            if k == 0:
                return self._fn(x)
            return (fd(x + h, k - 1) - fd(x - h, k - 1)) / (2 * h)

        return fd

    def integral(self, a, b, weight=None):
        if weight is None:
            f = self._fn
        else:
            f = lambda t: weight(t) * self._fn(t)  # noqa: E731
        val, _ = quad(f, a, b, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
        return val


@dataclass
class NozzleSpec:
    L: float
    sigma: float
    Theta: Profile
    Pe: Profile

    def validate(self, strict=True, tol=1e-10):
        if not self.L > 0:
            raise HypothesisError("nozzle length must be positive")
        if self.sigma < 0:
            raise HypothesisError("perturbation amplitude must be non-negative")
        for k in range(3):
            v = float(self.Theta.derivative(k)(0.0)) if k else float(self.Theta(0.0))
            if abs(v) > tol:
                raise HypothesisError(
                    f"wall profile compatibility Theta^({k})(0) = 0 violated ({v:.3e})",
                    condition="Theta(0) = Theta'(0) = Theta''(0) = 0",
                )
        z = np.linspace(0.0, self.L, 401)[1:-1]
        th = np.asarray(self.Theta(z), dtype=float)
        if np.max(np.abs(th)) < DEGENERATE_THETA:
            raise HypothesisError("wall profile Theta vanishes identically", condition="Theta != 0")
        if strict and np.any(th <= 0):
            raise HypothesisError(
                "wall profile must be positive on (0, L)", condition="Theta(z) > 0 on (0, L)"
            )
        return self


def criterion_R(z, spec: NozzleSpec, kdot: float) -> float:
    return spec.Theta.integral(0.0, spec.L) - kdot * spec.Theta.integral(0.0, z)


def admissible_band(spec: NozzleSpec, kdot: float):
    """(R_*, R^*) = ((1 - kdot) int Theta, int Theta)."""
    total = spec.Theta.integral(0.0, spec.L)
    return (1.0 - kdot) * total, total


def pe_prefactor(pair: NormalShockPair) -> float:
    gas = pair.gas
    d = pair.downstream
    return 2.0 * (1.0 - d.mach(gas) ** 2) / (d.rho(gas) ** 2 * d.q**3)


def criterion_Pe(spec: NozzleSpec, pair: NormalShockPair) -> float:
    return pe_prefactor(pair) * spec.Pe.integral(0.0, 1.0, weight=lambda t: t)


@dataclass(frozen=True)
class PositionReport:
    xi_star: float
    r_low: float
    r_high: float
    pe: float
    kdot: float
    residual: float


def _root(spec, k, pe, a, b):
    f = lambda z: criterion_R(z, spec, k) - pe  # noqa: E731
    scale = max(1.0, abs(spec.Theta.integral(0.0, spec.L)))
    z = brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    res = f(z)
    if abs(res) >= 1e-12 * scale:
        # polish with secant steps on the smooth monotone function
        for _ in range(5):
            d = -k * float(spec.Theta(z))
            if d == 0:
                break
            z -= res / d
            res = f(z)
    return z, res


def solve_shock_position(spec: NozzleSpec, pair: NormalShockPair, report=False):
    """Abscissa xi* with R(xi*) = P_e; raises if P_e is outside (R_*, R^*)."""
    k = _kdot(pair)
    pe = criterion_Pe(spec, pair)
    lo, hi = admissible_band(spec, k)
    if not (min(lo, hi) < pe < max(lo, hi)):
        raise InadmissibleExitPressure(lo, pe, hi)
    z, res = _root(spec, k, pe, 0.0, spec.L)
    if abs(float(spec.Theta(z))) < DEGENERATE_THETA:
        warnings.warn(
            f"Theta(xi*) = {float(spec.Theta(z)):.2e}: position update is degenerate",
            DegenerateRootWarning,
            stacklevel=2,
        )
    if report:
        return PositionReport(z, lo, hi, pe, k, res)
    return z


def solve_shock_positions(spec: NozzleSpec, pair: NormalShockPair, breaks):
    """All roots of R = P_e found by sign changes over the partition ``breaks``."""
    k = _kdot(pair)
    pe = criterion_Pe(spec, pair)
    b = np.asarray(sorted(set([0.0, spec.L, *map(float, breaks)])))
    b = b[(b >= 0) & (b <= spec.L)]
    vals = [criterion_R(z, spec, k) - pe for z in b]
    roots = []
    for i in range(len(b) - 1):
        if vals[i] == 0:
            roots.append(float(b[i]))
        elif vals[i] * vals[i + 1] < 0:
            roots.append(_root(spec, k, pe, b[i], b[i + 1])[0])
    if vals[-1] == 0:
        roots.append(float(b[-1]))
    return roots
