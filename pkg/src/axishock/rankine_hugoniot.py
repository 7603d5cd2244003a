"""Rankine-Hugoniot functionals in Lagrangian coordinates and their linearization.

State vectors are ordered (theta, p, q, s) throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AxisEvaluationError, SingularShockMatrixError
from .gas import FlowState, GasParameters, NormalShockPair, density_ps, enthalpy_ps


def _uvpr(theta, p, q, s, gas):
    theta = np.asarray(theta, dtype=float)
    q = np.asarray(q, dtype=float)
    return q * np.cos(theta), q * np.sin(theta), np.asarray(p, dtype=float), density_ps(p, s, gas)


def g_functionals_arrays(Up, Um, slope, ratio, gas: GasParameters):
    """G1..G4 for array-valued states.

    ``Up`` and ``Um`` are (theta, p, q, s) tuples of arrays, ``ratio`` is
    r/(2 eta) at the front points.
    """
    up, vp, pp, rp = _uvpr(*Up, gas)
    um, vm, pm, rm = _uvpr(*Um, gas)
    jp = pp - pm
    jv = vp - vm
    g1 = (1.0 / (rp * up) - 1.0 / (rm * um)) * jp + (vp / up - vm / um) * jv
    g2 = (up + pp / (rp * up) - um - pm / (rm * um)) * jp + (pp * vp / up - pm * vm / um) * jv
    g3 = 0.5 * (np.asarray(Up[2]) ** 2 - np.asarray(Um[2]) ** 2) + (
        enthalpy_ps(Up[1], Up[3], gas) - enthalpy_ps(Um[1], Um[3], gas)
    )
    g4 = jv - np.asarray(slope) * np.asarray(ratio) * jp
    return g1, g2, g3, g4


def g_functionals(U_plus: FlowState, U_minus: FlowState, psi_slope, eta, r, gas: GasParameters):
    """Residuals (G1, G2, G3, G4) of the shock conditions at one front point."""
    if eta == 0:
        if psi_slope != 0 and U_plus.p != U_minus.p:
            raise AxisEvaluationError("G4 at the axis needs psi'(0) = 0")
        ratio = 0.0
    else:
        ratio = r / (2.0 * eta)
    Up = (U_plus.theta, U_plus.p, U_plus.q, U_plus.s)
    Um = (U_minus.theta, U_minus.p, U_minus.q, U_minus.s)
    return tuple(float(g) for g in g_functionals_arrays(Up, Um, psi_slope, ratio, gas))


@dataclass(frozen=True)
class LinearizedRH:
    alpha_plus: np.ndarray  # (4, 4): row j is alpha_{j+}
    alpha_minus: np.ndarray
    A_s: np.ndarray
    det_A_s: float
    kdot: float
    jump_p: float


def _alphas(state: FlowState, jump_p: float, sign: float, gas: GasParameters) -> np.ndarray:
    g, cv = gas.gamma, gas.c_v
    r = state.rho(gas)
    q, p = state.q, state.p
    c2 = g * p / r
    pref = sign * jump_p / (r * q)
    return np.array(
        [
            pref * np.array([0.0, -1.0 / (r * c2), -1.0 / q, 1.0 / (g * cv)]),
            pref * np.array([0.0, 1.0 - p / (r * c2), r * q - p / q, p / (g * cv)]),
            sign * np.array([0.0, 1.0 / r, q, p / ((g - 1.0) * cv * r)]),
            sign * np.array([q, 0.0, 0.0, 0.0]),
        ]
    )


def det_A_s_closed_form(pair: NormalShockPair) -> float:
    gas = pair.gas
    d = pair.downstream
    rq = d.mass_flux(gas)
    return (
        pair.jump_p**2 * d.p / rq**3 * (1.0 - d.mach(gas) ** 2) / ((gas.gamma - 1.0) * gas.c_v)
    )


def kdot(pair: NormalShockPair) -> float:
    gas = pair.gas
    d = pair.downstream
    return pair.jump_p * ((gas.gamma - 1.0) / (gas.gamma * d.p) + 1.0 / (d.rho(gas) * d.q**2))


def linearized_coefficients(gas: GasParameters, pair: NormalShockPair) -> LinearizedRH:
    if abs(pair.downstream.mach(gas) - 1.0) < 1e-12:
        raise SingularShockMatrixError("sonic downstream state: shock matrix is singular")
    jp = pair.jump_p
    ap = _alphas(pair.downstream, jp, 1.0, gas)
    am = _alphas(pair.upstream, jp, -1.0, gas)
    A_s = ap[:3, 1:].copy()
    det = det_A_s_closed_form(pair)
    return LinearizedRH(ap, am, A_s, det, kdot(pair), jp)


def solve_front(lin: LinearizedRH, G):
    """(g1, g2, g3) = A_s^-1 (G1, G2, G3); G may carry trailing array axes."""
    G = np.asarray(G, dtype=float)
    shape = G.shape
    x = np.linalg.solve(lin.A_s, G.reshape(3, -1))
    return x.reshape(shape)


def linearized_jump(dp_minus, lin: LinearizedRH, pair: NormalShockPair, gas: GasParameters):
    """Front data (g1, g2, g3) = (dp+, dq+, ds+) for upstream pressure perturbation dp-.

    Upstream perturbations obey dq- = -dp- / (rho- q-) and ds- = 0.
    """
    dp = np.asarray(dp_minus, dtype=float)
    m = pair.upstream.mass_flux(gas)
    dU = np.stack([np.zeros_like(dp), dp, -dp / m, np.zeros_like(dp)])
    J = -np.tensordot(lin.alpha_minus[:3], dU, axes=(1, 0))
    return solve_front(lin, J)


def linearized_jump_closed_form(dp_minus, lin: LinearizedRH, pair: NormalShockPair, gas):
    """Closed forms of the jump map, valid for the normalized pair (rho q = 2).

    g2 follows from the Bernoulli row: q+ g2 + g1/rho+ + T+ g3 = 0.
    """
    dp = np.asarray(dp_minus, dtype=float)
    u, d = pair.upstream, pair.downstream
    rp, rm = d.rho(gas), u.rho(gas)
    mp2, mm2 = d.mach(gas) ** 2, u.mach(gas) ** 2
    k = lin.kdot
    base = (mm2 - 1.0) / (rm * u.q**2)
    g1 = rp * d.q**2 / (mp2 - 1.0) * base * (1.0 - k) * dp
    g3 = -(gas.gamma - 1.0) * gas.c_v / d.p * base * lin.jump_p * dp
    g2 = -(g1 / rp + d.temperature(gas) * g3) / d.q
    return g1, g2, g3


def slope_update(dtheta_plus, dtheta_minus, pair: NormalShockPair):
    return 2.0 * (pair.downstream.q * np.asarray(dtheta_plus) - pair.upstream.q * np.asarray(dtheta_minus)) / pair.jump_p
