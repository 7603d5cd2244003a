"""Free-boundary iteration for the transonic shock.

The subsonic region {psi(eta) < xi < L} is mapped onto the fixed rectangle
(anchor, L) x (0, 1). Unknowns on that rectangle use the staggered layout of
``elliptic``: dtheta at (xi_{i+1/2}, eta_j), (dp, dq, ds) at (xi_i, eta_{j+1/2})
with the front at i = 0. The slope perturbation dpsi' lives at eta_{j+1/2}.

Each application of the map Pi
  1. places the front anchor by zeroing the discrete solvability defect,
  2. solves the elliptic system for (dtheta*, dp*) with the nonlinear terms
     as sources,
  3. recovers (dq*, ds*) by transport,
  4. updates the front slope.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import elliptic
from .admissibility import NozzleSpec, solve_shock_position
from .errors import (
    AxishockError,
    ConsistencyError,
    DegenerateDerivativeError,
    DivergenceError,
    HypothesisError,
    NonconvergenceError,
    PositionUpdateError,
)
from .gas import NormalShockPair, bernoulli_pqs, density_ps
from .lagrange import ShockFront, radius_squared_profile
from .rankine_hugoniot import (
    LinearizedRH,
    g_functionals_arrays,
    linearized_coefficients,
    linearized_jump,
    slope_update,
    solve_front,
)
from .supersonic import (
    SupersonicSolution,
    solve_linearized_supersonic,
    solve_nonlinear_supersonic,
    supersonic_grid,
)

log = logging.getLogger(__name__)

SIGMA_0 = 0.02
THETA_THRESHOLD = 1e-8
NORM_ALPHA = 0.75
# successive differences below this (normalized units) are rounding noise
ROUNDING_FLOOR = 1e4 * np.finfo(float).eps


@dataclass(frozen=True)
class GridSpec:
    """Node counts: n_xi along the subsonic rectangle, n_eta in eta (both regions)."""

    n_xi: int = 129
    n_eta: int = 129
    cfl: float = 0.9


@dataclass
class IterationState:
    dtheta: np.ndarray  # (nx, ny+1)
    dp: np.ndarray  # (nx+1, ny)
    dq: np.ndarray
    ds: np.ndarray
    dpsi: np.ndarray  # (ny,)
    dxi_star: float = 0.0
    iteration_index: int = 0
    history: list = field(default_factory=list)

    def fields(self):
        return (self.dtheta, self.dp, self.dq, self.ds)


@dataclass
class InitialApproximation:
    xi_star_dot: float  # root of R = P_e
    anchor: float  # root of the discrete solvability defect
    state: IterationState
    U_minus: SupersonicSolution
    defect: float
    g_front: np.ndarray  # (3, ny)


@dataclass
class ShockSolution:
    front: ShockFront
    U_minus: SupersonicSolution
    state: IterationState
    xi_star_dot: float
    anchor: float
    grid: elliptic.EllipticGrid
    pair: NormalShockPair
    spec: NozzleSpec
    residuals: dict
    history: list
    C_s: float
    initial: InitialApproximation | None = None

    def U_plus(self):
        """Full downstream state (theta, p, q, s) at its staggered locations."""
        d = self.pair.downstream
        s = self.state
        return s.dtheta, d.p + s.dp, d.q + s.dq, d.s + s.ds


# ----------------------------------------------------------------- norms

def state_difference_norms(a: IterationState, b: IterationState, grid: elliptic.EllipticGrid):
    """Sup, L2 and composite norms of (dU, dpsi') differences."""
    diffs = [x - y for x, y in zip(a.fields(), b.fields())]
    dpsi = a.dpsi - b.dpsi
    sup = max(float(np.max(np.abs(d))) for d in diffs) + float(np.max(np.abs(dpsi)))
    l2 = math.sqrt(sum(float(np.mean(d * d)) for d in diffs)) + math.sqrt(float(np.mean(dpsi**2)))
    comp = sup
    # first differences scaled by distance to the wall corners to the power alpha
    for d, (xs, ys) in zip(
        diffs,
        [(grid.xi_half, grid.eta)] + [(grid.xi, grid.eta_half)] * 3,
    ):
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        dist = np.minimum(np.hypot(X - grid.xi0, Y - 1.0), np.hypot(X - grid.L, Y - 1.0))
        gx = np.abs(np.diff(d, axis=0)) / grid.hxi * (0.5 * (dist[1:] + dist[:-1])) ** NORM_ALPHA
        gy = np.abs(np.diff(d, axis=1)) / grid.h * (0.5 * (dist[:, 1:] + dist[:, :-1])) ** NORM_ALPHA
        comp += max(float(np.max(gx)), float(np.max(gy)))
    return {"sup": sup, "l2": l2, "composite": comp}


def state_norm(s: IterationState, grid):
    zero = IterationState(*(np.zeros_like(f) for f in s.fields()), np.zeros_like(s.dpsi))
    return state_difference_norms(s, zero, grid)


def check_axis(dtheta, dpsi, tol=1e-14):
    """dtheta = 0 on the axis row; dpsi' extends evenly so its axis value is zero."""
    if np.max(np.abs(dtheta[:, 0])) > tol:
        raise ConsistencyError("axis condition dtheta(xi, 0) = 0 violated", stage="iterate")
    if not np.all(np.isfinite(dpsi)):
        raise ConsistencyError("non-finite front slope", stage="iterate")


# ----------------------------------------------------------------- solver


class FreeBoundarySolver:
    """Holds the background, the upstream solutions and the reference grid."""

    def __init__(
        self,
        spec: NozzleSpec,
        pair: NormalShockPair,
        grids: GridSpec = GridSpec(),
        defect_tol=elliptic.DEFECT_TOL,
        sigma_max=SIGMA_0,
        supersonic_tol=1e-14,
        xi_star=None,
    ):
        if not pair.normalized:
            raise HypothesisError("the free-boundary solver works with the normalized pair (rho q = 2)")
        self.spec = spec
        self.pair = pair
        self.gas = pair.gas
        self.grids = grids
        self.lin: LinearizedRH = linearized_coefficients(pair.gas, pair)
        self.defect_tol = defect_tol
        self.sigma_max = sigma_max
        self.supersonic_tol = supersonic_tol
        self.xi_star = xi_star
        d = pair.downstream
        gas = pair.gas
        self.rho_b, self.q_b, self.p_b, self.s_b = d.rho(gas), d.q, d.p, d.s
        self.T_b = d.temperature(gas)
        # rounding residual of the shock relations at the background; removed so
        # that the background is an exact fixed point in floating point
        u = pair.upstream
        self.G_bar = np.array(
            g_functionals_arrays((0.0, d.p, d.q, d.s), (0.0, u.p, u.q, u.s), 0.0, 0.5, gas)
        )[:, None]
        self.B_b = d.bernoulli(gas)
        m2 = d.mach(gas) ** 2
        self.A = 2.0 * self.q_b
        self.B = 2.0 * (1.0 - m2) / (self.rho_b**2 * self.q_b**3)
        self.ny = grids.n_eta - 1
        self.nx = grids.n_xi - 1
        self.h = 1.0 / self.ny
        self.eta = np.linspace(0.0, 1.0, self.ny + 1)
        self.eta_half = (np.arange(self.ny) + 0.5) * self.h
        self.sgrid = supersonic_grid(pair, spec.L, self.ny, grids.cfl)
        self._lin_minus = None
        self._nl_minus = None

    # upstream solutions -------------------------------------------------
    @property
    def U_minus_linear(self) -> SupersonicSolution:
        if self._lin_minus is None:
            self._lin_minus = solve_linearized_supersonic(self.spec, self.pair, self.sgrid)
        return self._lin_minus

    @property
    def U_minus(self) -> SupersonicSolution:
        if self._nl_minus is None:
            self._nl_minus = solve_nonlinear_supersonic(
                self.spec, self.pair, self.sgrid, tol=self.supersonic_tol, sigma_max=0.05
            )
        return self._nl_minus

    def egrid(self, anchor) -> elliptic.EllipticGrid:
        return elliptic.EllipticGrid(float(anchor), float(self.spec.L), self.nx, self.ny)

    # initial approximation ------------------------------------------------
    def _linear_defect(self, xi):
        """Discrete solvability defect of the linearized problem with front at xi."""
        sig = self.spec.sigma
        g = self.egrid(xi)
        eh = self.eta_half
        _, dp, _, _ = self.U_minus_linear.perturbation_at(np.full(self.ny, xi), eh)
        g1 = linearized_jump(dp, self.lin, self.pair, self.gas)[0]
        h3 = sig * np.asarray(self.spec.Pe(eh), dtype=float)
        h4 = sig * np.asarray(self.spec.Theta(g.xi_half), dtype=float)
        return -self.B * np.sum(eh * (g1 - h3)) * self.h - np.sum(h4) * g.hxi

    def initial_approximation(self) -> InitialApproximation:
        spec = self.spec
        xs = self.xi_star if self.xi_star is not None else solve_shock_position(spec, self.pair)
        if abs(float(spec.Theta(xs))) < THETA_THRESHOLD:
            raise DegenerateDerivativeError(
                f"Theta(xi*) = {float(spec.Theta(xs)):.2e} is below threshold", stage="initial"
            )
        anchor = xs
        if spec.sigma > 0:
            f = self._linear_defect
            d = 0.02 * min(xs, spec.L - xs)
            a, b = xs - d, xs + d
            fa, fb = f(a), f(b)
            while fa * fb > 0 and d < 0.5 * min(xs, spec.L - xs):
                d *= 2
                a, b = xs - d, xs + d
                fa, fb = f(a), f(b)
            if fa * fb > 0:
                raise ConsistencyError(
                    "discrete solvability defect has no root near the admissibility root",
                    stage="initial",
                )
            anchor = brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        g = self.egrid(anchor)
        eh = self.eta_half
        sig = spec.sigma
        th_m, dp_m, _, _ = self.U_minus_linear.perturbation_at(np.full(self.ny, anchor), eh)
        gf = np.asarray(linearized_jump(dp_m, self.lin, self.pair, self.gas))
        prob = elliptic.EllipticProblem(
            self.A,
            self.B,
            anchor,
            spec.L,
            0.0,
            np.zeros((self.nx, self.ny)),
            gf[0],
            sig * np.asarray(spec.Pe(eh), dtype=float),
            sig * np.asarray(spec.Theta(g.xi_half), dtype=float),
        )
        scale = elliptic._terms_discrete(prob, g)[1]
        defect = elliptic.solvability_defect(prob, g)
        if abs(defect) > self.defect_tol * max(scale, 1e-300):
            raise ConsistencyError(f"initial defect {defect:.3e} after the position solve", stage="initial")
        sol = elliptic.solve(prob, g, tol=self.defect_tol)
        dq, ds = elliptic.transport_recover(
            sol.H1, gf[1], gf[2], 0.0, (self.pair.downstream, self.gas)
        )
        th_f = self._front_theta(sol.H2)
        dpsi = slope_update(th_f, th_m, self.pair)
        state = IterationState(sol.H2, sol.H1, dq, ds, dpsi, 0.0, 0, [])
        return InitialApproximation(xs, anchor, state, self.U_minus_linear, defect, gf)

    def linear_solution(self, ia: InitialApproximation) -> ShockSolution:
        """The initial approximation packaged like a converged solution."""
        st = ia.state
        psi_n, _, slope_n = self.front_geometry(st.dpsi, 0.0, ia.anchor)
        front = ShockFront(ia.anchor, self.eta, slope_n, psi_n)
        sig = self.spec.sigma
        C_s = abs(psi_n[-1] - ia.anchor) / sig if sig > 0 else 0.0
        return ShockSolution(
            front, ia.U_minus, st, ia.xi_star_dot, ia.anchor, self.egrid(ia.anchor), self.pair,
            self.spec, {"defect": ia.defect}, [], C_s, ia,
        )

    # helpers ---------------------------------------------------------------
    @staticmethod
    def _edge_theta(dtheta, at_front=True):
        """theta extrapolated to xi = anchor (or L), at eta nodes."""
        if at_front:
            return 1.5 * dtheta[0] - 0.5 * dtheta[1]
        return 1.5 * dtheta[-1] - 0.5 * dtheta[-2]

    def _front_theta(self, dtheta):
        t = self._edge_theta(dtheta)
        return 0.5 * (t[1:] + t[:-1])

    def front_geometry(self, dpsi, dxi, anchor):
        """psi at eta nodes and half nodes, slope at nodes."""
        h = self.h
        tail = np.concatenate([np.cumsum((dpsi * h)[::-1])[::-1], [0.0]])
        psi_n = anchor + dxi - tail
        psi_h = psi_n[1:] - 0.5 * h * dpsi
        slope_n = np.empty(self.ny + 1)
        slope_n[0] = 0.0
        slope_n[1:-1] = 0.5 * (dpsi[1:] + dpsi[:-1])
        slope_n[-1] = 1.5 * dpsi[-1] - 0.5 * dpsi[-2]
        return psi_n, psi_h, slope_n

    def _pre(self, state: IterationState, anchor):
        """delta-xi-independent parts of the sources."""
        gas = self.gas
        g = self.egrid(anchor)
        hx, h = g.hxi, self.h
        th = state.dtheta
        th_front = self._edge_theta(th, True)
        th_exit = self._edge_theta(th, False)
        thn = np.vstack([th_front, 0.5 * (th[1:] + th[:-1]), th_exit])  # (nx+1, ny+1) at corners
        th_pp = 0.5 * (thn[:, 1:] + thn[:, :-1])  # at p points
        P = self.p_b + state.dp
        Q = self.q_b + state.dq
        S = self.s_b + state.ds
        rho = density_ps(P, S, gas)
        mflux = rho * Q * np.cos(th_pp)
        r2n_col, r2h_col = radius_squared_profile(mflux, h)
        # centres
        m_c = 0.5 * (mflux[1:] + mflux[:-1])
        _, r2h_c = radius_squared_profile(m_c, h)
        pre = dict(g=g, th=th, thn=thn, th_pp=th_pp, P=P, Q=Q, S=S, rho=rho)
        pre["r2h_front"] = r2h_col[0]
        pre["r_exit"] = np.sqrt(r2h_col[-1])

        # ---- corners (interior)
        Pc = 0.5 * (P[1:-1, 1:] + P[1:-1, :-1])
        Qc = 0.5 * (Q[1:-1, 1:] + Q[1:-1, :-1])
        Sc = 0.5 * (S[1:-1, 1:] + S[1:-1, :-1])
        rhoc = density_ps(Pc, Sc, gas)
        thc = thn[1:-1, 1:-1]
        dthx_c = (th[1:, 1:-1] - th[:-1, 1:-1]) / hx
        dpx_w = np.gradient(state.dp, hx, axis=0, edge_order=2)
        dpx_c = 0.5 * (dpx_w[1:-1, 1:] + dpx_w[1:-1, :-1])
        kap_c = 2.0 * self.eta[1:-1][None, :] / np.sqrt(r2n_col[1:-1, 1:-1])
        pre["c"] = dict(
            xi=g.xi[1:-1][:, None],
            eta=self.eta[1:-1],
            lin=self.A * dthx_c,
            a=kap_c * (Qc * np.cos(thc) * dthx_c - np.sin(thc) / (rhoc * Qc) * dpx_c),
            dpx=dpx_c,
        )

        # ---- centres
        thm = 0.5 * (th[:, 1:] + th[:, :-1])
        Pm = 0.5 * (P[1:] + P[:-1])
        Qm = 0.5 * (Q[1:] + Q[:-1])
        Sm = 0.5 * (S[1:] + S[:-1])
        rhom = density_ps(Pm, Sm, gas)
        m2 = Qm * Qm * rhom / (gas.gamma * Pm)
        dpx_m = (state.dp[1:] - state.dp[:-1]) / hx
        dthx_w = np.gradient(th, hx, axis=0, edge_order=2)
        dthx_m = 0.5 * (dthx_w[:, 1:] + dthx_w[:, :-1])
        eh = self.eta_half[None, :]
        kap_m = 2.0 * eh / np.sqrt(r2h_c)
        rq = rhom * Qm
        pre["m"] = dict(
            xi=g.xi_half[:, None],
            eta=self.eta_half,
            lin=-self.B * dpx_m + thm / eh,
            a=kap_m * (np.cos(thm) / rq * (m2 - 1.0) / (rq * Qm) * dpx_m - np.sin(thm) / rq * dthx_m),
            b=2.0 * eh / r2h_c * np.sin(thm) / rq,
            dthx=dthx_m,
        )
        # f3 at p points (deviation form)
        pre["f3"] = (
            self.q_b * state.dq + state.dp / self.rho_b + self.T_b * state.ds
        ) - (bernoulli_pqs(P, Q, S, gas) - self.B_b)
        return pre

    def _transform_factors(self, psi, slope, xit, anchor):
        L = self.spec.L
        gap = L - psi
        if np.any(gap <= 0) or np.any(psi <= 0):
            raise PositionUpdateError("front leaves the nozzle", stage="position")
        J = (L - anchor) / gap
        zeta = (xit - L) * slope / gap
        return J, zeta

    def sources(self, state: IterationState, dxi, anchor, pre=None):
        """(f1 at interior corners, f2 at centres, f3 at p points)."""
        pre = pre or self._pre(state, anchor)
        psi_n, psi_h, slope_n = self.front_geometry(state.dpsi, dxi, anchor)
        c, m = pre["c"], pre["m"]
        Jc, zc = self._transform_factors(psi_n[1:-1], slope_n[1:-1], c["xi"], anchor)
        f1 = c["lin"] - (zc * c["dpx"] + Jc * c["a"])
        Jm, zm = self._transform_factors(psi_h, state.dpsi, m["xi"], anchor)
        f2 = m["lin"] - (zm * m["dthx"] + Jm * m["a"] + m["b"])
        f1_full = np.zeros((self.nx + 1, self.ny + 1))
        f1_full[1:-1, 1:-1] = f1
        return f1_full, f2, pre["f3"]

    def boundary_terms(self, state: IterationState, dxi, anchor, pre=None, upstream=None):
        """G*_1..G*_4 profiles at eta_{j+1/2}, plus the front pieces used later."""
        pre = pre or self._pre(state, anchor)
        up = upstream or self.U_minus
        psi_n, psi_h, _ = self.front_geometry(state.dpsi, dxi, anchor)
        Um = up.trace_on_front(psi_h, self.eta_half)
        th_f = self._front_theta(state.dtheta)
        dU = np.stack([th_f, state.dp[0], state.dq[0], state.ds[0]])
        Up = (th_f, self.p_b + state.dp[0], self.q_b + state.dq[0], self.s_b + state.ds[0])
        ratio = np.sqrt(pre["r2h_front"]) / (2.0 * self.eta_half)
        G = np.asarray(g_functionals_arrays(Up, Um, state.dpsi, ratio, self.gas))
        lin = np.einsum("jk,kn->jn", self.lin.alpha_plus, dU)
        Gs = lin - (G - self.G_bar)
        Gs[3] = lin[3] - 0.5 * self.lin.jump_p * state.dpsi - (G[3] - self.G_bar[3])
        return Gs, G

    def theta_star(self, xit, dxi, anchor):
        """Wall data Theta(T^-1(xi~, 1)) for the front anchor anchor + dxi."""
        L = self.spec.L
        xs = anchor + dxi
        return np.asarray(self.spec.Theta(L + (L - xs) * (np.asarray(xit) - L) / (L - anchor)), dtype=float)

    def position_function(self, state, dxi, anchor, pre=None):
        """I = -(discrete solvability defect) for the front anchor anchor + dxi."""
        pre = pre or self._pre(state, anchor)
        prob, _ = self._problem(state, dxi, anchor, pre)
        return -elliptic.solvability_defect(prob, pre["g"]), prob

    def _problem(self, state, dxi, anchor, pre):
        sig = self.spec.sigma
        g = pre["g"]
        f1, f2, _ = self.sources(state, dxi, anchor, pre)
        Gs, _ = self.boundary_terms(state, dxi, anchor, pre)
        gst = solve_front(self.lin, Gs[:3])
        h3 = sig * np.asarray(self.spec.Pe(pre["r_exit"]), dtype=float)
        h4 = sig * self.theta_star(g.xi_half, dxi, anchor)
        prob = elliptic.EllipticProblem(self.A, self.B, anchor, self.spec.L, f1, f2, gst[0], h3, h4)
        return prob, (Gs, gst)

    def solve_position_update(self, state: IterationState, anchor, pre=None):
        """Safeguarded secant for I(dxi) = 0."""
        spec = self.spec
        xs = anchor
        if abs(float(spec.Theta(xs))) < THETA_THRESHOLD:
            raise DegenerateDerivativeError("Theta vanishes at the reference front", stage="position")
        if spec.sigma == 0.0:
            # no wall data: I vanishes identically and the reference front is kept
            return 0.0
        pre = pre or self._pre(state, anchor)
        lo, hi = -0.4 * xs, 0.4 * (spec.L - xs)
        I = lambda d: self.position_function(state, d, anchor, pre)[0]  # noqa: E731
        scale = elliptic._terms_discrete(self._problem(state, 0.0, anchor, pre)[0], pre["g"])[1]
        target = 1e-10 * max(spec.sigma, 1e-300) * max(scale, 1.0)
        target = min(target, 1e-3 * self.defect_tol * max(scale, 1e-300))
        # secant steps until the update stalls at rounding level, so that the
        # returned shift carries no solver noise into the contraction monitor
        d0 = float(np.clip(state.dxi_star, lo, hi))
        f0 = I(d0)
        if f0 == 0.0:
            return d0
        slope = -spec.sigma * self.lin.kdot * float(spec.Theta(xs))
        d1 = float(np.clip(d0 - f0 / slope, lo, hi))
        f1 = I(d1)
        for _ in range(40):
            if f1 == 0.0 or f1 == f0:
                break
            d2 = d1 - f1 * (d1 - d0) / (f1 - f0)
            if not lo <= d2 <= hi:
                break
            stalled = abs(d2 - d1) <= 4 * np.finfo(float).eps * max(abs(d2), 1e-3 * spec.L)
            d0, f0, d1, f1 = d1, f1, d2, I(d2)
            if stalled:
                break
        if abs(f1) <= target:
            return d1
        # fall back to a bracketed solve
        flo, fhi = I(lo), I(hi)
        if flo * fhi > 0:
            raise PositionUpdateError(
                f"no root of the position function in [{lo:.4g}, {hi:.4g}]", stage="position"
            )
        return brentq(I, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)

    def iterate_once(self, state: IterationState, anchor) -> IterationState:
        try:
            pre = self._pre(state, anchor)
            dxi = self.solve_position_update(state, anchor, pre)
            prob, (Gs, gst) = self._problem(state, dxi, anchor, pre)
            sol = elliptic.solve(prob, pre["g"], tol=self.defect_tol)
            dq, ds = elliptic.transport_recover(
                sol.H1, gst[1], gst[2], pre["f3"], (self.pair.downstream, self.gas)
            )
            th_f = self._front_theta(sol.H2)
            dpsi = 2.0 * (self.q_b * th_f - Gs[3]) / self.lin.jump_p
            check_axis(sol.H2, dpsi)
        except AxishockError as exc:
            if exc.stage is None:
                exc.stage = "iterate"
            raise
        return IterationState(sol.H2, sol.H1, dq, ds, dpsi, dxi, state.iteration_index + 1, state.history)

    # reporting -------------------------------------------------------------
    def residual_report(self, state: IterationState, anchor):
        pre = self._pre(state, anchor)
        dxi = state.dxi_star
        prob, (Gs, gst) = self._problem(state, dxi, anchor, pre)
        _, G = self.boundary_terms(state, dxi, anchor, pre)
        f1, f2, f3 = self.sources(state, dxi, anchor, pre)
        g = pre["g"]
        hx, h = g.hxi, self.h
        th, dp = state.dtheta, state.dp
        r1 = (dp[1:-1, 1:] - dp[1:-1, :-1]) / h + self.A * (th[1:, 1:-1] - th[:-1, 1:-1]) / hx - f1[1:-1, 1:-1]
        eta, eh = self.eta, self.eta_half
        r2 = (
            (eta[None, 1:] * th[:, 1:] - eta[None, :-1] * th[:, :-1]) / (h * eh[None, :])
            - self.B * (dp[1:] - dp[:-1]) / hx
            - f2
        )
        bern = bernoulli_pqs(pre["P"], pre["Q"], pre["S"], self.gas)
        from .supersonic import nonlinear_residual

        return {
            "G": [float(np.max(np.abs(x))) for x in G],
            "G_sup": float(np.max(np.abs(G))),
            "subsonic_pde": [float(np.max(np.abs(r1))), float(np.max(np.abs(r2)))],
            "supersonic_pde": float(nonlinear_residual(self.U_minus)),
            "bernoulli_transport": float(np.max(np.abs(bern - bern[0][None, :]))),
            "entropy_transport": float(np.max(np.abs(state.ds - state.ds[0][None, :]))),
            "wall": float(np.max(np.abs(th[:, -1] - prob.bc_wall))),
            "exit": float(np.max(np.abs(dp[-1] - prob.bc_exit))),
            "front_pressure": float(np.max(np.abs(dp[0] - gst[0]))),
            "axis": float(np.max(np.abs(th[:, 0]))),
            "defect": float(elliptic.solvability_defect(prob, g)),
        }

    def run_fixed_point(self, tol=None, max_iter=50, initial=None, raise_on_failure=True) -> ShockSolution:
        spec = self.spec
        if spec.sigma > self.sigma_max:
            raise HypothesisError(
                f"sigma = {spec.sigma} exceeds the smallness threshold {self.sigma_max}", stage="setup"
            )
        sig = spec.sigma
        if tol is None:
            tol = max(1e-10, 1e-4 * sig * sig)
        t0 = time.perf_counter()
        ia = initial or self.initial_approximation()
        anchor = ia.anchor
        state = ia.state
        g = self.egrid(anchor)
        history = []
        prev = None
        bad = 0
        floor_hits = 0
        rounding_stop = False
        best = state
        converged = False
        radius = 0.5 * sig**1.5
        for k in range(1, max_iter + 1):
            new = self.iterate_once(state, anchor)
            norms = state_difference_norms(new, state, g)
            ball = state_difference_norms(new, ia.state, g)["sup"]
            fac = {n: (norms[n] / prev[n] if prev and prev[n] > 0 else float("nan")) for n in norms}
            rec = {
                "iteration": k,
                "diff_sup": norms["sup"],
                "diff_l2": norms["l2"],
                "diff_composite": norms["composite"],
                "factor_sup": fac["sup"],
                "factor_l2": fac["l2"],
                "factor_composite": fac["composite"],
                "dxi_star": new.dxi_star,
                "ball_distance": ball,
                "ball_radius": radius,
                "elapsed": time.perf_counter() - t0,
            }
            history.append(rec)
            log.info(
                "iteration %d: |diff| = %.3e factor %.3f dxi* = %.6e",
                k, norms["sup"], fac["sup"], new.dxi_star,
            )
            state = new
            best = new
            if norms["sup"] < tol:
                converged = True
                break
            if norms["sup"] < ROUNDING_FLOOR:
                floor_hits += 1
                if floor_hits >= 2:
                    log.warning("differences at rounding level %.1e above tol %.1e; stopping", norms["sup"], tol)
                    converged = rounding_stop = True
                    break
                continue
            bad = bad + 1 if prev and fac["sup"] > 1.0 else 0
            if bad >= 3:
                err = DivergenceError("free-boundary iteration diverges", "fixed_point", history, best)
                raise err
            prev = norms
        state.history = history
        if not converged and raise_on_failure:
            raise NonconvergenceError(
                f"no convergence in {max_iter} iterations", "fixed_point", history, best
            )
        psi_n, _, slope_n = self.front_geometry(state.dpsi, state.dxi_star, anchor)
        front = ShockFront(anchor + state.dxi_star, self.eta, slope_n, psi_n)
        res = self.residual_report(state, anchor)
        res["converged"] = converged
        res["rounding_stop"] = rounding_stop
        res["iterations"] = len(history)
        res["elapsed"] = time.perf_counter() - t0
        C_s = abs(front.psi_values[-1] - anchor) / sig if sig > 0 else 0.0
        return ShockSolution(
            front, self.U_minus, state, ia.xi_star_dot, anchor, g, self.pair, spec, res, history, C_s, ia
        )


# ----------------------------------------------------------------- wrappers

def initial_approximation(spec, pair, grids: GridSpec = GridSpec()):
    return FreeBoundarySolver(spec, pair, grids).initial_approximation()


def run_fixed_point(spec, pair, grids: GridSpec = GridSpec(), tol=None, max_iter=50, **kw):
    return FreeBoundarySolver(spec, pair, grids, **kw).run_fixed_point(tol=tol, max_iter=max_iter)
