"""Supersonic region: linearized and nonlinear marching in xi.

Layout: theta lives on integer eta nodes at integer xi levels, the pressure
perturbation on eta cell midpoints at half xi levels (plus the inflow level
xi = 0). The axis term enters through the weighted difference
(eta_{j+1} theta_{j+1} - eta_j theta_j) / (h eta_{j+1/2}), so no 1/0 is formed
and the discrete flux identity telescopes exactly.

The nonlinear system is written as L(dU) = N(U), where L is the operator
linearized at the background; N is evaluated from the previous Picard iterate.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .errors import DivergenceError, ExtrapolationError, GridError, NonconvergenceError
from .gas import NormalShockPair, density_ps, speed_from_bernoulli
from .lagrange import radius_squared_profile

log = logging.getLogger(__name__)

SIGMA_L = 0.05


def background_coefficients(pair: NormalShockPair):
    """(2 q-, B-, lambda) for the upstream state; B- = 2(M^2-1)/(rho^2 q^3)."""
    gas = pair.gas
    u = pair.upstream
    rho, q = u.rho(gas), u.q
    m2 = u.mach(gas) ** 2
    bm = 2.0 * (m2 - 1.0) / (rho**2 * q**3)
    lam = rho * q / (2.0 * math.sqrt(m2 - 1.0))
    return 2.0 * q, bm, lam


def _weighted_gd(n):
    """Matrix of theta -> G D theta on interior nodes (homogeneous ends), h = 1/n."""
    h = 1.0 / n
    eta = np.arange(n + 1) * h
    eh = (np.arange(n) + 0.5) * h
    # D: nodes 0..n -> cells; G: cells -> interior nodes 1..n-1
    D = np.zeros((n, n + 1))
    D[np.arange(n), np.arange(n)] = -eta[:-1] / (h * eh)
    D[np.arange(n), np.arange(1, n + 1)] = eta[1:] / (h * eh)
    G = np.zeros((n - 1, n))
    G[np.arange(n - 1), np.arange(n - 1)] = -1.0 / h
    G[np.arange(n - 1), np.arange(1, n)] = 1.0 / h
    return G @ D[:, 1:n]


def stable_step(pair: NormalShockPair, n_eta: int, cfl=1.0):
    """Largest stable xi step of the leapfrog scheme times ``cfl``."""
    _, _, lam = background_coefficients(pair)
    mu = np.max(np.abs(np.linalg.eigvals(_weighted_gd(n_eta))))
    return cfl * 2.0 / (lam * math.sqrt(mu))


@dataclass(frozen=True)
class SupersonicGrid:
    L: float
    n_eta: int  # cells in eta
    n_xi: int  # steps in xi

    @property
    def h(self):
        return 1.0 / self.n_eta

    @property
    def k(self):
        return self.L / self.n_xi

    @property
    def xi(self):
        return np.linspace(0.0, self.L, self.n_xi + 1)

    @property
    def xi_p(self):
        """Abscissae of the pressure levels: 0 then the half levels."""
        return np.concatenate([[0.0], (np.arange(self.n_xi) + 0.5) * self.k])

    @property
    def eta(self):
        return np.linspace(0.0, 1.0, self.n_eta + 1)

    @property
    def eta_half(self):
        return (np.arange(self.n_eta) + 0.5) * self.h


def supersonic_grid(pair: NormalShockPair, L, n_eta, cfl=0.9) -> SupersonicGrid:
    kmax = stable_step(pair, n_eta, cfl)
    return SupersonicGrid(float(L), int(n_eta), int(math.ceil(L / kmax)))


@dataclass
class SupersonicSolution:
    grid: SupersonicGrid
    pair: NormalShockPair
    theta: np.ndarray  # (n_xi+1, n_eta+1)
    dp: np.ndarray  # (n_xi+1, n_eta), levels grid.xi_p
    linear: bool
    sigma: float
    history: list = field(default_factory=list)
    _splines: tuple | None = field(default=None, repr=False)

    # fields derived from (theta, dp)
    def q_of(self, dp):
        gas = self.pair.gas
        u = self.pair.upstream
        if self.linear:
            return -np.asarray(dp) / u.mass_flux(gas)
        return speed_from_bernoulli(u.bernoulli(gas), u.p + np.asarray(dp), u.s, gas) - u.q

    def _build_splines(self):
        g = self.grid
        # extend p to eta = 0 and 1 by even / linear extrapolation so the spline
        # covers the whole interval
        p = self.dp
        p0 = (9.0 * p[:, :1] - p[:, 1:2]) / 8.0
        p1 = 1.5 * p[:, -1:] - 0.5 * p[:, -2:-1]
        pe = np.concatenate([p0, p, p1], axis=1)
        eta_p = np.concatenate([[0.0], g.eta_half, [1.0]])
        # p at xi = L by linear extrapolation from the last two half levels
        pL = 1.5 * pe[-1] - 0.5 * pe[-2]
        xi_p = np.concatenate([g.xi_p, [g.L]])
        pe = np.vstack([pe, pL])
        self._splines = (
            RectBivariateSpline(g.xi, g.eta, self.theta, kx=3, ky=3),
            RectBivariateSpline(xi_p, eta_p, pe, kx=3, ky=3),
        )
        return self._splines

    def perturbation_at(self, xi, eta, dxi=0):
        """(dtheta, dp, dq, ds) at scattered points."""
        ts, ps = self._splines or self._build_splines()
        xi = np.asarray(xi, dtype=float)
        eta = np.asarray(eta, dtype=float)
        tol = 1e-12 * self.grid.L
        if np.any(xi < -tol) or np.any(xi > self.grid.L + tol):
            raise ExtrapolationError("front lies outside the supersonic grid", stage="trace")
        th = ts(xi, eta, dx=dxi, grid=False)
        dp = ps(xi, eta, dx=dxi, grid=False)
        if dxi:
            gas = self.pair.gas
            u = self.pair.upstream
            if self.linear:
                dq = -dp / u.mass_flux(gas)
            else:
                p = u.p + ps(xi, eta, grid=False)
                q = speed_from_bernoulli(u.bernoulli(gas), p, u.s, gas)
                dq = -dp / (density_ps(p, u.s, gas) * q)
        else:
            dq = self.q_of(dp)
        return th, dp, dq, np.zeros_like(dp)

    def state_at(self, xi, eta):
        u = self.pair.upstream
        th, dp, dq, ds = self.perturbation_at(xi, eta)
        return th, u.p + dp, u.q + dq, u.s + ds

    def trace_on_front(self, psi, eta):
        """Upstream state (theta, p, q, s) along xi = psi(eta)."""
        return self.state_at(psi, eta)

    def collocated(self):
        """Perturbations on the (xi, eta) node grid."""
        g = self.grid
        p = self.dp
        pn = np.empty((g.n_xi + 1, g.n_eta))
        pn[0] = p[0]
        pn[1:-1] = 0.5 * (p[1:-1] + p[2:])
        pn[-1] = 1.5 * p[-1] - 0.5 * p[-2]
        full = np.empty((g.n_xi + 1, g.n_eta + 1))
        full[:, 1:-1] = 0.5 * (pn[:, 1:] + pn[:, :-1])
        full[:, 0] = (9.0 * pn[:, 0] - pn[:, 1]) / 8.0
        full[:, -1] = 1.5 * pn[:, -1] - 0.5 * pn[:, -2]
        return self.theta.copy(), full, self.q_of(full), np.zeros_like(full)

    def riemann_invariants(self):
        """(w+, w-) on the node grid for the linearized background."""
        gas = self.pair.gas
        u = self.pair.upstream
        th, dp, _, _ = self.collocated()
        a = 2.0 * math.sqrt(u.mach(gas) ** 2 - 1.0) / u.mass_flux(gas)
        return 2.0 * u.q * th + a * dp, 2.0 * u.q * th - a * dp


def _levels(p, grid):
    """dp at theta levels (xi_m, eta_{j+1/2}) and the xi-difference there."""
    k = grid.k
    pm = np.empty((grid.n_xi, grid.n_eta))
    pm[0] = p[0]
    pm[1:] = 0.5 * (p[1:-1] + p[2:])
    step = np.full(grid.n_xi, k)
    step[0] = 0.5 * k
    dpx = (p[1:] - p[:-1]) / step[:, None]
    return pm, dpx


def _nonlinear_sources(theta, p, grid: SupersonicGrid, pair: NormalShockPair):
    """N1 at (xi_{m+1/2}, eta_j), j = 1..n-1 and N2 at (xi_m, eta_{j+1/2})."""
    gas = pair.gas
    u = pair.upstream
    pb, sb = u.p, u.s
    Bb = u.bernoulli(gas)
    two_q, bm, _ = background_coefficients(pair)
    h, k = grid.h, grid.k
    eta = grid.eta
    eh = grid.eta_half
    xi_p = grid.xi_p

    # ---- N2 at theta levels m = 0..n_xi-1, half nodes
    th_c = 0.5 * (theta[:-1, 1:] + theta[:-1, :-1])
    pm, dpx = _levels(p, grid)
    dthx_n = np.empty_like(theta[:-1])
    dthx_n[0] = (theta[1] - theta[0]) / k
    dthx_n[1:] = (theta[2:] - theta[:-2]) / (2 * k)
    dthx = 0.5 * (dthx_n[:, 1:] + dthx_n[:, :-1])
    P = pb + pm
    q = speed_from_bernoulli(Bb, P, sb, gas)
    rho = density_ps(P, sb, gas)
    m2 = q * q * rho / (gas.gamma * P)
    _, r2h = radius_squared_profile(rho * q * np.cos(th_c), h)
    kap = 2.0 * eh / np.sqrt(r2h)
    rq = rho * q
    n2 = (
        th_c / eh
        + bm * dpx
        - (
            kap * np.cos(th_c) / rq * (m2 - 1.0) / (rq * q) * dpx
            - kap * np.sin(th_c) / rq * dthx
            + 2.0 * eh / r2h * np.sin(th_c) / rq
        )
    )

    # ---- N1 at half levels m+1/2, interior nodes
    th_h = 0.5 * (theta[1:] + theta[:-1])  # (n_xi, n+1)
    dth = (theta[1:] - theta[:-1]) / k
    ph = p[1:]  # (n_xi, n) at xi_{m+1/2}, half nodes
    dpn = np.empty_like(ph)
    dpn[:-1] = (p[2:] - p[:-2]) / (xi_p[2:] - xi_p[:-2])[:, None]
    dpn[-1] = (p[-1] - p[-2]) / (xi_p[-1] - xi_p[-2])
    Ph = pb + ph
    qh = speed_from_bernoulli(Bb, Ph, sb, gas)
    rhoh = density_ps(Ph, sb, gas)
    th_hc = 0.5 * (th_h[:, 1:] + th_h[:, :-1])
    r2n, _ = radius_squared_profile(rhoh * qh * np.cos(th_hc), h)
    # values at interior nodes j = 1..n-1
    Pn = 0.5 * (Ph[:, 1:] + Ph[:, :-1])
    qn = speed_from_bernoulli(Bb, Pn, sb, gas)
    rhon = density_ps(Pn, sb, gas)
    dpn_n = 0.5 * (dpn[:, 1:] + dpn[:, :-1])
    tj = th_h[:, 1:-1]
    kapn = 2.0 * eta[1:-1] / np.sqrt(r2n[:, 1:-1])
    n1 = two_q * dth[:, 1:-1] - (
        kapn * qn * np.cos(tj) * dth[:, 1:-1] - kapn * np.sin(tj) / (rhon * qn) * dpn_n
    )
    return n1, n2


def _march(grid: SupersonicGrid, pair: NormalShockPair, wall, n1=None, n2=None):
    two_q, bm, _ = background_coefficients(pair)
    n, h, k = grid.n_eta, grid.h, grid.k
    eta = grid.eta
    eh = grid.eta_half
    theta = np.zeros((grid.n_xi + 1, n + 1))
    p = np.zeros((grid.n_xi + 1, n))
    theta[:, -1] = wall
    for m in range(grid.n_xi):
        dk = 0.5 * k if m == 0 else k
        div = (eta[1:] * theta[m, 1:] - eta[:-1] * theta[m, :-1]) / (h * eh)
        if n2 is not None:
            div = div - n2[m]
        p[m + 1] = p[m] - dk / bm * div
        grad = (p[m + 1, 1:] - p[m + 1, :-1]) / h
        if n1 is not None:
            grad = grad - n1[m]
        theta[m + 1, 1:-1] = theta[m, 1:-1] - k / two_q * grad
    return theta, p


def _check_grid(grid: SupersonicGrid, pair: NormalShockPair):
    kmax = stable_step(pair, grid.n_eta)
    if grid.k > kmax * (1 + 1e-12):
        raise GridError(
            f"xi step {grid.k:.4g} violates the stability bound; use at most {kmax:.4g}",
            stage="supersonic",
            suggested_step=kmax,
        )


def solve_linearized_supersonic(spec, pair: NormalShockPair, grid: SupersonicGrid):
    """Linearized supersonic perturbation driven by the wall angle sigma*Theta."""
    _check_grid(grid, pair)
    wall = spec.sigma * np.asarray(spec.Theta(grid.xi), dtype=float)
    theta, p = _march(grid, pair, wall)
    return SupersonicSolution(grid, pair, theta, p, True, spec.sigma)


def solve_nonlinear_supersonic(
    spec, pair: NormalShockPair, grid: SupersonicGrid, tol=1e-13, max_iter=60, sigma_max=SIGMA_L
):
    """Nonlinear supersonic flow by Picard iteration on the lagged source."""
    if spec.sigma > sigma_max:
        raise GridError(
            f"sigma = {spec.sigma} exceeds the supersonic smallness threshold {sigma_max}",
            stage="supersonic",
        )
    _check_grid(grid, pair)
    wall = spec.sigma * np.asarray(spec.Theta(grid.xi), dtype=float)
    theta, p = _march(grid, pair, wall)
    history = []
    if spec.sigma == 0:
        return SupersonicSolution(grid, pair, theta, p, False, 0.0, history)
    prev_diff = None
    bad = 0
    for it in range(1, max_iter + 1):
        n1, n2 = _nonlinear_sources(theta, p, grid, pair)
        th_new, p_new = _march(grid, pair, wall, n1, n2)
        diff = max(np.max(np.abs(th_new - theta)), np.max(np.abs(p_new - p)))
        factor = diff / prev_diff if prev_diff else float("nan")
        history.append({"iteration": it, "diff": diff, "factor": factor})
        log.debug("supersonic picard %d diff %.3e factor %.3f", it, diff, factor)
        theta, p = th_new, p_new
        if diff < tol * max(1.0, spec.sigma):
            return SupersonicSolution(grid, pair, theta, p, False, spec.sigma, history)
        bad = bad + 1 if prev_diff and factor >= 1.0 else 0
        if bad >= 3:
            raise DivergenceError("supersonic Picard iteration diverges", "supersonic", history)
        prev_diff = diff
    raise NonconvergenceError("supersonic Picard iteration did not converge", "supersonic", history)


def nonlinear_residual(sol: SupersonicSolution):
    """Sup of the discrete nonlinear residuals, evaluated with sources from ``sol``."""
    n1, n2 = _nonlinear_sources(sol.theta, sol.dp, sol.grid, sol.pair)
    th, p = _march(sol.grid, sol.pair, sol.theta[:, -1], n1, n2)
    return max(np.max(np.abs(th - sol.theta)), np.max(np.abs(p - sol.dp)))
