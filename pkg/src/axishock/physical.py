"""Map a converged solution back to the physical (z, r) plane.

The Lagrangian abscissa coincides with z, so each physical column is a
column xi = z. Along a column the radius follows from the axial mass flux
through r dr = 2 eta d(eta) / (rho u); the cell-wise constant flux used in the
solver gives the closed form r^2 = r_j^2 + 2 (eta^2 - eta_j^2) / m_j, which is
inverted exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import DegenerateMapError
from .gas import density_ps
from .lagrange import radius_squared_profile

JACOBIAN_MIN = 1e-10


@dataclass
class PhysicalFields:
    z: np.ndarray  # (nz,)
    eta: np.ndarray  # (ny,) cell midpoints in eta
    eta_nodes: np.ndarray  # (ny+1,)
    r: np.ndarray  # (nz, ny) radius of the samples
    r_nodes: np.ndarray  # (nz, ny+1)
    theta: np.ndarray
    p: np.ndarray
    q: np.ndarray
    s: np.ndarray
    rho: np.ndarray
    mach: np.ndarray
    subsonic: np.ndarray  # bool mask
    mass_flux: np.ndarray  # rho u at the samples, constant per eta cell in each column
    front: dict  # eta, psi, psi_prime, z, r at the eta nodes
    wall_target: np.ndarray  # 1 + int_0^z tan(sigma Theta)

    @property
    def wall_radius(self):
        return self.r_nodes[:, -1]

    def eta_of(self, k, r):
        """eta at radius r on column k (exact inverse of the column map)."""
        r2n = self.r_nodes[k] ** 2
        r2 = np.asarray(r, dtype=float) ** 2
        j = np.clip(np.searchsorted(r2n, r2, side="right") - 1, 0, len(self.eta))
        j = np.minimum(j, len(self.eta) - 1)
        return np.sqrt(self.eta_nodes[j] ** 2 + 0.5 * self.mass_flux[k, j] * (r2 - r2n[j]))

    def eta_roundtrip_error(self):
        err = 0.0
        for k in range(len(self.z)):
            err = max(err, float(np.max(np.abs(self.eta_of(k, self.r[k]) - self.eta))))
        return err

    def axial_mass_flux(self):
        """int_0^{r_wall} r rho u dr per column by the trapezoid rule on the samples."""
        out = np.empty(len(self.z))
        for k in range(len(self.z)):
            m = self.mass_flux[k]
            rr = np.concatenate([[0.0], self.r[k], [self.r_nodes[k, -1]]])
            m_ends = np.concatenate([[1.5 * m[0] - 0.5 * m[1]], m, [1.5 * m[-1] - 0.5 * m[-2]]])
            out[k] = np.trapezoid(rr * m_ends, rr)
        return out

    def wall_deviation(self):
        return float(np.max(np.abs(self.wall_radius - self.wall_target)))

    def rows(self, subsonic: bool):
        """Columns z, r, xi, eta, theta, p, q, s, rho, Mach for one region."""
        mask = self.subsonic == subsonic
        Z = np.broadcast_to(self.z[:, None], mask.shape)
        E = np.broadcast_to(self.eta[None, :], mask.shape)
        cols = [Z, self.r, Z, E, self.theta, self.p, self.q, self.s, self.rho, self.mach]
        return np.column_stack([c[mask] for c in cols])


def _subsonic_on_reference(sol):
    """Subsonic fields at (reference xi nodes, eta midpoints)."""
    st = sol.state
    d = sol.pair.downstream
    th = st.dtheta
    front = 1.5 * th[0] - 0.5 * th[1]
    exit_ = 1.5 * th[-1] - 0.5 * th[-2]
    thn = np.vstack([front, 0.5 * (th[1:] + th[:-1]), exit_])
    th_h = 0.5 * (thn[:, 1:] + thn[:, :-1])
    return th_h, d.p + st.dp, d.q + st.dq, d.s + st.ds


def map_to_physical(sol, n_z=None) -> PhysicalFields:
    spec = sol.spec
    gas = sol.pair.gas
    L = spec.L
    g = sol.grid
    ny = g.ny
    h = 1.0 / ny
    eta_h = g.eta_half
    eta_n = g.eta
    n_z = n_z or (g.nx + 1)
    z = np.linspace(0.0, L, n_z)

    psi_n = sol.front.psi_values
    psi_h = psi_n[1:] - 0.5 * h * sol.state.dpsi
    th_r, p_r, q_r, s_r = _subsonic_on_reference(sol)

    Z = np.broadcast_to(z[:, None], (n_z, ny))
    E = np.broadcast_to(eta_h[None, :], (n_z, ny))
    sub = Z >= psi_h[None, :]
    th, p, q, s = (np.empty((n_z, ny)) for _ in range(4))
    if np.any(~sub):
        vals = sol.U_minus.state_at(Z[~sub], E[~sub])
        for arr, v in zip((th, p, q, s), vals):
            arr[~sub] = v
    # transformed abscissa for subsonic samples
    xt = L + (L - sol.anchor) * (Z - L) / (L - psi_h[None, :])
    for j in range(ny):
        m = sub[:, j]
        if np.any(m):
            for arr, ref in zip((th, p, q, s), (th_r, p_r, q_r, s_r)):
                arr[m, j] = np.interp(xt[m, j], g.xi, ref[:, j])

    rho = density_ps(p, s, gas)
    mach = q / np.sqrt(gas.gamma * p / rho)
    mflux = rho * q * np.cos(th)
    if np.any(mflux <= JACOBIAN_MIN):
        raise DegenerateMapError("axial mass flux too small to invert the Lagrange map", stage="physical")
    r2n, r2h = radius_squared_profile(mflux, h)

    # front curve: radius from the upstream flux along the front
    up = sol.U_minus.state_at(psi_h, eta_h)
    m_up = density_ps(up[1], up[3], gas) * up[2] * np.cos(up[0])
    r2f, _ = radius_squared_profile(m_up, h)
    front = {
        "eta": eta_n,
        "psi": psi_n,
        "psi_prime": sol.front.slope,
        "z": psi_n,
        "r": np.sqrt(r2f),
    }
    tan_wall = np.tan(spec.sigma * np.asarray(spec.Theta(z), dtype=float))
    wall = 1.0 + cumulative_trapezoid(tan_wall, z, initial=0.0)
    return PhysicalFields(
        z, eta_h, eta_n, np.sqrt(r2h), np.sqrt(r2n), th, p, q, s, rho, mach, sub, mflux, front, wall
    )
