"""First-order elliptic system on a rectangle with the axis term H2/eta.

    d_eta H1 + A d_xi H2 = L1
    d_eta H2 + H2/eta - B d_xi H1 = L2
    H1 = h1 on xi = xi0, H1 = h3 on xi = L, H2 = 0 on eta = 0, H2 = h4 on eta = 1

After x = xi/sqrt(AB), V1 = sqrt(B/A) H1, V2 = H2 the system reads
d_y V1 + d_x V2 = F1, d_y(y V2) - d_x(y V1) = y F2.

Staggered layout (cells i = 0..nx-1, j = 0..ny-1 on a uniform grid):
    H1 on x-faces (xi_i, eta_{j+1/2}), shape (nx+1, ny)
    H2 on y-faces (xi_{i+1/2}, eta_j), shape (nx, ny+1)
    L1 at interior corners (xi_i, eta_j), L2 at cell centres.
The solution is split as V = U + W with W = (-d_x Psi, d_y Psi) carrying all
boundary data and L2 (weighted Neumann problem, one-dimensional cokernel) and
U = (d_y phi / y, d_x phi / y) carrying L1 (Dirichlet problem, phi = y Phi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import dblquad, quad

from .errors import GridError, UnsolvableDataError

DEFECT_TOL = 1e-8


@dataclass(frozen=True)
class EllipticGrid:
    xi0: float
    L: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise GridError("elliptic grid needs at least 2 cells per direction")
        if not self.L > self.xi0:
            raise GridError("empty rectangle")

    @classmethod
    def from_nodes(cls, xi0, L, n_xi, n_eta) -> "EllipticGrid":
        return cls(float(xi0), float(L), int(n_xi) - 1, int(n_eta) - 1)

    @property
    def hxi(self):
        return (self.L - self.xi0) / self.nx

    @property
    def h(self):
        return 1.0 / self.ny

    @property
    def xi(self):
        return np.linspace(self.xi0, self.L, self.nx + 1)

    @property
    def xi_half(self):
        return self.xi0 + (np.arange(self.nx) + 0.5) * self.hxi

    @property
    def eta(self):
        return np.linspace(0.0, 1.0, self.ny + 1)

    @property
    def eta_half(self):
        return (np.arange(self.ny) + 0.5) * self.h




@dataclass
class EllipticProblem:
    A: float
    B: float
    xi0: float
    L: float
    rhs1: object = 0.0  # L1(xi, eta), or array at corners (nx+1, ny+1)
    rhs2: object = 0.0  # L2(xi, eta), or array at cell centres (nx, ny)
    bc_shock: object = 0.0  # h1(eta) or array at eta_half
    bc_exit: object = 0.0  # h3(eta)
    bc_wall: object = 0.0  # h4(xi) or array at xi_half

    def __post_init__(self):
        if not self.A * self.B > 0:
            raise GridError("the system is elliptic only for AB > 0")


@dataclass
class EllipticSolution:
    grid: EllipticGrid
    H1: np.ndarray
    H2: np.ndarray
    defect: float
    discrete_defect: float
    phi: np.ndarray
    psi: np.ndarray
    U: tuple
    W: tuple


def _sample2(f, X, Y):
    if callable(f):
        return np.asarray(f(X, Y), dtype=float) * np.ones_like(X)
    return np.broadcast_to(np.asarray(f, dtype=float), X.shape).astype(float)


def _sample1(f, x):
    if callable(f):
        return np.asarray(f(x), dtype=float) * np.ones_like(x)
    return np.broadcast_to(np.asarray(f, dtype=float), x.shape).astype(float)


def sample_data(problem: EllipticProblem, grid: EllipticGrid):
    """Data at the staggered locations: (L1 corners, L2 centres, h1, h3, h4)."""
    Xc, Yc = np.meshgrid(grid.xi, grid.eta, indexing="ij")
    Xm, Ym = np.meshgrid(grid.xi_half, grid.eta_half, indexing="ij")
    l1 = _sample2(problem.rhs1, Xc, Yc)
    l2 = _sample2(problem.rhs2, Xm, Ym)
    h1 = _sample1(problem.bc_shock, grid.eta_half)
    h3 = _sample1(problem.bc_exit, grid.eta_half)
    h4 = _sample1(problem.bc_wall, grid.xi_half)
    return l1, l2, h1, h3, h4


def _terms_discrete(problem, grid, data=None):
    _, l2, h1, h3, h4 = data if data is not None else sample_data(problem, grid)
    eh = grid.eta_half
    t2 = np.sum(eh[None, :] * l2) * grid.hxi * grid.h
    tb = problem.B * np.sum(eh * (h1 - h3)) * grid.h
    t4 = np.sum(h4) * grid.hxi
    scale = (
        np.sum(np.abs(eh[None, :] * l2)) * grid.hxi * grid.h
        + abs(problem.B) * np.sum(eh * (np.abs(h1) + np.abs(h3))) * grid.h
        + np.sum(np.abs(h4)) * grid.hxi
    )
    return t2 - tb - t4, scale


def _is_sampled(problem):
    return any(
        isinstance(v, np.ndarray) and v.ndim > 0
        for v in (problem.rhs2, problem.bc_shock, problem.bc_exit, problem.bc_wall)
    )


def _terms_quadrature(problem: EllipticProblem):
    tol = 1e-13
    a, b = problem.xi0, problem.L

    def f1(fn):
        return fn if callable(fn) else (lambda *_: float(fn))

    l2, h1, h3, h4 = f1(problem.rhs2), f1(problem.bc_shock), f1(problem.bc_exit), f1(problem.bc_wall)
    t2, _ = dblquad(lambda y, x: y * l2(x, y), a, b, 0.0, 1.0, epsabs=tol, epsrel=tol)
    s2, _ = dblquad(lambda y, x: abs(y * l2(x, y)), a, b, 0.0, 1.0, epsabs=tol, epsrel=tol)
    tb, _ = quad(lambda y: y * (h1(y) - h3(y)), 0.0, 1.0, epsabs=tol, epsrel=tol, limit=200)
    sb, _ = quad(lambda y: y * (abs(h1(y)) + abs(h3(y))), 0.0, 1.0, epsabs=tol, epsrel=tol, limit=200)
    t4, _ = quad(h4, a, b, epsabs=tol, epsrel=tol, limit=200)
    s4, _ = quad(lambda x: abs(h4(x)), a, b, epsabs=tol, epsrel=tol, limit=200)
    return t2 - problem.B * tb - t4, s2 + abs(problem.B) * sb + s4


def solvability_defect(problem: EllipticProblem, grid: EllipticGrid | None = None) -> float:
    """int eta L2 - B int eta (h1 - h3) - int h4.

    Callable data are integrated by adaptive quadrature. Sampled data (or an
    explicit grid) use the midpoint sums that the discrete system sees.
    """
    if grid is not None or _is_sampled(problem):
        if grid is None:
            raise GridError("sampled data need the grid they live on")
        return float(_terms_discrete(problem, grid)[0])
    return float(_terms_quadrature(problem)[0])


def _index(nx, ny):
    return np.arange(nx * ny).reshape(nx, ny)


@lru_cache(maxsize=16)
def _psi_factor(nx, ny, hx, hy):
    """Bordered weighted Neumann Laplacian for Psi (cell centred)."""
    idx = _index(nx, ny)
    y = np.arange(ny + 1) * hy
    yh = (np.arange(ny) + 0.5) * hy
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(np.broadcast_to(v, r.shape).ravel())

    # x-faces between cells i-1 and i, weight y_{j+1/2} * hy / hx
    wx = np.broadcast_to(yh[None, :] * hy / hx, (nx - 1, ny))
    a, b = idx[:-1], idx[1:]
    add(a, a, -wx)
    add(a, b, wx)
    add(b, b, -wx)
    add(b, a, wx)
    # y-faces between cells j-1 and j, weight y_j * hx / hy
    wy = np.broadcast_to(y[None, 1:-1] * hx / hy, (nx, ny - 1))
    a, b = idx[:, :-1], idx[:, 1:]
    add(a, a, -wy)
    add(a, b, wy)
    add(b, b, -wy)
    add(b, a, wy)
    n = nx * ny
    K = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
    e = np.ones((n, 1)) / math.sqrt(n)
    M = sp.bmat([[K, sp.csr_matrix(e)], [sp.csr_matrix(e.T), None]]).tocsc()
    return spla.splu(M), K


@lru_cache(maxsize=16)
def _phi_factor(nx, ny, hx, hy):
    """Dirichlet problem for phi at interior corners."""
    mx, my = nx - 1, ny - 1
    idx = _index(mx, my)
    y = np.arange(ny + 1) * hy
    yh = (np.arange(ny) + 0.5) * hy
    yj = y[1:-1][None, :] * np.ones((mx, 1))
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(np.broadcast_to(v, r.shape).ravel())

    # corner (i, j) with j = 1..ny-1 uses y-faces at y_{j-1/2}, y_{j+1/2}
    up = 1.0 / (hy * hy * yh[1:])  # to j+1
    dn = 1.0 / (hy * hy * yh[:-1])  # to j-1
    up = np.broadcast_to(up[None, :], (mx, my))
    dn = np.broadcast_to(dn[None, :], (mx, my))
    side = 1.0 / (hx * hx * yj)
    add(idx, idx, -(up + dn + 2 * side))
    add(idx[:, :-1], idx[:, 1:], up[:, :-1])
    add(idx[:, 1:], idx[:, :-1], dn[:, 1:])
    add(idx[:-1], idx[1:], side[:-1])
    add(idx[1:], idx[:-1], side[1:])
    n = mx * my
    K = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsc()
    return spla.splu(K)


def _psi_rhs(F2, v1_left, v1_right, v2_top, hx, hy):
    """Right-hand side of the Psi system (flux form times cell area)."""
    nx, ny = F2.shape
    yh = (np.arange(ny) + 0.5) * hy
    b = yh[None, :] * F2 * hx * hy
    # boundary fluxes moved to the right: div(-y V1, y V2) with known normals
    b[0, :] += -yh * v1_left * hy  # -(-y V1) at the left face
    b[-1, :] -= -yh * v1_right * hy
    b[:, -1] -= 1.0 * v2_top * hx
    return b


def assembled_cokernel_projection(problem: EllipticProblem, grid: EllipticGrid) -> float:
    """Sum of the assembled Psi right-hand side, in the units of the defect."""
    A, B = problem.A, problem.B
    s = math.sqrt(A * B)
    c = math.sqrt(B / A)
    _, l2, h1, h3, h4 = sample_data(problem, grid)
    b = _psi_rhs(l2, c * h1, c * h3, h4, grid.hxi / s, grid.h)
    return float(np.sum(b) * s)


def solve(problem: EllipticProblem, grid: EllipticGrid, tol=DEFECT_TOL, project=False) -> EllipticSolution:
    if abs(problem.xi0 - grid.xi0) > 1e-14 or abs(problem.L - grid.L) > 1e-14:
        raise GridError("grid does not match the problem rectangle")
    A, B = problem.A, problem.B
    s = math.sqrt(A * B)
    c = math.sqrt(B / A)
    nx, ny = grid.nx, grid.ny
    hx, hy = grid.hxi / s, grid.h
    data = sample_data(problem, grid)
    l1, l2, h1, h3, h4 = data

    disc, dscale = _terms_discrete(problem, grid, data)
    if _is_sampled(problem):
        defect, scale = disc, dscale
    else:
        defect, scale = _terms_quadrature(problem)
    if not project and abs(defect) > tol * max(scale, 1e-300) and abs(defect) > 1e-300:
        raise UnsolvableDataError(defect, tol * scale)

    # W part
    lu_psi, _ = _psi_factor(nx, ny, hx, hy)
    b = _psi_rhs(l2, c * h1, c * h3, h4, hx, hy)
    # remove the discrete defect as a constant shift of L2 so that b lies in
    # the range of the Neumann operator
    d = ((np.arange(ny) + 0.5) * hy)[None, :] * hx * hy * np.ones((nx, 1))
    b = b - np.sum(b) / np.sum(d) * d
    sol = lu_psi.solve(np.concatenate([b.ravel(), [0.0]]))
    psi = sol[:-1].reshape(nx, ny)
    W1 = np.empty((nx + 1, ny))
    W1[0], W1[-1] = c * h1, c * h3
    W1[1:-1] = -(psi[1:] - psi[:-1]) / hx
    W2 = np.zeros((nx, ny + 1))
    W2[:, -1] = h4
    W2[:, 1:-1] = (psi[:, 1:] - psi[:, :-1]) / hy

    # U part
    lu_phi = _phi_factor(nx, ny, hx, hy)
    F1 = c * l1[1:-1, 1:-1]
    phi = np.zeros((nx + 1, ny + 1))
    phi[1:-1, 1:-1] = lu_phi.solve(F1.ravel()).reshape(nx - 1, ny - 1)
    yh = (np.arange(ny) + 0.5) * hy
    y = np.arange(ny + 1) * hy
    U1 = (phi[:, 1:] - phi[:, :-1]) / (hy * yh[None, :])
    U2 = np.zeros((nx, ny + 1))
    U2[:, 1:] = (phi[1:, 1:] - phi[:-1, 1:]) / (hx * y[None, 1:])

    V1 = U1 + W1
    V2 = U2 + W2
    return EllipticSolution(
        grid, V1 / c, V2, float(defect), float(disc), phi, psi, (U1, U2), (W1, W2)
    )


def discrete_residuals(sol: EllipticSolution, problem: EllipticProblem):
    """Residuals of both equations in the original variables (sup norms).

    The second includes the constant shift that absorbs the discrete defect.
    """
    g = sol.grid
    A, B = problem.A, problem.B
    l1, l2, *_ = sample_data(problem, g)
    H1, H2 = sol.H1, sol.H2
    hxi, h = g.hxi, g.h
    r1 = (H1[1:-1, 1:] - H1[1:-1, :-1]) / h + A * (H2[1:, 1:-1] - H2[:-1, 1:-1]) / hxi - l1[1:-1, 1:-1]
    eta = g.eta
    eh = g.eta_half
    r2 = (
        (eta[None, 1:] * H2[:, 1:] - eta[None, :-1] * H2[:, :-1]) / (h * eh[None, :])
        - B * (H1[1:] - H1[:-1]) / hxi
        - l2
    )
    return float(np.max(np.abs(r1))), float(np.max(np.abs(r2)))


def transport_recover(dp_star, inflow_q, inflow_s, f3, background):
    """(dq, ds) from the conserved combination q dq + dp/rho + T ds.

    ``dp_star`` and ``f3`` have xi on the first axis with the front at index 0;
    ``inflow_q``/``inflow_s`` are the front profiles. ``background`` is the
    downstream FlowState with its gas: a (state, gas) pair.
    """
    state, gas = background
    rho, q, T = state.rho(gas), state.q, state.temperature(gas)
    dp = np.asarray(dp_star, dtype=float)
    f3 = np.asarray(f3, dtype=float) * np.ones_like(dp)
    ds = np.broadcast_to(np.asarray(inflow_s, dtype=float), dp.shape).copy()
    conserved = q * np.asarray(inflow_q) + dp[0] / rho + T * ds[0]
    dq = (conserved[None, ...] + f3 - f3[0][None, ...] - dp / rho - T * ds) / q
    return dq, ds
