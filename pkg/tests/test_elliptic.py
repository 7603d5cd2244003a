import numpy as np
import pytest

from axishock.elliptic import (
    EllipticGrid,
    EllipticProblem,
    assembled_cokernel_projection,
    discrete_residuals,
    solvability_defect,
    solve,
    transport_recover,
)
from axishock.errors import GridError, UnsolvableDataError

A, B, X0, L = 2.1, 20.0 / 63.0, 0.7, 1.0


def manufactured():
    """H1 = cos(pi X) y^2, H2 = sin(pi X) y^2 (1 - y), X = (x - x0)/(L - x0)."""
    ell = L - X0
    pi = np.pi
    X = lambda x: (x - X0) / ell  # noqa: E731
    H1 = lambda x, y: np.cos(pi * X(x)) * y**2  # noqa: E731
    H2 = lambda x, y: np.sin(pi * X(x)) * y**2 * (1 - y)  # noqa: E731
    L1 = lambda x, y: 2 * y * np.cos(pi * X(x)) + A * pi / ell * np.cos(pi * X(x)) * y**2 * (1 - y)  # noqa: E731
    L2 = lambda x, y: np.sin(pi * X(x)) * (3 * y - 4 * y**2) + B * pi / ell * np.sin(pi * X(x)) * y**2  # noqa: E731
    prob = EllipticProblem(A, B, X0, L, L1, L2, lambda y: y**2, lambda y: -(y**2), 0.0)
    return prob, H1, H2


def interior_l2_error(n):
    prob, H1, H2 = manufactured()
    g = EllipticGrid.from_nodes(X0, L, n, n)
    s = solve(prob, g)
    Xa, Ya = np.meshgrid(g.xi, g.eta_half, indexing="ij")
    Xb, Yb = np.meshgrid(g.xi_half, g.eta, indexing="ij")
    e1 = (s.H1 - H1(Xa, Ya))[1:-1]
    e2 = (s.H2 - H2(Xb, Yb))[:, 1:-1]
    return np.sqrt(np.mean(e1**2) + np.mean(e2**2)), s, prob


def test_manufactured_order():
    errs = [interior_l2_error(n)[0] for n in (33, 65, 129)]
    assert np.log2(errs[0] / errs[1]) >= 1.9
    assert np.log2(errs[1] / errs[2]) >= 1.9


def test_compatible_data_defect():
    prob, _, _ = manufactured()
    assert abs(solvability_defect(prob)) < 1e-10


def test_residuals_vanish_discretely():
    _, s, prob = interior_l2_error(33)
    r1, r2 = discrete_residuals(s, prob)
    assert r1 < 1e-9
    # the second equation carries the constant shift that absorbs the O(h^2) discrete defect
    assert r2 == pytest.approx(abs(2.0 * s.discrete_defect / (L - X0)), rel=1e-6)


@pytest.mark.parametrize("c", [0.3, -1.7])
def test_constant_wall_defect(c):
    prob = EllipticProblem(A, B, X0, L, 0.0, 0.0, 0.0, 0.0, c)
    assert solvability_defect(prob) == pytest.approx(-c * (L - X0), abs=1e-12)
    g = EllipticGrid.from_nodes(X0, L, 17, 17)
    assert solvability_defect(prob, g) == pytest.approx(-c * (L - X0), abs=1e-12)


def test_incompatible_data_refused_unless_projected():
    prob = EllipticProblem(A, B, X0, L, 0.0, 0.0, 0.0, 0.0, 0.3)
    g = EllipticGrid.from_nodes(X0, L, 17, 17)
    with pytest.raises(UnsolvableDataError):
        solve(prob, g)
    s = solve(prob, g, project=True)
    assert np.all(np.isfinite(s.H1))


def test_defect_equals_cokernel_projection(rng):
    g = EllipticGrid.from_nodes(X0, L, 17, 9)
    prob = EllipticProblem(
        A,
        B,
        X0,
        L,
        rng.normal(size=(17, 9)),
        rng.normal(size=(16, 8)),
        rng.normal(size=8),
        rng.normal(size=8),
        rng.normal(size=16),
    )
    d = solvability_defect(prob, g)
    assert assembled_cokernel_projection(prob, g) == pytest.approx(d, rel=1e-10, abs=1e-13)


def test_axis_and_wall_values():
    _, s, prob = interior_l2_error(33)
    np.testing.assert_array_equal(s.H2[:, 0], 0.0)
    np.testing.assert_allclose(s.H2[:, -1], 0.0, atol=1e-15)


def test_grid_and_type_errors():
    with pytest.raises(GridError):
        EllipticProblem(A, -B, X0, L)
    prob = EllipticProblem(A, B, X0, L)
    with pytest.raises(GridError):
        solve(prob, EllipticGrid.from_nodes(0.5, L, 9, 9))


def test_transport_recovery(pair):
    gas = pair.gas
    d = pair.downstream
    dp = np.linspace(0, 1, 12).reshape(4, 3) * 1e-3
    dq, ds = transport_recover(dp, np.array([1e-3, 2e-3, 0.0]), np.array([0.0, 1e-4, 0.0]), 0.0, (d, gas))
    cons = d.q * dq + dp / d.rho(gas) + d.temperature(gas) * ds
    np.testing.assert_allclose(cons, np.broadcast_to(cons[0], cons.shape), atol=1e-16)
    np.testing.assert_array_equal(ds, np.broadcast_to(ds[0], ds.shape))
