"""Independent reference computations used by several test modules."""

import numpy as np


def newton_normal_shock(rho1, q1, p1, gamma, tol=1e-15, max_iter=200):
    """Downstream (rho, q, p) from a damped Newton solve of the three jump equations.

    The unknowns are scaled by the upstream state; the initial guess is the
    strong-shock limit so the iteration does not fall back onto the trivial root.
    """
    m = rho1 * q1
    mom = p1 + rho1 * q1 * q1
    H = 0.5 * q1 * q1 + gamma / (gamma - 1.0) * p1 / rho1

    def F(x):
        r, q, p = x * np.array([rho1, q1, p1])
        return np.array(
            [
                (r * q - m) / m,
                (p + r * q * q - mom) / mom,
                (0.5 * q * q + gamma / (gamma - 1.0) * p / r - H) / H,
            ]
        )

    g = gamma
    x = np.array([(g + 1) / (g - 1), (g - 1) / (g + 1), 1.0 + 2 * g / (g + 1) * (q1 * q1 * rho1 / (g * p1) - 1)])
    for _ in range(max_iter):
        f = F(x)
        if np.max(np.abs(f)) < tol:
            break
        J = np.empty((3, 3))
        for k in range(3):
            d = np.zeros(3)
            d[k] = 1e-7 * max(1.0, abs(x[k]))
            J[:, k] = (F(x + d) - F(x - d)) / (2 * d[k])
        step = np.linalg.solve(J, -f)
        lam = 1.0
        while lam > 1e-6:
            xn = x + lam * step
            if np.all(xn > 0) and np.max(np.abs(F(xn))) < np.max(np.abs(f)):
                break
            lam *= 0.5
        x = x + lam * step
    return x * np.array([rho1, q1, p1])


def loglog_slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
