"""Independent reference implementations used only by the tests.

None of these import the package's numerical helpers, so agreement with the
package is a genuine cross-check.
"""

import itertools
import math

import numpy as np


def mu_quadratic(t):
    """Positive root of mu^2/2 + mu - 1/(2(t-1)) = 0 (the p = 1 case)."""
    return -1.0 + math.sqrt(1.0 + 1.0 / (t - 1.0))


def phi_from_mu(mu, t, p):
    return mu / ((2.0 - p) / (t - 1.0) - mu)


def mu_polynomial(t, p):
    """Root via numpy.roots when 2/p is an integer."""
    k = round(2.0 / p)
    assert abs(k - 2.0 / p) < 1e-12
    coeffs = np.zeros(k + 1)
    coeffs[0] = p / 2.0
    coeffs[k - 1] += 1.0
    coeffs[k] = -(2.0 - p) / (2.0 * (t - 1.0))
    roots = np.roots(coeffs)
    real = [r.real for r in roots if abs(r.imag) < 1e-9 and r.real > 0]
    assert len(real) == 1
    return real[0]


def rip_bruteforce(phi, d, s):
    """Block RIP by SVD of every column submatrix of s blocks of size d."""
    M = phi.shape[1] // d
    best = 0.0
    for combo in itertools.combinations(range(M), s):
        cols = [b * d + j for b in combo for j in range(d)]
        sv = np.linalg.svd(phi[:, cols], compute_uv=False)
        best = max(best, sv[0] ** 2 - 1.0, 1.0 - sv[-1] ** 2)
    return best


def rip_classical(phi, s):
    """Standard s-sparse RIP constant, written without any block notion."""
    N = phi.shape[1]
    lo, hi = 1.0, 1.0
    for cols in itertools.combinations(range(N), s):
        g = phi[:, cols].T @ phi[:, cols]
        w = np.linalg.eigvalsh(g)
        lo, hi = min(lo, w[0]), max(hi, w[-1])
    return max(hi - 1.0, 1.0 - lo)


def soft(c, tau):
    return np.sign(c) * np.maximum(np.abs(c) - tau, 0.0)


def lasso_fista(phi, y, lam, iters=20000, tol=1e-15):
    """FISTA for lam*||x||_1 + ||y - phi x||^2 / 2."""
    L = np.linalg.norm(phi, 2) ** 2
    x = np.zeros(phi.shape[1])
    z = x.copy()
    tk = 1.0
    for _ in range(iters):
        x_new = soft(z - phi.T @ (phi @ z - y) / L, lam / L)
        t_new = (1 + math.sqrt(1 + 4 * tk * tk)) / 2
        z = x_new + (tk - 1) / t_new * (x_new - x)
        if np.linalg.norm(x_new - x) <= tol * max(1.0, np.linalg.norm(x)):
            x = x_new
            break
        x, tk = x_new, t_new
    return x


def lasso_objective(phi, y, x, lam):
    r = y - phi @ x
    return lam * np.abs(x).sum() + 0.5 * r @ r


def prox_grid(c, tau, p, coarse=2001, fine=2001):
    """Minimum of tau*s^p + (c-s)^2/2 on [0, c] by a two-level grid.

    The fine grid spacing is 4c/((coarse-1)(fine-1)), i.e. about 1e-6 * c.
    Returns the best objective value (vectorized over c, tau, p).
    """
    c = np.asarray(c, float)[:, None]
    tau = np.asarray(tau, float)[:, None]
    p = np.asarray(p, float)[:, None]
    f = lambda s: tau * s ** p + 0.5 * (c - s) ** 2
    u = np.linspace(0.0, 1.0, coarse)[None, :]
    s = c * u
    vals = f(s)
    j = np.argmin(vals, axis=1)[:, None]
    h = c / (coarse - 1)
    centre = s[np.arange(len(s))[:, None], j]
    lo = np.maximum(centre - 2 * h, 0.0)
    hi = np.minimum(centre + 2 * h, c)
    s2 = lo + (hi - lo) * np.linspace(0.0, 1.0, fine)[None, :]
    best = np.minimum(f(s2).min(axis=1), vals.min(axis=1))
    return np.minimum(best, f(np.zeros_like(c))[:, 0])
