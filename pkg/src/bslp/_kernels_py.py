"""Vectorized numpy implementations of the hot kernels.

These are the reference fallback for :mod:`bslp._ckernels`. Both must agree to
rounding; ``tests/test_kernels.py`` holds them to 1e-12.
"""

import numpy as np

NEWTON_MAX_ITERS = 100
NEWTON_RTOL = 1e-14
TWO_THIRDS = 2.0 / 3.0


def block_norms(x, offsets):
    x = np.asarray(x, dtype=np.float64)
    offsets = np.asarray(offsets, dtype=np.int64)
    sizes = np.diff(offsets)
    starts = offsets[:-1]
    ax = np.abs(x)
    if x.size == 0:
        return np.zeros(sizes.size)
    scale = np.maximum.reduceat(ax, starts)
    safe = np.where(scale > 0, scale, 1.0)
    r = ax / np.repeat(safe, sizes)
    return scale * np.sqrt(np.add.reduceat(r * r, starts))


def threshold_point(tau, p):
    """Smallest nonzero prox output and the input level where it switches on."""
    if p == 1.0:
        return 0.0, tau
    s_t = (2.0 * tau * (1.0 - p)) ** (1.0 / (2.0 - p))
    return s_t, s_t + tau * p * s_t ** (p - 1.0)


def _half_closed(c, tau):
    arg = -(3.0 ** 1.5 / 4.0) * tau * c ** -1.5
    arg = np.clip(arg, -1.0, 1.0)
    return (2.0 * c / 3.0) * (1.0 + np.cos(TWO_THIRDS * np.arccos(arg)))


def _two_thirds_closed(c, tau):
    k = 2.0 * tau / 3.0
    c2 = c * c
    q = np.maximum(c2 * c2 / 256.0 - k ** 3 / 27.0, 0.0)
    sq = np.sqrt(q)
    big = c2 / 16.0 + sq
    # c2/16 - sq without cancellation
    small = (k ** 3 / 27.0) / big
    m = np.cbrt(big) + np.cbrt(small)
    r2m = np.sqrt(2.0 * m)
    r = 0.5 * (r2m + np.sqrt(np.maximum(2.0 * c / r2m - 2.0 * m, 0.0)))
    return r * r * r


def _newton(c, tau, p, lo):
    """Largest root of s - c + tau*p*s^(p-1) on [lo, c], Newton from s = c."""
    s = c.copy()
    hi = c.copy()
    lo = lo.copy()
    active = np.ones(c.shape, dtype=bool)
    a = tau * p
    b = tau * p * (1.0 - p)
    for _ in range(NEWTON_MAX_ITERS):
        if not active.any():
            break
        sa = s[active]
        ca = c[active]
        f = sa - ca + a * sa ** (p - 1.0)
        done = np.abs(f) <= NEWTON_RTOL * ca
        pos = f > 0
        hia = np.where(pos, sa, hi[active])
        loa = np.where(pos, lo[active], sa)
        fp = 1.0 - b * sa ** (p - 2.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = f / fp
        new = sa - step
        bad = ~np.isfinite(new) | (new < loa) | (new > hia) | (fp <= 0)
        new = np.where(bad, 0.5 * (loa + hia), new)
        done |= new == sa
        idx = np.flatnonzero(active)
        s[idx] = np.where(done, sa, new)
        hi[idx] = hia
        lo[idx] = loa
        active[idx[done]] = False
    return s


def prox_scalar_array(c, tau, p, method="auto"):
    """Elementwise ``argmin_{s>=0} tau*s^p + (s - c)^2 / 2`` for ``c >= 0``.

    ``method`` is ``"auto"`` (closed forms for p in {1/2, 2/3}, Newton
    otherwise) or ``"newton"`` (always Newton).
    """
    c = np.asarray(c, dtype=np.float64)
    out = np.zeros_like(c)
    if p == 1.0:
        np.maximum(c - tau, 0.0, out=out)
        return out
    s_t, c_star = threshold_point(tau, p)
    on = c > c_star
    if not on.any():
        return out
    con = c[on]
    if method == "auto" and p == 0.5:
        val = _half_closed(con, tau)
    elif method == "auto" and p == TWO_THIRDS:
        val = _two_thirds_closed(con, tau)
    else:
        val = _newton(con, tau, p, np.full(con.shape, s_t))
    out[on] = val
    return out


def block_prox(a, offsets, tau, p):
    """Blockwise ``argmin_v tau*sum_i ||v[i]||^p + ||v - a||^2 / 2``."""
    a = np.asarray(a, dtype=np.float64)
    offsets = np.asarray(offsets, dtype=np.int64)
    sizes = np.diff(offsets)
    c = block_norms(a, offsets)
    s = prox_scalar_array(c, tau, p)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(s > 0, s / np.where(c > 0, c, 1.0), 0.0)
    return a * np.repeat(ratio, sizes)
