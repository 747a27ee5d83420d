r"""Proximal operators of the (nonconvex) mixed l2/lp penalty.

The scalar engine solves

.. math::
   \operatorname{prox}(c) = \arg\min_{s \ge 0} \; \tau s^p + \tfrac12 (c - s)^2,

which for ``p < 1`` is a hard-threshold rule: the output is zero up to the
breakeven level ``c*`` where the interior stationary point ties with zero,

    s_t = (2 tau (1 - p))^(1/(2-p)),     c* = s_t + tau p s_t^(p-1),

and above it the largest root of ``s - c + tau p s^(p-1) = 0``. Because the
block penalty depends on ``v[i]`` only through ``||v[i]||_2``, the block prox
rescales each block by ``prox(||a[i]||)/||a[i]||``.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .block_model import BlockPartition, validate_p

__all__ = [
    "prox_scalar",
    "prox_block",
    "prox_vector",
    "prox_threshold",
    "scalar_objective",
]


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    return tau


def prox_threshold(tau: float, p: float) -> tuple[float, float]:
    """``(s_t, c*)``: smallest nonzero output and the input level where it starts."""
    return kernels.threshold_point(_check_tau(tau), validate_p(p))


def scalar_objective(s, c, tau, p):
    """``tau * s**p + (c - s)**2 / 2`` (vectorized)."""
    s = np.asarray(s, dtype=float)
    return tau * np.power(s, p) + 0.5 * (c - s) ** 2


def prox_scalar(c, tau: float, p: float, method: str = "auto"):
    """Global minimizer of ``tau*s^p + (c - s)^2/2`` over ``s >= 0``.

    Parameters
    ----------
    c : float or array_like
        Nonnegative input(s).
    tau : float
        Penalty weight, ``> 0``.
    p : float
        Exponent in ``(0, 1]``.
    method : {"auto", "newton"}
        ``"auto"`` uses the closed forms at ``p = 1/2`` and ``p = 2/3``;
        ``"newton"`` forces the safeguarded Newton iteration everywhere.
    """
    tau = _check_tau(tau)
    p = validate_p(p)
    if method not in ("auto", "newton"):
        raise ValueError(f"unknown method {method!r}")
    arr = np.asarray(c, dtype=float)
    if np.any(arr < 0):
        raise ValueError("prox_scalar expects c >= 0")
    out = kernels.prox_scalar_array(np.atleast_1d(arr), tau, p, method)
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def prox_block(a, tau: float, p: float) -> np.ndarray:
    """Global minimizer of ``tau*||v||_2^p + ||a - v||_2^2/2`` over ``v``."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    tau = _check_tau(tau)
    p = validate_p(p)
    return kernels.block_prox(a, np.array([0, a.size], dtype=np.int64), tau, p)


def prox_vector(a, part: BlockPartition, tau: float, p: float, mode: str = "block-exact"):
    """Apply the penalty prox to every block of ``a``.

    ``mode="block-exact"`` solves the mixed l2/lp prox exactly.
    ``mode="elementwise-surrogate"`` replaces each block's l2 norm by the
    coordinatewise lp penalty, i.e. treats every coordinate as its own block.
    """
    a = part.check(a)
    if mode == "block-exact":
        offsets = part.offsets
    elif mode == "elementwise-surrogate":
        offsets = np.arange(part.N + 1, dtype=np.int64)
    else:
        raise ValueError(f"unknown prox mode {mode!r}")
    return kernels.block_prox(a, offsets, _check_tau(tau), validate_p(p))
