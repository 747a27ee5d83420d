"""Sparse convex decomposition of the block lp-polytope.

Every ``x`` in

    T(alpha, s, p) = {x : ||x||_{2,p}^p <= s alpha^p,  ||x||_{2,inf} <= alpha}

is a convex combination ``x = sum_i lambda_i u_i`` of block ``s``-sparse
vectors with

    sum_i lambda_i ||u_i||_2^2 <= alpha^p ||x||_{2,2-p}^(2-p).

:func:`decompose` builds such a combination by the constructive induction on
the block support size ``l``: a vector with ``l > s`` active blocks is split
into ``l - j + 1`` vectors with ``l - 1`` active blocks each, which are then
decomposed recursively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .block_model import BlockPartition, best_block_approx, validate_p

__all__ = ["ConvexDecomposition", "PolytopeMembershipError", "DecompositionStall", "decompose",
           "membership_alpha", "tail_decomposition"]

MEMBERSHIP_RTOL = 1e-9
WEIGHT_TOL = 1e-12
PRUNE_BELOW = 1e-14


class PolytopeMembershipError(ValueError):
    """``x`` is not in ``T(alpha, s, p)``."""


class DecompositionStall(ArithmeticError):
    """A splitting weight left ``[0, 1]`` beyond tolerance."""


@dataclass
class ConvexDecomposition:
    weights: np.ndarray
    vectors: np.ndarray  # shape (terms, N)
    part: BlockPartition
    s: int
    alpha: float
    p: float
    depth: int

    def __len__(self):
        return len(self.weights)

    def reconstruct(self) -> np.ndarray:
        return self.weights @ self.vectors

    def energy(self) -> float:
        """``sum_i lambda_i ||u_i||_2^2``."""
        return float(self.weights @ np.einsum("ij,ij->i", self.vectors, self.vectors))

    def energy_bound(self, x) -> float:
        """``alpha^p ||x||_{2,2-p}^(2-p)``."""
        c = kernels.block_norms(np.asarray(x, float), self.part.offsets)
        return float(self.alpha ** self.p * np.sum(c ** (2.0 - self.p)))


def membership_alpha(x, part: BlockPartition, s: int, p: float) -> float:
    """Smallest ``alpha`` with ``x`` in ``T(alpha, s, p)``."""
    c = kernels.block_norms(part.check(x), part.offsets)
    return float(max(c.max(), (np.sum(c ** p) / s) ** (1.0 / p)))


def _check_membership(c, s, alpha, p):
    sup = float(c.max()) if c.size else 0.0
    if sup > alpha * (1 + MEMBERSHIP_RTOL):
        raise PolytopeMembershipError(
            f"||x||_(2,inf) = {sup!r} exceeds alpha = {alpha!r} by {sup - alpha!r}"
        )
    total = float(np.sum(c ** p))
    cap = s * alpha ** p
    if total > cap * (1 + MEMBERSHIP_RTOL):
        raise PolytopeMembershipError(
            f"||x||_(2,p)^p = {total!r} exceeds s*alpha^p = {cap!r} by {total - cap!r}"
        )


def _split(x, part, s, alpha, p, weight, out, depth, stats):
    c = kernels.block_norms(x, part.offsets)
    active = np.flatnonzero(c > 0)
    l = active.size
    if l <= s:
        out.append((weight, x))
        stats["depth"] = max(stats["depth"], depth)
        return
    # c_1 >= ... >= c_l, equal norms in block order
    order = active[np.argsort(-c[active], kind="stable")]
    cs = c[order]
    # energies a_i c_i = c_i^p, index 0 holds alpha^p
    e = np.empty(l + 1)
    e[0] = alpha ** p
    e[1:] = cs ** p
    tails = np.cumsum(e[::-1])[::-1]  # tails[j] = sum_{i>=j} e_i
    j = 1
    for cand in range(l - 1, 0, -1):
        if tails[cand] <= (l - cand) * e[cand - 1]:
            j = cand
            break
    S = tails[j]
    scale = S / (l - j)
    # unit block directions E_i; blocks i >= j get norm scale / a_i = scale * c_i^(1-p)
    head = np.zeros_like(x)
    head_idx = part.indices(order[: j - 1])
    head[head_idx] = x[head_idx]
    for w in range(j, l + 1):
        xi = 1.0 - e[w] / scale
        if xi < -WEIGHT_TOL or xi > 1 + WEIGHT_TOL:
            raise DecompositionStall(f"splitting weight {xi!r} outside [0, 1] at depth {depth}")
        xi = min(max(xi, 0.0), 1.0)
        if weight * xi < PRUNE_BELOW:
            stats["pruned"] += weight * xi
            continue
        y = head.copy()
        for i in range(j, l + 1):
            if i == w:
                continue
            b = order[i - 1]
            lo, hi = part.offsets[b], part.offsets[b + 1]
            y[lo:hi] = x[lo:hi] * (scale * cs[i - 1] ** (-p))
        _split(y, part, s, alpha, p, weight * xi, out, depth + 1, stats)


def decompose(x, part: BlockPartition, s: int, alpha: float | None = None, p: float = 1.0) -> ConvexDecomposition:
    """Write ``x`` as a convex combination of block ``s``-sparse vectors.

    Parameters
    ----------
    x : ndarray
        Member of ``T(alpha, s, p)``.
    alpha : float, optional
        Polytope radius. Defaults to :func:`membership_alpha`, the smallest
        radius containing ``x``.

    Raises
    ------
    PolytopeMembershipError
        If ``x`` violates either defining inequality beyond a relative 1e-9.
    DecompositionStall
        If a splitting weight falls outside ``[0, 1]``.
    """
    x = part.check(x).copy()
    p = validate_p(p)
    if s < 1:
        raise ValueError("s must be >= 1")
    if alpha is None:
        alpha = membership_alpha(x, part, s, p) if np.any(x) else 1.0
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    c = kernels.block_norms(x, part.offsets)
    _check_membership(c, s, alpha, p)
    out = []
    stats = {"depth": 0, "pruned": 0.0}
    _split(x, part, s, float(alpha), p, 1.0, out, 0, stats)
    weights = np.array([w for w, _ in out])
    weights /= weights.sum()
    vectors = np.array([u for _, u in out]).reshape(len(out), part.N)
    return ConvexDecomposition(weights, vectors, part, s, float(alpha), p, stats["depth"])


def tail_decomposition(h, part: BlockPartition, s: int, t: float, p: float) -> ConvexDecomposition:
    """Decompose ``h_{-max(s)}`` into block ``(t-1)s``-sparse pieces.

    Uses the radius ``alpha / (t-1)^(1/p)`` with
    ``alpha^p = ||h_max(s)||_{2,p}^p / s``, valid whenever ``h`` satisfies
    the cone constraint. Requires ``(t-1)s`` to be a positive integer.
    """
    p = validate_p(p)
    k = (t - 1.0) * s
    kk = round(k)
    if kk < 1 or abs(k - kk) > 1e-9:
        raise ValueError(f"(t-1)s = {k} must be a positive integer")
    h_max, h_rest, _ = best_block_approx(h, part, s)
    c = kernels.block_norms(h_max, part.offsets)
    alpha = (np.sum(c ** p) / s) ** (1.0 / p)
    if alpha == 0:
        alpha = 1.0
    radius = alpha / (t - 1.0) ** (1.0 / p)
    return decompose(h_rest, part, int(kk), radius, p)


def term_count_bound(l: int, s: int) -> int:
    """Crude upper bound ``l! / s!`` on the number of terms for support size ``l``."""
    return math.factorial(l) // math.factorial(s) if l > s else 1
