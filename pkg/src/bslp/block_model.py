"""Block partitions, mixed l2/lp norms and best block-s-term approximation.

A vector ``x`` of length ``N`` is split into ``M`` contiguous blocks of sizes
``d_1, ..., d_M``. The mixed norm is

    ||x||_{2,p} = (sum_i ||x[i]||_2^p)^(1/p),   0 < p <= 1,

which for ``p = 1`` is the usual l2/l1 (group lasso) norm. Both the norm and
its p-th power are exposed, since the recovery program penalizes the latter.

Also provided are the two inequality oracles used by the recovery analysis:
the cone constraint satisfied by the error of any objective-dominating
estimate, and the Cai-Zhang sequence inequality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels

__all__ = [
    "BlockPartition",
    "BlockSupport",
    "validate_p",
    "block_norms",
    "mixed_norm",
    "mixed_norm_p",
    "block_sup_norm",
    "block_support_size",
    "best_block_approx",
    "cone_constraint_holds",
    "cai_zhang_bound",
]


def validate_p(p: float) -> float:
    p = float(p)
    if not (0.0 < p <= 1.0):
        raise ValueError(f"exponent p must lie in (0, 1], got {p}")
    return p


@dataclass(frozen=True)
class BlockPartition:
    """Contiguous partition of ``{0, ..., N-1}`` into blocks.

    Parameters
    ----------
    block_sizes : sequence of int
        Positive block lengths ``d_1, ..., d_M``.
    """

    block_sizes: tuple[int, ...]
    offsets: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        sizes = tuple(int(d) for d in self.block_sizes)
        if len(sizes) == 0:
            raise ValueError("a partition needs at least one block")
        if any(d < 1 for d in sizes):
            raise ValueError(f"block sizes must be positive, got {sizes}")
        object.__setattr__(self, "block_sizes", sizes)
        offsets = np.zeros(len(sizes) + 1, dtype=np.int64)
        np.cumsum(sizes, out=offsets[1:])
        offsets.setflags(write=False)
        object.__setattr__(self, "offsets", offsets)

    @classmethod
    def uniform(cls, d: int, M: int) -> "BlockPartition":
        if d < 1 or M < 1:
            raise ValueError(f"need d >= 1 and M >= 1, got d={d}, M={M}")
        return cls((int(d),) * int(M))

    @classmethod
    def from_length(cls, N: int, d: int) -> "BlockPartition":
        """Uniform partition of length ``N`` into blocks of size ``d``."""
        if d < 1 or N % d:
            raise ValueError(f"N={N} is not divisible by block size d={d}")
        return cls.uniform(d, N // d)

    @property
    def M(self) -> int:
        return len(self.block_sizes)

    @property
    def N(self) -> int:
        return int(self.offsets[-1])

    @property
    def is_uniform(self) -> bool:
        return len(set(self.block_sizes)) == 1

    def block(self, x: np.ndarray, i: int) -> np.ndarray:
        """View of block ``i`` (0-based) of ``x``."""
        return x[self.offsets[i] : self.offsets[i + 1]]

    def indices(self, blocks) -> np.ndarray:
        """Coordinate indices covered by the given block indices, in order."""
        blocks = list(blocks)
        if not blocks:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(
            [np.arange(self.offsets[i], self.offsets[i + 1]) for i in blocks]
        )

    def block_ids(self) -> np.ndarray:
        """Block index of every coordinate."""
        return np.repeat(np.arange(self.M), self.block_sizes)

    def check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.shape[0] != self.N:
            raise ValueError(
                f"vector of shape {x.shape} does not match partition with N={self.N}"
            )
        return x


@dataclass(frozen=True)
class BlockSupport:
    """Sorted set of (0-based) block indices."""

    indices: tuple[int, ...]
    M: int

    def __post_init__(self) -> None:
        idx = tuple(sorted(int(i) for i in self.indices))
        if len(set(idx)) != len(idx):
            raise ValueError(f"duplicate block indices in {self.indices}")
        if idx and (idx[0] < 0 or idx[-1] >= self.M):
            raise ValueError(f"block indices {idx} out of range for M={self.M}")
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, i) -> bool:
        return i in self.indices

    def complement(self) -> "BlockSupport":
        present = set(self.indices)
        return BlockSupport(tuple(i for i in range(self.M) if i not in present), self.M)


def block_norms(x, part: BlockPartition) -> np.ndarray:
    """l2 norm of every block, computed with per-block rescaling."""
    x = part.check(x)
    return kernels.block_norms(x, part.offsets)


def mixed_norm_p(x, part: BlockPartition, p: float) -> float:
    """``||x||_{2,p}^p = sum_i ||x[i]||_2^p``."""
    p = validate_p(p)
    c = block_norms(x, part)
    if p == 1.0:
        return float(c.sum())
    nz = c > 0
    return float(np.sum(c[nz] ** p))


def mixed_norm(x, part: BlockPartition, p: float) -> float:
    """Mixed l2/lp norm ``(sum_i ||x[i]||_2^p)^(1/p)``."""
    p = validate_p(p)
    val = mixed_norm_p(x, part, p)
    return val if p == 1.0 else float(val ** (1.0 / p))


def block_sup_norm(x, part: BlockPartition) -> float:
    """``||x||_{2,inf}``: the largest block l2 norm."""
    c = block_norms(x, part)
    return float(c.max())


def block_support_size(x, part: BlockPartition, tol: float = 0.0) -> int:
    """``||x||_{2,0}``: number of blocks with l2 norm above ``tol``."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return int(np.count_nonzero(block_norms(x, part) > tol))


def best_block_approx(x, part: BlockPartition, s: int):
    """Split ``x`` into its ``s`` largest blocks and the remainder.

    Ties in block norm are broken toward the lower block index.

    Returns
    -------
    x_max, x_rest : ndarray
        ``x_max + x_rest == x`` exactly, with disjoint block supports.
    support : BlockSupport
        The ``s`` retained blocks.
    """
    x = part.check(x)
    if not (0 <= s <= part.M):
        raise ValueError(f"s must lie in [0, M={part.M}], got {s}")
    c = kernels.block_norms(x, part.offsets)
    # stable sort on -c keeps the lowest index first among equal norms
    order = np.argsort(-c, kind="stable")
    support = BlockSupport(tuple(int(i) for i in order[:s]), part.M)
    mask = np.zeros(part.M, dtype=bool)
    mask[list(support.indices)] = True
    coord_mask = np.repeat(mask, part.block_sizes)
    x_max = np.where(coord_mask, x, 0.0)
    x_rest = np.where(coord_mask, 0.0, x)
    return x_max, x_rest, support


def cone_constraint_holds(h, part: BlockPartition, s: int, p: float) -> bool:
    """Check ``||h_{-max(s)}||_{2,p}^p <= ||h_{max(s)}||_{2,p}^p``.

    This holds for ``h = x_hat - x_max(s)`` whenever
    ``||x_hat||_{2,p}^p <= ||x_max(s)||_{2,p}^p``.
    """
    p = validate_p(p)
    if not (1 <= s <= part.M):
        raise ValueError(f"s must lie in [1, M={part.M}], got {s}")
    c = block_norms(h, part)
    c_sorted = np.sort(c)[::-1]
    head = c_sorted[:s]
    tail = c_sorted[s:]
    # compare on normalized values so the verdict is scale invariant
    scale = c_sorted[0] if c_sorted.size and c_sorted[0] > 0 else 1.0
    head_p = np.sum((head / scale) ** p)
    tail_p = np.sum((tail / scale) ** p)
    return bool(tail_p <= head_p)


def cai_zhang_bound(a: Sequence[float], s: int, lam: float, alpha: float):
    """Both sides of the Cai-Zhang sequence inequality.

    For a nonincreasing nonnegative sequence with
    ``sum(a[:s]) + lam >= sum(a[s:])`` the inequality reads

        sum_{j>s} a_j^alpha <= s * ((sum_{i<=s} a_i^alpha / s)^(1/alpha) + lam/s)^alpha.

    Returns ``(lhs, rhs)``; asserting the inequality is left to the caller.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("a must be a nonempty 1-D sequence")
    if np.any(a < 0):
        raise ValueError("a must be nonnegative")
    if np.any(np.diff(a) > 0):
        raise ValueError("a must be nonincreasing")
    if not (1 <= s <= a.size):
        raise ValueError(f"s must lie in [1, {a.size}], got {s}")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    lhs = float(np.sum(a[s:] ** alpha))
    head = float(np.sum(a[:s] ** alpha))
    rhs = float(s * ((head / s) ** (1.0 / alpha) + lam / s) ** alpha)
    return lhs, rhs
