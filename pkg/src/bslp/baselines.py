"""Greedy comparison algorithm: Block Orthogonal Matching Pursuit.

At each step the block with the largest correlation ``||Phi[i]^T r||_2``
joins the support and the estimate is refit by least squares on all selected
columns. With a singleton partition this is plain OMP, which stands in for
the orthogonal greedy algorithm in block-versus-non-block comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .block_model import BlockPartition, BlockSupport
from .solver import SolverResult

__all__ = ["BompConfig", "block_omp"]


@dataclass(frozen=True)
class BompConfig:
    max_blocks: int
    residual_tol: float = 1e-10

    def __post_init__(self):
        if self.max_blocks < 1:
            raise ValueError("max_blocks must be >= 1")
        if self.residual_tol < 0:
            raise ValueError("residual_tol must be nonnegative")


def block_omp(phi, y, part: BlockPartition, cfg: BompConfig) -> SolverResult:
    """Greedy block selection with least-squares refit.

    ``result.flags["rank_deficient"]`` is set when a refit system lost rank
    and the minimum-norm solution was used; ``result.flags["support"]`` holds
    the selected blocks in selection order and ``result.history`` the residual
    norm after each step.
    """
    phi = np.asarray(phi, dtype=float)
    y = np.asarray(y, dtype=float)
    if phi.ndim != 2 or phi.shape[1] != part.N or y.shape != (phi.shape[0],):
        raise ValueError(f"inconsistent shapes: phi {phi.shape}, y {y.shape}, N={part.N}")
    if cfg.max_blocks > part.M:
        raise ValueError(f"max_blocks={cfg.max_blocks} exceeds M={part.M}")

    offsets = part.offsets
    selected: list[int] = []
    available = np.ones(part.M, dtype=bool)
    x = np.zeros(part.N)
    r = y.copy()
    rnorm = float(np.linalg.norm(r))
    history = [rnorm]
    rank_deficient = False

    while len(selected) < cfg.max_blocks and rnorm > cfg.residual_tol:
        corr = phi.T @ r
        scores = np.sqrt(np.add.reduceat(corr * corr, offsets[:-1]))
        scores[~available] = -np.inf
        best = int(np.argmax(scores))
        selected.append(best)
        available[best] = False
        cols = part.indices(selected)
        sub = phi[:, cols]
        coef, _, rank, _ = np.linalg.lstsq(sub, y, rcond=None)
        if rank < cols.size:
            rank_deficient = True
        x = np.zeros(part.N)
        x[cols] = coef
        r = y - sub @ coef
        rnorm = float(np.linalg.norm(r))
        history.append(rnorm)

    return SolverResult(
        x_hat=x,
        iterations=len(selected),
        converged=rnorm <= cfg.residual_tol,
        objective=0.5 * rnorm * rnorm,
        primal_residual=rnorm,
        dual_residual=0.0,
        history=history,
        flags={
            "support": BlockSupport(tuple(selected), part.M),
            "order": tuple(selected),
            "rank_deficient": rank_deficient,
        },
    )
