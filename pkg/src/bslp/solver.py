r"""ADMM for the penalized mixed l2/lp problem.

Solves

.. math::
   \min_x \; \lambda \|x\|_{2,p}^p + \tfrac12 \|y - \Phi x\|_2^2

through the splitting ``x = v`` with scaled dual ``z``:

    x <- (Phi^T Phi + gamma I)^{-1} (Phi^T y + gamma (v - z))
    v <- prox_{(lambda/gamma) ||.||_{2,p}^p}(x + z)
    z <- z + x - v

The x-update matrix is factorized once per solve. When ``n < N`` the
Cholesky factor of the ``n x n`` matrix ``gamma I + Phi Phi^T`` is used
through the Woodbury identity instead of the ``N x N`` one.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg as sla

from .block_model import BlockPartition, mixed_norm_p, validate_p
from .prox import prox_vector
from .sensing import spectral_norm

__all__ = [
    "AdmmConfig",
    "Continuation",
    "SolverResult",
    "SolverDiverged",
    "RecoveryProblem",
    "CachedSolve",
    "admm_solve",
    "objective",
]

PROX_MODES = ("block-exact", "elementwise-surrogate")


class SolverDiverged(RuntimeError):
    def __init__(self, iteration, message):
        super().__init__(message)
        self.iteration = iteration


@dataclass(frozen=True)
class Continuation:
    """Geometric lambda schedule from ``start`` down to the target.

    ``start=None`` uses ``||Phi^T y||_inf``. The weight is multiplied by
    ``factor`` every ``every`` iterations until it reaches the target.
    """

    factor: float = 0.5
    every: int = 50
    start: Optional[float] = None

    def __post_init__(self):
        if not (0 < self.factor < 1):
            raise ValueError("continuation factor must lie in (0, 1)")
        if self.every < 1:
            raise ValueError("continuation stage length must be >= 1")


@dataclass(frozen=True)
class AdmmConfig:
    lam: float
    gamma: float = 1.0
    p: float = 1.0
    max_iters: int = 5000
    tol_primal: float = 1e-8
    tol_dual: float = 1e-8
    prox_mode: str = "block-exact"
    continuation: Optional[Continuation] = None
    record_history: bool = False

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        validate_p(self.p)
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not (self.tol_primal > 0 and self.tol_dual > 0):
            raise ValueError("tolerances must be positive")
        if self.prox_mode not in PROX_MODES:
            raise ValueError(f"prox_mode must be one of {PROX_MODES}, got {self.prox_mode!r}")


@dataclass(frozen=True)
class RecoveryProblem:
    """Measurement matrix, observation, partition and exponent of one instance."""

    phi: np.ndarray
    y: np.ndarray
    part: BlockPartition
    p: float
    noise_level: float = 0.0

    def __post_init__(self):
        validate_p(self.p)
        phi = np.asarray(self.phi, float)
        y = np.asarray(self.y, float)
        if phi.ndim != 2 or y.ndim != 1 or phi.shape != (y.size, self.part.N):
            raise ValueError(
                f"inconsistent shapes: phi {phi.shape}, y {y.shape}, N={self.part.N}"
            )


@dataclass
class SolverResult:
    x_hat: np.ndarray
    iterations: int
    converged: bool
    objective: float
    primal_residual: float
    dual_residual: float
    history: Optional[list] = None
    state: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    def write_history_csv(self, path) -> None:
        if self.history is None:
            raise ValueError("solver was run without record_history")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "objective", "primal", "dual"])
            for row in self.history:
                w.writerow([row[0], repr(row[1]), repr(row[2]), repr(row[3])])


def objective(phi, y, part: BlockPartition, x, lam: float, p: float) -> float:
    """``lam * ||x||_{2,p}^p + ||y - phi x||_2^2 / 2``."""
    x = part.check(x)
    r = np.asarray(y, float) - np.asarray(phi, float) @ x
    return float(lam * mixed_norm_p(x, part, p) + 0.5 * (r @ r))


class CachedSolve:
    """Solves ``(Phi^T Phi + gamma I) x = b`` with one cached factorization."""

    def __init__(self, phi, gamma):
        self.phi = np.asarray(phi, float)
        self.gamma = float(gamma)
        n, N = self.phi.shape
        self.woodbury = n < N
        try:
            if self.woodbury:
                a = self.phi @ self.phi.T
                a[np.diag_indices(n)] += self.gamma
            else:
                a = self.phi.T @ self.phi
                a[np.diag_indices(N)] += self.gamma
            self.factor = sla.cho_factor(a, lower=True, check_finite=True)
        except (sla.LinAlgError, ValueError) as exc:
            raise sla.LinAlgError(f"x-update factorization failed for gamma={gamma}: {exc}") from exc

    def __call__(self, b):
        if self.woodbury:
            t = sla.cho_solve(self.factor, self.phi @ b, check_finite=False)
            return (b - self.phi.T @ t) / self.gamma
        return sla.cho_solve(self.factor, b, check_finite=False)


def admm_solve(phi, y, part: BlockPartition, cfg: AdmmConfig, x0=None) -> SolverResult:
    """Run ADMM on ``lam ||x||_{2,p}^p + ||y - phi x||^2 / 2``.

    Stops once both ``||x - v||_2 / sqrt(N)`` and
    ``gamma ||v_k+1 - v_k||_2 / sqrt(N)`` are below their tolerances (at the
    target lambda when continuation is on), or after ``max_iters``.

    Returns the sparse iterate ``v`` as ``x_hat``; the final ``x``, ``v``
    and ``z`` are kept in ``result.state``.

    Raises
    ------
    SolverDiverged
        If an iterate becomes non-finite.
    """
    phi = np.asarray(phi, dtype=float)
    y = np.asarray(y, dtype=float)
    N = part.N
    if phi.ndim != 2 or phi.shape[1] != N or y.shape != (phi.shape[0],):
        raise ValueError(f"inconsistent shapes: phi {phi.shape}, y {y.shape}, N={N}")

    solve = CachedSolve(phi, cfg.gamma)
    phity = phi.T @ y
    if x0 is None:
        sig = spectral_norm(phi) if np.any(phity) else 0.0
        x = phity / sig ** 2 if sig > 0 else np.zeros(N)
    else:
        x = part.check(x0).copy()
    v = x.copy()
    z = np.zeros(N)
    rootn = math.sqrt(N)

    cont = cfg.continuation
    lam = cfg.lam
    if cont is not None:
        start = cont.start if cont.start is not None else float(np.max(np.abs(phity)))
        lam = max(cfg.lam, start)
    history = [] if cfg.record_history else None
    converged = False
    r_primal = r_dual = math.inf
    it = 0
    for it in range(1, cfg.max_iters + 1):
        if cont is not None and lam > cfg.lam and it > 1 and (it - 1) % cont.every == 0:
            lam = max(cfg.lam, lam * cont.factor)
        x = solve(phity + cfg.gamma * (v - z))
        v_old = v
        v = prox_vector(x + z, part, lam / cfg.gamma, cfg.p, cfg.prox_mode)
        z = z + x - v
        r_primal = float(np.linalg.norm(x - v)) / rootn
        r_dual = cfg.gamma * float(np.linalg.norm(v - v_old)) / rootn
        if not (math.isfinite(r_primal) and math.isfinite(r_dual)):
            raise SolverDiverged(it, f"non-finite iterate at iteration {it}")
        if history is not None:
            history.append((it, objective(phi, y, part, v, cfg.lam, cfg.p), r_primal, r_dual))
        if lam == cfg.lam and r_primal <= cfg.tol_primal and r_dual <= cfg.tol_dual:
            converged = True
            break

    return SolverResult(
        x_hat=v,
        iterations=it,
        converged=converged,
        objective=objective(phi, y, part, v, cfg.lam, cfg.p),
        primal_residual=r_primal,
        dual_residual=r_dual,
        history=history,
        state={"x": x, "v": v, "z": z, "gamma": cfg.gamma},
    )
