"""Random measurement ensembles, block-sparse test signals and noisy measurements.

Every generator is a pure function of its parameters and an integer seed.
Independent streams (matrix, signal, noise) for one experiment trial are
derived with :func:`stream_rng`, which hashes ``(seed, *keys)`` through
:class:`numpy.random.SeedSequence`.
"""

from __future__ import annotations

import os
import tempfile
import warnings
from dataclasses import dataclass

import numpy as np

from .block_model import BlockPartition, BlockSupport

__all__ = [
    "MatrixEnsemble",
    "NoiseModel",
    "stream_rng",
    "derive_seed",
    "generate_matrix",
    "generate_block_sparse_signal",
    "measure",
    "spectral_norm",
    "save_csv",
    "load_csv",
]

ENSEMBLES = ("gaussian", "rademacher", "sparse-ternary")
NOISE_KINDS = ("none", "gaussian-l2")


def stream_rng(seed: int, *keys: int) -> np.random.Generator:
    """Generator for the substream ``keys`` of ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic 63-bit child seed, printable in CSV output."""
    state = np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(2, np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


@dataclass(frozen=True)
class MatrixEnsemble:
    """Entry distribution and shape of a random sensing matrix.

    ``kind`` is one of ``gaussian`` (N(0, 1/n)), ``rademacher`` (+-1/sqrt(n))
    or ``sparse-ternary`` (+-sqrt(3/n) with probability 1/6 each, else 0). All
    three have mean zero and variance ``1/n``.

    With ``orthonormalize=True`` the rows are replaced by an orthonormal basis
    of their span, rescaled by ``sqrt(N/n)`` so columns keep unit expected
    squared norm.
    """

    kind: str
    n: int
    N: int
    seed: int
    orthonormalize: bool = False

    def __post_init__(self):
        if self.kind not in ENSEMBLES:
            raise ValueError(f"kind must be one of {ENSEMBLES}, got {self.kind!r}")
        if self.n < 1 or self.N < 1:
            raise ValueError(f"need n >= 1 and N >= 1, got n={self.n}, N={self.N}")
        if self.orthonormalize and self.n > self.N:
            raise ValueError("row orthonormalization needs n <= N")


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "none"
    level: float = 0.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"noise kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        if self.level < 0:
            raise ValueError("noise level must be nonnegative")
        if (self.kind == "none") != (self.level == 0):
            raise ValueError("noise level must be 0 exactly when kind is 'none'")

    @classmethod
    def gaussian(cls, level: float) -> "NoiseModel":
        return cls("none", 0.0) if level == 0 else cls("gaussian-l2", float(level))


def generate_matrix(ens: MatrixEnsemble) -> np.ndarray:
    rng = stream_rng(ens.seed)
    n, N = ens.n, ens.N
    if ens.kind == "gaussian":
        phi = rng.normal(0.0, 1.0 / np.sqrt(n), size=(n, N))
    elif ens.kind == "rademacher":
        phi = np.where(rng.random((n, N)) < 0.5, 1.0, -1.0) / np.sqrt(n)
    else:
        u = rng.random((n, N))
        amp = np.sqrt(3.0 / n)
        phi = np.where(u < 1.0 / 6.0, amp, np.where(u < 1.0 / 3.0, -amp, 0.0))
    if ens.orthonormalize:
        q, r = np.linalg.qr(phi.T)
        # fix signs so the result is a deterministic function of phi
        q = q * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r)))
        phi = q.T * np.sqrt(N / n)
    phi.setflags(write=False)
    return phi


def generate_block_sparse_signal(part: BlockPartition, s: int, seed: int):
    """Block ``s``-sparse signal with uniformly random support and N(0,1) entries."""
    if not (0 <= s <= part.M):
        raise ValueError(f"s must lie in [0, M={part.M}], got {s}")
    rng = stream_rng(seed)
    x = np.zeros(part.N)
    blocks = np.sort(rng.choice(part.M, size=s, replace=False)) if s else np.zeros(0, int)
    idx = part.indices(blocks)
    x[idx] = rng.standard_normal(idx.size)
    return x, BlockSupport(tuple(int(b) for b in blocks), part.M)


def measure(phi, x, noise: NoiseModel, seed: int):
    """``y = phi @ x + e``; returns ``(y, ||e||_2)``."""
    phi = np.asarray(phi, dtype=float)
    x = np.asarray(x, dtype=float)
    if phi.ndim != 2 or x.ndim != 1 or phi.shape[1] != x.shape[0]:
        raise ValueError(f"cannot apply matrix {phi.shape} to vector {x.shape}")
    y = phi @ x
    if noise.kind == "none":
        return y, 0.0
    e = stream_rng(seed).normal(0.0, noise.level, size=y.shape)
    return y + e, float(np.linalg.norm(e))


def spectral_norm(phi, method: str = "auto", rtol: float = 1e-10, max_iters: int = 20000) -> float:
    """Largest singular value of ``phi``.

    ``method="power"`` runs power iteration on the smaller Gram matrix,
    ``"svd"`` uses a dense SVD, ``"auto"`` runs power iteration and, for
    ``min(n, N) <= 64``, cross-checks it against the SVD.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.ndim != 2 or phi.size == 0:
        raise ValueError("spectral_norm needs a nonempty matrix")
    if method == "svd":
        return float(np.linalg.svd(phi, compute_uv=False)[0])
    if method not in ("auto", "power"):
        raise ValueError(f"unknown method {method!r}")

    n, N = phi.shape
    gram = phi @ phi.T if n <= N else phi.T @ phi
    v = stream_rng(0).standard_normal(gram.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for it in range(max_iters):
        w = gram @ v
        new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        # Rayleigh quotient error is quadratic in the vector error; stop on
        # stagnation near machine precision
        if it > 5 and abs(new - lam) <= 0.1 * min(rtol, 1e-13) * new:
            lam = new
            break
        lam = new
    else:
        raise RuntimeError(f"power iteration did not converge in {max_iters} iterations")
    sigma = float(np.sqrt(lam))

    if method == "auto" and min(n, N) <= 64:
        ref = float(np.linalg.svd(phi, compute_uv=False)[0])
        if abs(sigma - ref) > rtol * ref:
            warnings.warn(
                f"power iteration ({sigma!r}) disagrees with SVD ({ref!r}); using SVD",
                RuntimeWarning,
                stacklevel=2,
            )
            sigma = ref
    return sigma


def save_csv(path, arr) -> None:
    """Write a vector or matrix as row-major CSV with round-trip precision."""
    arr = np.atleast_2d(np.asarray(arr, dtype=float))
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            np.savetxt(fh, arr, fmt="%.17g", delimiter=",")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_csv(path) -> np.ndarray:
    """Read a CSV written by :func:`save_csv` (a single row comes back 1-D)."""
    arr = np.loadtxt(path, delimiter=",", ndmin=2)
    return arr[0] if arr.shape[0] == 1 else arr
