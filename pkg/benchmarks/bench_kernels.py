"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5]

Times the scalar prox, the block prox, block norms and one full ADMM solve
under each backend and prints the best-of-``repeat`` wall time and speedup.
"""

import argparse
import contextlib
import math
import timeit

import numpy as np

from bslp import kernels
from bslp.block_model import BlockPartition
from bslp.solver import AdmmConfig, admm_solve


@contextlib.contextmanager
def use_backend(name):
    mod = kernels.get_backend(name)
    saved = {k: getattr(kernels, k) for k in ("block_norms", "prox_scalar_array", "block_prox")}
    for k in saved:
        setattr(kernels, k, getattr(mod, k))
    try:
        yield mod
    finally:
        for k, v in saved.items():
            setattr(kernels, k, v)


def cases(rng):
    c = rng.uniform(0, 3, 100_000)
    part = BlockPartition.uniform(4, 25_000)
    a = rng.standard_normal(part.N)
    n, N = 128, 1024
    phi = rng.standard_normal((n, N)) / math.sqrt(n)
    sp = BlockPartition.uniform(2, N // 2)
    x = np.zeros(N)
    x[sp.indices(rng.choice(sp.M, 16, replace=False))] = rng.standard_normal(32)
    y = phi @ x
    cfg = AdmmConfig(lam=1e-4, gamma=0.1, p=0.4, max_iters=300)
    return {
        "prox_scalar p=0.4 (1e5)": lambda m: m.prox_scalar_array(c, 0.3, 0.4, "auto"),
        "prox_scalar p=1/2 closed (1e5)": lambda m: m.prox_scalar_array(c, 0.3, 0.5, "auto"),
        "block_prox d=4 (1e5)": lambda m: m.block_prox(a, part.offsets, 0.3, 0.4),
        "block_norms d=4 (1e5)": lambda m: m.block_norms(a, part.offsets),
        "ADMM 128x1024, 300 iters": lambda m: admm_solve(phi, y, sp, cfg),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    try:
        kernels.get_backend("cython")
    except RuntimeError:
        raise SystemExit("compiled kernels are not built; run `pip install --no-build-isolation -e .`")
    rng = np.random.default_rng(0)
    print(f"{'case':<34} {'python ms':>10} {'cython ms':>10} {'speedup':>8}")
    for name, fn in cases(rng).items():
        times = {}
        for backend in ("python", "cython"):
            with use_backend(backend) as mod:
                fn(mod)
                times[backend] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<34} {times['python']:>10.2f} {times['cython']:>10.2f} {times['python'] / times['cython']:>7.1f}x")


if __name__ == "__main__":
    main()
