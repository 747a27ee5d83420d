import math

import numpy as np
import pytest

from bslp.baselines import BompConfig, block_omp
from bslp.block_model import BlockPartition


def _instance(n, d, M, s, seed):
    rng = np.random.default_rng(seed)
    part = BlockPartition.uniform(d, M)
    phi = rng.standard_normal((n, part.N)) / math.sqrt(n)
    blocks = rng.choice(M, s, replace=False)
    x = np.zeros(part.N)
    x[part.indices(blocks)] = rng.standard_normal(s * d) + np.sign(rng.standard_normal(s * d))
    return phi, x, part, set(int(b) for b in blocks)


@pytest.mark.parametrize("d", [1, 2, 4])
def test_exact_recovery_noiseless(d):
    phi, x, part, support = _instance(60, d, 128 // d, 16 // d, seed=d)
    res = block_omp(phi, phi @ x, part, BompConfig(max_blocks=16 // d))
    assert set(res.flags["support"].indices) == support
    assert res.converged and not res.flags["rank_deficient"]
    np.testing.assert_allclose(res.x_hat, x, atol=1e-10)


def test_residual_history_nonincreasing():
    phi, x, part, _ = _instance(40, 2, 32, 5, seed=9)
    y = phi @ x + 0.05 * np.random.default_rng(0).standard_normal(40)
    res = block_omp(phi, y, part, BompConfig(max_blocks=8))
    assert res.iterations == 8 and len(res.history) == 9
    assert all(b <= a + 1e-12 for a, b in zip(res.history, res.history[1:]))
    assert len(res.flags["order"]) == len(set(res.flags["order"]))


def test_residual_tolerance_stops_early():
    phi, x, part, _ = _instance(60, 2, 32, 2, seed=3)
    res = block_omp(phi, phi @ x, part, BompConfig(max_blocks=10, residual_tol=1e-8))
    assert res.iterations == 2


def test_rank_deficiency_flagged():
    part = BlockPartition.uniform(2, 3)
    col = np.array([1.0, 2.0, 0.5])
    phi = np.column_stack([col, col, np.eye(3)[:, 0], np.eye(3)[:, 1], np.eye(3)[:, 2], np.ones(3)])
    res = block_omp(phi, 3 * col, part, BompConfig(max_blocks=1))
    assert res.flags["rank_deficient"]
    np.testing.assert_allclose(phi @ res.x_hat, 3 * col, atol=1e-12)


def test_config_errors():
    with pytest.raises(ValueError):
        BompConfig(max_blocks=0)
    with pytest.raises(ValueError):
        BompConfig(max_blocks=1, residual_tol=-1.0)
    part = BlockPartition.uniform(2, 3)
    with pytest.raises(ValueError):
        block_omp(np.ones((2, 6)), np.ones(2), part, BompConfig(max_blocks=4))
