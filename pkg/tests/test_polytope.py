import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bslp.block_model import BlockPartition, best_block_approx, block_norms, cone_constraint_holds
from bslp.polytope import (
    PolytopeMembershipError,
    decompose,
    membership_alpha,
    tail_decomposition,
    term_count_bound,
)


def _sparsity(u, part):
    return np.count_nonzero(block_norms(u, part))


def test_sparse_input_is_its_own_decomposition():
    part = BlockPartition.uniform(2, 5)
    x = np.array([1.0, 2, 0, 0, 3, 0, 0, 0, 0, 0])
    dec = decompose(x, part, 2, p=0.5)
    assert len(dec) == 1 and np.array_equal(dec.vectors[0], x) and dec.depth == 0


def test_uniform_blocks_split_evenly():
    # three equal blocks, s = 2, p = 1: three pieces, each dropping one block
    part = BlockPartition.uniform(1, 3)
    x = np.ones(3)
    dec = decompose(x, part, 2, alpha=1.5, p=1.0)
    assert len(dec) == 3
    np.testing.assert_allclose(dec.weights, 1 / 3)
    np.testing.assert_allclose(dec.reconstruct(), x, atol=1e-15)


def test_membership_alpha_is_tight():
    part = BlockPartition.uniform(2, 4)
    x = np.random.default_rng(0).standard_normal(8)
    a = membership_alpha(x, part, 2, 0.5)
    decompose(x, part, 2, alpha=a, p=0.5)
    with pytest.raises(PolytopeMembershipError):
        decompose(x, part, 2, alpha=a * 0.99, p=0.5)


def test_sup_norm_violation_is_reported():
    part = BlockPartition.uniform(1, 3)
    with pytest.raises(PolytopeMembershipError, match="2,inf"):
        decompose(np.array([5.0, 0.1, 0.1]), part, 2, alpha=1.0, p=1.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.05, 1.0), st.integers(1, 4))
def test_random_decompositions(seed, p, s):
    rng = np.random.default_rng(seed)
    part = BlockPartition((1, 2, 3, 2, 1, 2, 1))
    x = rng.standard_normal(part.N) * (rng.random(part.N) < 0.8)
    dec = decompose(x, part, s, p=p)
    assert dec.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(dec.weights > 0)
    np.testing.assert_allclose(dec.reconstruct(), x, atol=1e-12)
    assert all(_sparsity(u, part) <= s for u in dec.vectors)
    assert dec.energy() <= dec.energy_bound(x) * (1 + 1e-9)
    assert len(dec) <= term_count_bound(_sparsity(x, part), s)


def test_tail_decomposition_of_cone_vector():
    rng = np.random.default_rng(2)
    part = BlockPartition.uniform(2, 8)
    for _ in range(50):
        h = rng.standard_normal(16)
        h_max, h_rest, _ = best_block_approx(h, part, 2)
        h = h_max + 0.3 * h_rest
        if not cone_constraint_holds(h, part, 2, 0.7):
            continue
        dec = tail_decomposition(h, part, 2, 1.5, 0.7)
        np.testing.assert_allclose(dec.reconstruct(), h - h_max, atol=1e-12)
        assert all(_sparsity(u, part) <= 1 for u in dec.vectors)


def test_tail_decomposition_needs_integer_level():
    part = BlockPartition.uniform(1, 6)
    with pytest.raises(ValueError):
        tail_decomposition(np.ones(6), part, 3, 1.5, 1.0)


def test_zero_vector():
    part = BlockPartition.uniform(2, 3)
    dec = decompose(np.zeros(6), part, 1, p=0.5)
    assert len(dec) == 1 and dec.weights[0] == 1.0 and not np.any(dec.vectors)
