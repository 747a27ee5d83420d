import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bslp.block_model import (
    BlockPartition,
    BlockSupport,
    best_block_approx,
    block_norms,
    block_sup_norm,
    block_support_size,
    cai_zhang_bound,
    cone_constraint_holds,
    mixed_norm,
    mixed_norm_p,
    validate_p,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_uniform_partition():
    part = BlockPartition.uniform(3, 4)
    assert part.N == 12 and part.M == 4 and part.is_uniform
    assert list(part.offsets) == [0, 3, 6, 9, 12]
    assert list(part.block_ids()) == [0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3]


def test_irregular_partition():
    part = BlockPartition((1, 3, 2))
    assert part.N == 6 and not part.is_uniform
    x = np.arange(6.0)
    assert list(part.block(x, 1)) == [1.0, 2.0, 3.0]
    assert list(part.indices([2, 0])) == [4, 5, 0]


@pytest.mark.parametrize("sizes", [(), (0, 2), (2, -1)])
def test_partition_rejects_bad_sizes(sizes):
    with pytest.raises(ValueError):
        BlockPartition(sizes)


def test_from_length_requires_divisibility():
    with pytest.raises(ValueError):
        BlockPartition.from_length(10, 3)


def test_check_rejects_wrong_length():
    with pytest.raises(ValueError):
        BlockPartition.uniform(2, 3).check(np.zeros(5))


@pytest.mark.parametrize("p", [0.0, -0.5, 1.5, float("nan")])
def test_validate_p(p):
    with pytest.raises(ValueError):
        validate_p(p)


def test_support_validation_and_complement():
    sup = BlockSupport((3, 0), 5)
    assert sup.indices == (0, 3) and len(sup) == 2 and 3 in sup
    assert sup.complement().indices == (1, 2, 4)
    with pytest.raises(ValueError):
        BlockSupport((1, 1), 5)
    with pytest.raises(ValueError):
        BlockSupport((5,), 5)


def test_norm_examples():
    part = BlockPartition.uniform(2, 2)
    x = np.array([3.0, 4.0, 0.0, 1.0])
    assert np.allclose(block_norms(x, part), [5.0, 1.0])
    assert mixed_norm(x, part, 1.0) == pytest.approx(6.0)
    assert mixed_norm_p(x, part, 0.5) == pytest.approx(np.sqrt(5) + 1)
    assert mixed_norm(x, part, 0.5) == pytest.approx((np.sqrt(5) + 1) ** 2)
    assert block_sup_norm(x, part) == 5.0
    assert block_support_size(x, part) == 2
    assert block_support_size(x, part, tol=2.0) == 1


def test_block_norms_no_overflow():
    part = BlockPartition.uniform(2, 1)
    assert block_norms(np.array([3e200, 4e200]), part)[0] == pytest.approx(5e200)


@settings(max_examples=60, deadline=None)
@given(arrays(float, 12, elements=finite), st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_mixed_norm_monotone_in_p(x, p, q):
    part = BlockPartition.uniform(3, 4)
    lo, hi = sorted((p, q))
    assert mixed_norm(x, part, hi) <= mixed_norm(x, part, lo) * (1 + 1e-12) + 1e-300


@settings(max_examples=60, deadline=None)
@given(arrays(float, 12, elements=finite))
def test_p1_is_sum_of_block_norms(x):
    part = BlockPartition.uniform(2, 6)
    ref = sum(np.linalg.norm(x[2 * i:2 * i + 2]) for i in range(6))
    assert mixed_norm(x, part, 1.0) == pytest.approx(ref, rel=1e-12, abs=1e-300)


@settings(max_examples=80, deadline=None)
@given(arrays(float, 12, elements=finite), st.integers(0, 4))
def test_best_approx_split_is_exact(x, s):
    part = BlockPartition((3, 1, 2, 4, 2))
    x_max, x_rest, sup = best_block_approx(x, part, s)
    assert np.array_equal(x_max + x_rest, x)
    assert not np.any((x_max != 0) & (x_rest != 0))
    assert len(sup) == s
    kept = block_norms(x_max, part)[list(sup.indices)]
    dropped = block_norms(x_rest, part)
    if s:
        assert kept.min() >= dropped.max()


def test_best_approx_ties_prefer_low_index():
    part = BlockPartition.uniform(1, 4)
    _, _, sup = best_block_approx(np.array([1.0, 2.0, 2.0, 2.0]), part, 2)
    assert sup.indices == (1, 2)


def test_cai_zhang_examples():
    assert cai_zhang_bound([1, 1], 1, 0.0, 2.0) == pytest.approx((1.0, 1.0))
    assert cai_zhang_bound([2, 1, 1], 1, 0.0, 1.0) == pytest.approx((2.0, 2.0))


@pytest.mark.parametrize(
    "a,s,lam,alpha",
    [([1, 2], 1, 0, 1), ([-1.0], 1, 0, 1), ([1, 1], 0, 0, 1), ([1, 1], 1, -1, 1), ([1, 1], 1, 0, 0.5), ([], 1, 0, 1)],
)
def test_cai_zhang_rejects(a, s, lam, alpha):
    with pytest.raises(ValueError):
        cai_zhang_bound(a, s, lam, alpha)


def test_cone_needs_objective_domination_against_best_approx():
    # a dense x with x_hat = x satisfies ||x_hat|| <= ||x|| but its error
    # against x_max(s) violates the cone; domination of x_max(s) is what counts
    part = BlockPartition.uniform(1, 4)
    x = np.ones(4)
    x_max, _, _ = best_block_approx(x, part, 1)
    assert not cone_constraint_holds(x - x_max, part, 1, 0.5)
    assert cone_constraint_holds(0.5 * x_max - x_max, part, 1, 0.5)


def test_cone_is_scale_invariant():
    part = BlockPartition.uniform(2, 3)
    h = np.array([1.0, 0.0, 0.5, 0.0, 0.5, 0.0])
    for scale in (1e-200, 1.0, 1e200):
        assert cone_constraint_holds(h * scale, part, 1, 1.0)
