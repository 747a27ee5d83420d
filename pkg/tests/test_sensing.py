import numpy as np
import pytest

from bslp.block_model import BlockPartition, block_norms
from bslp.sensing import (
    MatrixEnsemble,
    NoiseModel,
    derive_seed,
    generate_block_sparse_signal,
    generate_matrix,
    load_csv,
    measure,
    save_csv,
    spectral_norm,
    stream_rng,
)


@pytest.mark.parametrize("kind", ["gaussian", "rademacher", "sparse-ternary"])
def test_matrix_is_seeded_and_read_only(kind):
    a = generate_matrix(MatrixEnsemble(kind, 20, 50, seed=7))
    b = generate_matrix(MatrixEnsemble(kind, 20, 50, seed=7))
    c = generate_matrix(MatrixEnsemble(kind, 20, 50, seed=8))
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    assert a.shape == (20, 50)
    with pytest.raises(ValueError):
        a[0, 0] = 1.0


@pytest.mark.parametrize("kind", ["gaussian", "rademacher", "sparse-ternary"])
def test_entry_variance_is_one_over_n(kind):
    phi = generate_matrix(MatrixEnsemble(kind, 50, 4000, seed=1))
    assert abs(phi.mean()) < 3e-3
    assert phi.var() * 50 == pytest.approx(1.0, rel=0.03)


def test_rademacher_and_ternary_values():
    r = generate_matrix(MatrixEnsemble("rademacher", 4, 100, seed=0))
    assert set(np.unique(np.abs(r)).round(12)) == {0.5}
    t = generate_matrix(MatrixEnsemble("sparse-ternary", 3, 3000, seed=0))
    assert set(np.unique(t).round(12)) == {-1.0, 0.0, 1.0}
    assert np.mean(t == 0) == pytest.approx(2 / 3, abs=0.02)


def test_orthonormalized_rows():
    phi = generate_matrix(MatrixEnsemble("gaussian", 10, 40, seed=3, orthonormalize=True))
    np.testing.assert_allclose(phi @ phi.T, 4.0 * np.eye(10), atol=1e-12)


def test_ensemble_validation():
    with pytest.raises(ValueError):
        MatrixEnsemble("cauchy", 2, 3, 0)
    with pytest.raises(ValueError):
        MatrixEnsemble("gaussian", 0, 3, 0)
    with pytest.raises(ValueError):
        MatrixEnsemble("gaussian", 5, 3, 0, orthonormalize=True)
    with pytest.raises(ValueError):
        NoiseModel("gaussian-l2", -1.0)
    with pytest.raises(ValueError):
        NoiseModel("none", 0.5)


def test_signal_has_exact_block_support():
    part = BlockPartition.uniform(3, 10)
    x, sup = generate_block_sparse_signal(part, 4, seed=5)
    active = np.flatnonzero(block_norms(x, part))
    assert tuple(active) == sup.indices and len(sup) == 4
    x2, _ = generate_block_sparse_signal(part, 4, seed=5)
    assert np.array_equal(x, x2)
    with pytest.raises(ValueError):
        generate_block_sparse_signal(part, 11, seed=0)


def test_measure_reports_noise_norm():
    phi = generate_matrix(MatrixEnsemble("gaussian", 30, 60, seed=1))
    x = np.ones(60)
    y0, e0 = measure(phi, x, NoiseModel(), seed=2)
    assert e0 == 0.0 and np.array_equal(y0, phi @ x)
    y, e = measure(phi, x, NoiseModel.gaussian(0.1), seed=2)
    assert np.linalg.norm(y - phi @ x) == pytest.approx(e, rel=1e-12)
    with pytest.raises(ValueError):
        measure(phi, np.ones(59), NoiseModel(), seed=0)


def test_streams_are_independent_and_stable():
    a = stream_rng(1, 2).random(3)
    assert np.array_equal(a, stream_rng(1, 2).random(3))
    assert not np.array_equal(a, stream_rng(1, 3).random(3))
    s = derive_seed(10, 4)
    assert s == derive_seed(10, 4) and 0 <= s < 2 ** 63


@pytest.mark.parametrize("shape", [(20, 50), (50, 20), (200, 300)])
def test_spectral_norm_matches_svd(shape):
    phi = np.random.default_rng(0).standard_normal(shape)
    ref = np.linalg.svd(phi, compute_uv=False)[0]
    assert spectral_norm(phi, "power") == pytest.approx(ref, rel=1e-10)
    assert spectral_norm(phi) == pytest.approx(ref, rel=1e-10)
    assert spectral_norm(phi, "svd") == ref


def test_spectral_norm_zero_matrix():
    assert spectral_norm(np.zeros((3, 4)), "power") == 0.0


def test_csv_round_trip(tmp_path):
    arr = np.random.default_rng(1).standard_normal((4, 5)) * 1e-7
    path = tmp_path / "m.csv"
    save_csv(path, arr)
    assert np.array_equal(load_csv(path), arr)
    vec = np.array([1 / 3, 2e-300, -5.0])
    save_csv(path, vec)
    assert np.array_equal(load_csv(path), vec)
