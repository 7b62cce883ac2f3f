import numpy as np
import pytest
from hypothesis import given, settings

from gpcompare.covariance import ProcessSpec, SpecError, augment_with_zero
from gpcompare.sampler import CHUNK_ROWS, draw, factorize, sample

from conftest import random_spec, specs


def spec_of(sigma):
    sigma = np.asarray(sigma, dtype=float)
    n = sigma.shape[0]
    return ProcessSpec(tuple(str(i + 1) for i in range(n)), sigma, np.zeros(n))


def test_identity_factor():
    f = factorize(spec_of(np.eye(2)))
    np.testing.assert_allclose(f.factor @ f.factor.T, np.eye(2), atol=1e-15)
    assert f.rank == 2


def test_zero_matrix_rank_zero():
    f = factorize(spec_of(np.zeros((3, 3))))
    assert f.rank == 0
    b = draw(f, 10, seed=1)
    assert b.draws.shape == (10, 3) and not b.draws.any()


def test_rank_one_factor_gives_equal_coordinates():
    sigma = np.array([[1.0, 1.0], [1.0, 1.0]])
    lam = np.linalg.eigvalsh(sigma)
    np.testing.assert_allclose(lam, [0, 2], atol=1e-15)
    f = factorize(spec_of(sigma))
    assert f.rank == 1
    x = draw(f, 1000, seed=3).draws
    assert np.max(np.abs(x[:, 0] - x[:, 1])) <= 1e-12


def test_non_psd_rejected():
    spec = spec_of(np.eye(2))
    object.__setattr__(spec, "sigma", np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(SpecError):
        factorize(spec)


@settings(max_examples=60, deadline=None)
@given(specs(max_n=8))
def test_reconstruction(spec):
    f = factorize(spec)
    assert f.reconstruction_error() <= 1e-8 * max(1.0, np.abs(spec.sigma).max())


def test_singular_augmented_and_brownian_at_zero():
    aug = augment_with_zero(spec_of([[1.0, 0.3], [0.3, 2.0]]))
    x = sample(aug, 100, seed=5).draws
    assert not x[:, 0].any()
    bm = ProcessSpec(("a", "b", "c"), np.minimum.outer([0.0, 1.0, 2.0], [0.0, 1.0, 2.0]), np.zeros(3))
    x = sample(bm, 100, seed=5).draws
    assert not x[:, 0].any()


def test_univariate_moments():
    s = 1000
    x = sample(spec_of([[1.0]]), s, seed=11).draws[:, 0]
    assert abs(x.mean()) <= 4 / np.sqrt(s)
    assert abs(x.var(ddof=1) - 1) <= 0.2


def test_determinism_and_stream_separation():
    spec = random_spec(np.random.default_rng(0), 4)
    a = sample(spec, 3 * CHUNK_ROWS + 17, seed=42, stream_id=3)
    b = sample(spec, 3 * CHUNK_ROWS + 17, seed=42, stream_id=3)
    assert a.draws.tobytes() == b.draws.tobytes()
    c = sample(spec, 3 * CHUNK_ROWS + 17, seed=42, stream_id=4)
    assert not np.array_equal(a.draws, c.draws)


def test_independent_of_worker_count():
    spec = random_spec(np.random.default_rng(1), 5)
    f = factorize(spec)
    one = draw(f, 5 * CHUNK_ROWS + 3, seed=9, workers=1)
    many = draw(f, 5 * CHUNK_ROWS + 3, seed=9, workers=4)
    assert one.draws.tobytes() == many.draws.tobytes()


def test_prefix_stability():
    # the first rows do not depend on how many rows are requested
    spec = random_spec(np.random.default_rng(2), 3)
    small = sample(spec, 100, seed=1).draws
    large = sample(spec, CHUNK_ROWS + 100, seed=1).draws
    np.testing.assert_array_equal(small, large[:100])


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_marginal_and_cross_moments(seed):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, 5, rank=3)
    s = 100_000
    x = sample(spec, s, seed=seed).draws
    emp = np.cov(x, rowvar=False)
    v = np.diag(spec.sigma)
    ok = v > 0
    assert np.all(np.abs(np.diag(emp)[ok] - v[ok]) <= 5 * v[ok] * np.sqrt(2 / s))
    bound = 5 * np.sqrt(2 / s) * max(1.0, np.abs(spec.sigma).max())
    assert np.max(np.abs(emp - spec.sigma)) <= bound


def test_bad_arguments():
    f = factorize(spec_of([[1.0]]))
    with pytest.raises(ValueError):
        draw(f, 0, seed=1)
    with pytest.raises(ValueError):
        draw(f, 1, seed=-1)
