import numpy as np
import pytest

from sepfda.errors import InsufficientDataError, InsufficientVariationError, ShapeError
from sepfda.matnorm import (
    SeparableFit,
    existence_threshold,
    flipflop,
    matnorm_logpdf,
    mmd2,
    mmle_flipflop,
    normalized,
    sample_matrix_normal,
    scale_to_convention,
)

from oracles import kron_logpdf, kron_mmd2, random_fit, random_spd


def test_mmd2_zero_at_mean_and_frobenius_for_identity():
    rng = np.random.default_rng(0)
    fit = SeparableFit(rng.standard_normal((4, 3)), np.eye(3), np.eye(4))
    assert mmd2(fit.mean, fit) == 0.0
    A = rng.standard_normal((4, 3))
    assert mmd2(A, fit) == pytest.approx(np.sum((A - fit.mean) ** 2), rel=1e-13)


def test_mmd2_matches_kronecker_vectorization():
    rng = np.random.default_rng(1)
    for m, p in [(2, 2), (5, 3), (3, 6)]:
        fit = random_fit(rng, m, p)
        A = rng.standard_normal((m, p))
        assert mmd2(A, fit) == pytest.approx(kron_mmd2(A, fit), rel=1e-11)


def test_mmd2_batch_equals_loop():
    rng = np.random.default_rng(2)
    fit = random_fit(rng, 4, 2)
    A = rng.standard_normal((7, 4, 2))
    np.testing.assert_allclose(mmd2(A, fit), [mmd2(a, fit) for a in A], rtol=1e-13)


def test_mmd2_shape_error():
    fit = random_fit(np.random.default_rng(3), 4, 2)
    with pytest.raises(ShapeError):
        mmd2(np.zeros((2, 4)), fit)


def test_mmd2_scale_tradeoff_invariance():
    rng = np.random.default_rng(4)
    fit = random_fit(rng, 5, 3)
    A = rng.standard_normal((5, 3))
    other = fit.with_covariances(fit.sigma_row * 7.3, fit.sigma_col / 7.3)
    assert mmd2(A, other) == pytest.approx(mmd2(A, fit), rel=1e-10)


def test_logpdf_scalar_case():
    fit = SeparableFit(np.zeros((1, 1)), np.eye(1), np.eye(1))
    assert matnorm_logpdf(np.zeros((1, 1)), fit) == pytest.approx(-0.5 * np.log(2 * np.pi), rel=1e-15)


def test_logpdf_matches_multivariate_normal_and_peaks_at_mean():
    rng = np.random.default_rng(5)
    fit = random_fit(rng, 2, 3)
    A = rng.standard_normal((2, 3))
    assert matnorm_logpdf(A, fit) == pytest.approx(kron_logpdf(A, fit), rel=1e-11)
    assert matnorm_logpdf(fit.mean, fit) > matnorm_logpdf(A, fit)


def test_existence_threshold():
    assert existence_threshold(3, 3) == 4
    assert existence_threshold(10, 3) == 5
    assert existence_threshold(100, 3) == 35


def test_flipflop_rejects_small_and_constant_samples():
    with pytest.raises(InsufficientDataError):
        mmle_flipflop(np.random.default_rng(0).standard_normal((2, 3, 3)))
    with pytest.raises(InsufficientVariationError):
        mmle_flipflop(np.ones((10, 3, 2)))


def test_flipflop_recovers_kronecker_covariance():
    rng = np.random.default_rng(6)
    truth = normalized(random_fit(rng, 5, 3))
    A = sample_matrix_normal(truth, rng, 500)
    fit = mmle_flipflop(A)
    K, Kh = truth.kronecker(), fit.kronecker()
    assert np.linalg.norm(Kh - K) / np.linalg.norm(K) < 0.10
    assert fit.converged
    assert np.trace(fit.sigma_row) == pytest.approx(3, rel=1e-12)


def test_flipflop_loglikelihood_never_decreases():
    rng = np.random.default_rng(7)
    truth = random_fit(rng, 6, 4)
    A = sample_matrix_normal(truth, rng, 40)
    res = flipflop(A - A.mean(axis=0), tol=0.0, max_iter=30, trace=True)
    diffs = np.diff(res.loglik_trace)
    assert np.all(diffs >= -1e-9)


def test_flipflop_stationary_point_equations():
    rng = np.random.default_rng(8)
    A = sample_matrix_normal(random_fit(rng, 4, 3), rng, 60)
    fit = mmle_flipflop(A, tol=1e-14, max_iter=500)
    D = A - fit.mean
    n, m, p = A.shape
    row = sum(d.T @ fit.col_precision @ d for d in D) / (m * n)
    col = sum(d @ fit.row_precision @ d.T for d in D) / (p * n)
    np.testing.assert_allclose(row, fit.sigma_row, rtol=1e-7)
    np.testing.assert_allclose(col, fit.sigma_col, rtol=1e-7)


def test_scale_convention_idempotent():
    rng = np.random.default_rng(9)
    r, c = random_spd(rng, 3), random_spd(rng, 4)
    once = scale_to_convention(r, c)
    twice = scale_to_convention(*once)
    np.testing.assert_allclose(twice[0], once[0], rtol=1e-15)
    np.testing.assert_allclose(twice[1], once[1], rtol=1e-15)


def test_mean_distance_near_degrees_of_freedom():
    rng = np.random.default_rng(10)
    fit = random_fit(rng, 5, 3)
    n = 4000
    d = mmd2(sample_matrix_normal(fit, rng, n), fit)
    assert abs(d.mean() - 15) < 3 * np.sqrt(2 * 15 / n)


def test_sampling_moments_and_determinism():
    fit = SeparableFit(np.zeros((2, 2)), np.eye(2), np.eye(2))
    A = sample_matrix_normal(fit, 11, 100_000)
    assert np.all(np.abs(A.mean(axis=0)) < 4 / np.sqrt(100_000))
    np.testing.assert_array_equal(A, sample_matrix_normal(fit, 11, 100_000))

    rng = np.random.default_rng(12)
    fit = SeparableFit(np.zeros((2, 3)), random_spd(rng, 3, 0.7), random_spd(rng, 2, 0.7))
    A = sample_matrix_normal(fit, 13, 100_000)
    vecs = A.transpose(0, 2, 1).reshape(len(A), -1)
    assert np.abs(np.cov(vecs.T) - fit.kronecker()).max() <= 0.05
