import numpy as np
import pytest
import scipy.linalg as sla

from rmtwasserstein import InputError
from rmtwasserstein.linalg import (frobenius_distance, product_eigenvalues, sample_covariance,
                                   spd_exp, spd_invsqrt, spd_log, spd_sqrt, true_wasserstein)

from conftest import random_spd


def test_sqrt_matches_scipy(rng):
    M = random_spd(12, rng)
    assert np.allclose(spd_sqrt(M), sla.sqrtm(M).real, atol=1e-12)
    assert np.allclose(spd_invsqrt(M), np.linalg.inv(sla.sqrtm(M).real), atol=1e-10)


def test_exp_log_match_scipy(rng):
    S = rng.standard_normal((8, 8))
    S = S + S.T
    assert np.allclose(spd_exp(S), sla.expm(S), rtol=1e-10)
    M = random_spd(8, rng)
    assert np.allclose(spd_log(M), sla.logm(M).real, atol=1e-10)
    assert np.allclose(spd_exp(spd_log(M)), M, atol=1e-10)


def test_sample_covariance_is_outer_product_mean(rng):
    X = rng.standard_normal((5, 40))
    expected = sum(np.outer(x, x) for x in X.T) / 40
    assert np.allclose(sample_covariance(X), expected)


def test_wasserstein_closed_form(rng):
    A, B = random_spd(6, rng), random_spd(6, rng)
    rA = sla.sqrtm(A).real
    expected = np.trace(A) + np.trace(B) - 2 * np.trace(sla.sqrtm(rA @ B @ rA).real)
    assert true_wasserstein(A, B) == pytest.approx(expected, rel=1e-10)


def test_wasserstein_commuting_case():
    a, b = np.array([1.0, 4.0, 9.0]), np.array([4.0, 1.0, 16.0])
    expected = np.sum((np.sqrt(a) - np.sqrt(b)) ** 2)
    assert true_wasserstein(np.diag(a), np.diag(b)) == pytest.approx(expected)
    assert true_wasserstein(np.diag(a), np.diag(a)) == 0.0


def test_product_eigenvalues_match_nonsymmetric_solver(rng):
    A, B = random_spd(10, rng), random_spd(10, rng)
    expected = np.sort(np.linalg.eigvals(A @ B).real)
    lam, V, Vinv = product_eigenvalues(A, B, return_vectors=True)
    assert np.allclose(lam, expected, rtol=1e-10)
    assert np.allclose(A @ B @ V, V * lam, atol=1e-9)
    assert np.allclose(Vinv @ V, np.eye(10), atol=1e-10)


def test_frobenius_distance():
    assert frobenius_distance(np.eye(2), 2 * np.eye(2)) == 2.0


def test_non_psd_rejected():
    with pytest.raises(InputError):
        spd_sqrt(np.diag([1.0, -1.0]))
    with pytest.raises(InputError):
        spd_sqrt(np.ones((2, 3)))
