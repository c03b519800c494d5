import numpy as np
import pytest

from rmtwasserstein import InputError
from rmtwasserstein.models import (CovarianceModel, gaussian_samples, random_orthogonal,
                                   read_matrix_csv, write_matrix_csv)


def test_toeplitz_entries():
    C = CovarianceModel.toeplitz(0.5, 4).matrix
    assert C[0, 3] == 0.125 and C[2, 1] == 0.5 and np.all(np.diag(C) == 1.0)


def test_atomic_spectrum():
    model = CovarianceModel.atomic([(0.1, 2), (3.0, 3)], seed=4)
    assert model.p == 5
    assert np.allclose(np.linalg.eigvalsh(model.matrix), [0.1, 0.1, 3, 3, 3])


def test_random_orthogonal_is_orthogonal():
    Q = random_orthogonal(7, 1)
    assert np.allclose(Q.T @ Q, np.eye(7), atol=1e-12)


def test_dict_roundtrip():
    for model in (CovarianceModel.toeplitz(0.3, 6), CovarianceModel.atomic([(1, 2), (2, 2)], 3),
                  CovarianceModel.from_matrix(np.diag([1.0, 2.0]))):
        again = CovarianceModel.from_dict(model.to_dict())
        assert np.array_equal(again.matrix, model.matrix)


def test_samples_deterministic_and_have_right_covariance():
    model = CovarianceModel.toeplitz(0.4, 3)
    X = gaussian_samples(model, 200000, 5)
    assert np.array_equal(X, gaussian_samples(model, 200000, 5))
    assert np.allclose(X @ X.T / X.shape[1], model.matrix, atol=0.02)


def test_bad_models():
    with pytest.raises(InputError):
        CovarianceModel.toeplitz(1.5, 3)
    with pytest.raises(InputError):
        CovarianceModel.from_dict({"kind": "wishart"})
    with pytest.raises(InputError):
        CovarianceModel.from_dict({"kind": "toeplitz", "r": 0.2})


def test_csv_roundtrip_is_exact(tmp_path, rng):
    A = rng.standard_normal((3, 7))
    write_matrix_csv(tmp_path / "a.csv", A)
    assert np.array_equal(read_matrix_csv(tmp_path / "a.csv"), A)


def test_ragged_csv_rejected(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("1,2,3\n4,5\n")
    with pytest.raises(InputError, match="row 2"):
        read_matrix_csv(path)
    path.write_text("1,x\n")
    with pytest.raises(InputError):
        read_matrix_csv(path)
