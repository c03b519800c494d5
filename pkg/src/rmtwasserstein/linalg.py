"""Dense linear-algebra primitives on symmetric (positive definite) matrices.

All eigendecompositions go through the symmetric solvers of numpy; products of
two covariance matrices are diagonalized through the similarity
``A^{1/2} B A^{1/2}`` so that their spectra come out real.
"""
import numpy as np

from ._config import TOL, InputError


def symmetrize(A):
    """Return ``(A + A.T) / 2`` as a float array."""
    A = np.asarray(A, dtype=float)
    return 0.5 * (A + A.T)


def _check_square(A, name="matrix"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError(f"{name} has non-finite entries")
    return A


def as_samples(X, name="X"):
    """Validate a ``p x n`` observation block (columns are observations)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise InputError(f"{name} must be a non-empty p x n matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InputError(f"{name} has non-finite entries")
    return X


def sample_covariance(X):
    """Sample covariance ``X X^T / n`` of zero-mean observations stored as columns."""
    X = as_samples(X)
    return symmetrize(X @ X.T / X.shape[1])


def eigh_sorted(A):
    """Symmetric eigendecomposition with ascending eigenvalues."""
    w, U = np.linalg.eigh(symmetrize(A))
    return w, U


def _psd_eigh(M, name):
    M = symmetrize(_check_square(M, name))
    w, U = np.linalg.eigh(M)
    scale = max(np.max(np.abs(w)), np.finfo(float).tiny) if w.size else 1.0
    if w.size and w[0] < -TOL.psd_rel * scale:
        raise InputError(f"{name} is not positive semi-definite (min eigenvalue {w[0]:.3e})")
    return np.clip(w, 0.0, None), U


def spd_function(M, func, name="M"):
    """Apply a scalar function to the (clamped) spectrum of a PSD matrix."""
    w, U = _psd_eigh(M, name)
    return symmetrize((U * func(w)) @ U.T)


def spd_sqrt(M):
    """Principal square root of a positive semi-definite matrix.

    Negative eigenvalues down to ``-1e-8 * ||M||`` are treated as rounding
    noise and clamped to zero; anything below raises :class:`InputError`.
    """
    return spd_function(M, np.sqrt)


def spd_invsqrt(M):
    w, U = _psd_eigh(M, "M")
    if w[0] <= 0:
        raise InputError("matrix is singular, no inverse square root")
    return symmetrize((U / np.sqrt(w)) @ U.T)


def spd_exp(S):
    """Matrix exponential of a symmetric matrix."""
    S = symmetrize(_check_square(S, "S"))
    w, U = np.linalg.eigh(S)
    return symmetrize((U * np.exp(w)) @ U.T)


def spd_log(M):
    """Matrix logarithm of a symmetric positive definite matrix."""
    w, U = _psd_eigh(M, "M")
    if w[0] <= 0:
        raise InputError("matrix logarithm needs a positive definite argument")
    return symmetrize((U * np.log(w)) @ U.T)


def product_eigenvalues(A, B, return_vectors=False):
    """Ascending eigenvalues of ``A @ B`` for PSD ``A`` and symmetric ``B``.

    Computed as the spectrum of ``A^{1/2} B A^{1/2}``. Values in
    ``(-1e-10 * ||AB||, 0]`` are clamped to a tiny positive floor.

    With ``return_vectors=True`` also returns ``(V, Vinv)``, the right
    eigenvectors of ``A @ B`` and their inverse; this needs ``A`` definite.
    """
    A = _check_square(A, "A")
    B = symmetrize(_check_square(B, "B"))
    if A.shape != B.shape:
        raise InputError(f"shape mismatch {A.shape} vs {B.shape}")
    wa, Ua = _psd_eigh(A, "A")
    ra = np.sqrt(wa)
    root = symmetrize((Ua * ra) @ Ua.T)
    lam, U = np.linalg.eigh(symmetrize(root @ B @ root))
    scale = max(np.max(np.abs(lam)), np.finfo(float).tiny)
    if lam[0] < -TOL.product_neg_rel * scale:
        raise InputError(f"A @ B has a negative eigenvalue {lam[0]:.3e}")
    lam = np.where(lam <= 0.0, TOL.product_floor, lam)
    if not return_vectors:
        return lam
    if wa[0] <= 0:
        raise InputError("eigenvectors of A @ B need A positive definite")
    inv_root = symmetrize((Ua / ra) @ Ua.T)
    return lam, root @ U, U.T @ inv_root


def true_wasserstein(C1, C2):
    """Squared 2-Wasserstein distance between ``N(0, C1)`` and ``N(0, C2)``.

    ``tr C1 + tr C2 - 2 tr (C1^{1/2} C2 C1^{1/2})^{1/2}``, not normalized.
    """
    C1 = _check_square(C1, "C1")
    C2 = _check_square(C2, "C2")
    if C1.shape != C2.shape:
        raise InputError(f"shape mismatch {C1.shape} vs {C2.shape}")
    lam = product_eigenvalues(C1, C2)
    value = np.trace(C1) + np.trace(C2) - 2.0 * np.sum(np.sqrt(lam))
    return max(float(value), 0.0)


def frobenius_distance(C1, C2):
    """Squared Frobenius distance ``||C1 - C2||_F^2``."""
    D = np.asarray(C1, dtype=float) - np.asarray(C2, dtype=float)
    return float(np.sum(D * D))
