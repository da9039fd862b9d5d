"""Input validation helpers for complex-valued arrays.

scikit-learn's ``check_array`` rejects complex input, so the estimators in
this package validate through these helpers instead.
"""
import numpy as np


def check_complex_array(a, *, ndim=None, name="array", allow_empty=False):
    """Return ``a`` as a complex128 ndarray after basic checks."""
    arr = np.asarray(a)
    if arr.dtype == object:
        raise TypeError(f"{name} has object dtype")
    arr = arr.astype(np.complex128, copy=False)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    if not allow_empty and arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or inf")
    return arr


def check_matrix(a, name="matrix", **kw):
    return check_complex_array(a, ndim=2, name=name, **kw)


def check_vector(a, name="vector", **kw):
    arr = np.asarray(a)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.ravel()
    return check_complex_array(arr, ndim=1, name=name, **kw)


def check_sensing_system(X, y):
    """Validate a linear model ``y = X h + v`` and return ``(X, y)``."""
    X = check_matrix(X, name="sensing matrix")
    y = check_vector(y, name="observation vector")
    if X.shape[0] != y.shape[0]:
        raise ValueError(
            f"sensing matrix has {X.shape[0]} rows but observation has {y.shape[0]} entries"
        )
    return X, y


def check_covariance(R, n, name="covariance", *, tol=1e-10):
    """Validate a Hermitian positive semidefinite ``n x n`` matrix.

    ``None`` is read as the identity.
    """
    if R is None:
        return np.eye(n, dtype=np.complex128)
    R = check_matrix(R, name=name)
    if R.shape != (n, n):
        raise ValueError(f"{name} must be {n}x{n}, got {R.shape}")
    scale = max(np.max(np.abs(R)), 1.0)
    if np.max(np.abs(R - R.conj().T)) > tol * scale:
        raise ValueError(f"{name} is not Hermitian")
    return 0.5 * (R + R.conj().T)


def check_nonnegative(v, name="vector"):
    arr = np.asarray(v, dtype=float)
    if np.any(~np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or inf")
    if np.any(arr < 0):
        raise ValueError(f"{name} has negative entries")
    return arr
