"""Small dense linear-algebra utilities shared by the estimators."""
import numpy as np
import scipy.linalg as sla

JITTER_COND = 1e12
JITTER_REL = 1e-12


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    pass


def hermitian(a):
    return 0.5 * (a + a.conj().T)


def _jitter(a):
    n = a.shape[0]
    return a + (JITTER_REL * np.real(np.trace(a)) / n) * np.eye(n)


def cho_factor_psd(a, *, name="matrix"):
    """Cholesky factor of a Hermitian PD matrix.

    When the factorization fails or the matrix is worse conditioned than
    ``JITTER_COND`` a relative jitter of ``1e-12 * trace / n`` is added once.
    """
    a = hermitian(np.asarray(a, dtype=np.complex128))
    try:
        c = sla.cho_factor(a, lower=True, check_finite=False)
        d = np.abs(np.diag(c[0])) ** 2
        if d.min() > 0 and d.max() / d.min() <= JITTER_COND:
            return c
    except np.linalg.LinAlgError:
        pass
    try:
        return sla.cho_factor(_jitter(a), lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"{name} is not positive definite") from exc


def solve_psd(a, b, *, name="matrix"):
    """Solve ``a x = b`` for Hermitian PD ``a`` without forming an inverse."""
    return sla.cho_solve(cho_factor_psd(a, name=name), b, check_finite=False)


def whitener(R):
    """Lower Cholesky factor ``L`` with ``R = L L^H`` (no jitter)."""
    try:
        return np.linalg.cholesky(hermitian(np.asarray(R, dtype=np.complex128)))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("noise covariance is not positive definite") from exc


def whiten(R, *arrays):
    """Apply ``L^{-1}`` to each array, where ``R = L L^H``."""
    L = whitener(R)
    return tuple(sla.solve_triangular(L, a, lower=True, check_finite=False) for a in arrays)


def psd_sqrt(a):
    """Principal Hermitian square root with negative eigenvalues clamped to 0."""
    w, v = np.linalg.eigh(hermitian(np.asarray(a, dtype=np.complex128)))
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def vec(a):
    """Column-major vectorisation."""
    return np.asarray(a).reshape(-1, order="F")


def unvec(v, n_rows, n_cols):
    v = np.asarray(v)
    if v.size != n_rows * n_cols:
        raise ValueError(f"cannot reshape length {v.size} into {n_rows}x{n_cols}")
    return v.reshape(n_rows, n_cols, order="F")


def block_diag(blocks):
    return sla.block_diag(*blocks) if len(blocks) else np.zeros((0, 0), dtype=np.complex128)
