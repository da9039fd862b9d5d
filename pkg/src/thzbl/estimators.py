"""Baseline channel estimators: LS, linear MMSE, OMP and FOCUSS.

Each algorithm is available as a plain function and as a scikit-learn
style estimator whose ``fit(X, y)`` takes the (complex) sensing matrix as
``X`` and the stacked observation as ``y``.
"""
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._linalg import NotPositiveDefiniteError, cho_factor_psd, hermitian, solve_psd
from ._validation import check_covariance, check_matrix, check_sensing_system


class UnderdeterminedError(ValueError):
    """The sensing matrix does not have full column rank."""


@dataclass
class EstimatorOutput:
    h_hat: np.ndarray
    method: str
    n_iter: int = 1
    residual_norm: float = np.nan
    support: list = field(default_factory=list)


def ls_estimate(y, Phi):
    """Least-squares estimate ``(Phi^H Phi)^{-1} Phi^H y``.

    Raises
    ------
    UnderdeterminedError
        If ``Phi`` has fewer rows than columns or is rank deficient.
    """
    Phi, y = check_sensing_system(Phi, y)
    m, n = Phi.shape
    if m < n:
        raise UnderdeterminedError(f"LS needs at least as many rows as unknowns ({m} < {n})")
    h, _, rank, _ = np.linalg.lstsq(Phi, y, rcond=None)
    if rank < n:
        raise UnderdeterminedError(f"sensing matrix has rank {rank} < {n}")
    return h


def mmse_estimate(y, Phi, R_h, R_v, *, return_cov=False):
    """Linear MMSE estimate ``(R_h^{-1} + Phi^H R_v^{-1} Phi)^{-1} Phi^H R_v^{-1} y``.

    Evaluated in the equivalent data-space form
    ``R_h Phi^H (Phi R_h Phi^H + R_v)^{-1} y``, which needs only an
    ``m x m`` solve.
    """
    Phi, y = check_sensing_system(Phi, y)
    m, n = Phi.shape
    R_h = check_covariance(R_h, n, "R_h")
    R_v = check_covariance(R_v, m, "R_v")
    cho_factor_psd(R_h, name="R_h")
    cho_factor_psd(R_v, name="R_v")
    PR = Phi @ R_h
    C = hermitian(PR @ Phi.conj().T + R_v)
    h = PR.conj().T @ solve_psd(C, y, name="observation covariance")
    if not return_cov:
        return h
    cov = hermitian(R_h - PR.conj().T @ solve_psd(C, PR, name="observation covariance"))
    return h, cov


def omp_estimate(y, A, *, tol=0.0, max_atoms=None):
    """Orthogonal matching pursuit.

    Atoms are chosen by largest normalised correlation with the residual;
    coefficients are refitted by least squares on the support after every
    selection. Stops when the residual norm is at most ``tol`` or
    ``max_atoms`` atoms have been chosen.

    Returns
    -------
    EstimatorOutput
        ``residual_norm`` holds the final residual; the per-iteration
        history is available through ``support``.
    """
    A, y = check_sensing_system(A, y)
    m, n = A.shape
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0):
        raise ValueError("dictionary has zero columns")
    max_atoms = min(m, n) if max_atoms is None else min(int(max_atoms), n)
    support = []
    x = np.zeros(n, dtype=np.complex128)
    r = y.copy()
    coef = np.zeros(0, dtype=np.complex128)
    res = float(np.linalg.norm(r))
    available = np.ones(n, dtype=bool)
    while res > tol and len(support) < max_atoms:
        corr = np.abs(A.conj().T @ r) / norms
        corr[~available] = -1.0
        j = int(np.argmax(corr))
        support.append(j)
        available[j] = False
        coef = np.linalg.lstsq(A[:, support], y, rcond=None)[0]
        r = y - A[:, support] @ coef
        res = float(np.linalg.norm(r))
    x[support] = coef
    return EstimatorOutput(h_hat=x, method="OMP", n_iter=len(support), residual_norm=res,
                           support=support)


def focuss_objective(y, A, x, lambda_reg, p_norm):
    return float(np.linalg.norm(y - A @ x) ** 2 + lambda_reg * np.sum(np.abs(x) ** p_norm))


def focuss_estimate(y, A, lambda_reg, p_norm=1.0, max_iter=50, tol=1e-6, *, return_history=False):
    """Regularised FOCUSS (iteratively reweighted least squares towards l_p).

    Each step sets ``W = diag(|x|^(1 - p/2))`` and solves
    ``x = W (A W)^H (A W (A W)^H + c I)^{-1} y`` with ``c = lambda p / 2``,
    a majorise-minimise step on ``||y - A x||^2 + lambda ||x||_p^p``. The
    first step uses ``W = I``.
    """
    A, y = check_sensing_system(A, y)
    if lambda_reg <= 0:
        raise ValueError("lambda_reg must be positive")
    if not 0 < p_norm <= 1:
        raise ValueError("p_norm must lie in (0, 1]")
    m, n = A.shape
    c = lambda_reg * p_norm / 2
    w = np.ones(n)
    x = np.zeros(n, dtype=np.complex128)
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        AW = A * w
        C = hermitian(AW @ AW.conj().T + c * np.eye(m))
        x_new = w * (AW.conj().T @ solve_psd(C, y))
        history.append(focuss_objective(y, A, x_new, lambda_reg, p_norm))
        norm_new = np.linalg.norm(x_new)
        change = np.linalg.norm(x_new - x) / norm_new if norm_new > 0 else 0.0
        x = x_new
        if change < tol:
            break
        w = np.abs(x) ** (1 - p_norm / 2)
    out = EstimatorOutput(h_hat=x, method="FOCUSS", n_iter=it,
                          residual_norm=float(np.linalg.norm(y - A @ x)))
    return (out, history) if return_history else out


class _LinearModelMixin:
    def predict(self, X):
        """Noiseless model output ``X @ coef_``."""
        check_is_fitted(self, "coef_")
        return check_matrix(X, "X") @ self.coef_


class LeastSquaresEstimator(_LinearModelMixin, BaseEstimator):
    """Zero-forcing channel estimator for over-determined sensing.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
        Estimated vectorised channel.
    """

    def fit(self, X, y):
        self.coef_ = ls_estimate(y, X)
        self.n_features_in_ = self.coef_.shape[0]
        return self


class LinearMMSEEstimator(_LinearModelMixin, BaseEstimator):
    """Linear MMSE estimator with a known prior and noise covariance.

    Parameters
    ----------
    prior_cov : ndarray of shape (n_features, n_features)
        Channel covariance ``R_h``.
    noise_cov : ndarray of shape (n_samples, n_samples), default=None
        Noise covariance; identity when ``None``.
    """

    def __init__(self, prior_cov=None, noise_cov=None):
        self.prior_cov = prior_cov
        self.noise_cov = noise_cov

    def fit(self, X, y):
        if self.prior_cov is None:
            raise ValueError("prior_cov is required")
        self.coef_, self.posterior_cov_ = mmse_estimate(y, X, self.prior_cov, self.noise_cov,
                                                        return_cov=True)
        self.n_features_in_ = self.coef_.shape[0]
        return self


class OrthogonalMatchingPursuit(_LinearModelMixin, BaseEstimator):
    """OMP with a noise-scaled residual stop.

    Parameters
    ----------
    eps_o : float, default=1.0
        Iteration stops once ``||r|| <= eps_o * sqrt(trace(noise_cov))``.
    noise_cov : ndarray, default=None
        Noise covariance used for the stopping threshold. ``None`` gives a
        zero threshold, so only ``max_atoms`` stops the loop.
    max_atoms : int, default=None
        Upper bound on the support size; defaults to the number of rows.
    """

    def __init__(self, eps_o=1.0, noise_cov=None, max_atoms=None):
        self.eps_o = eps_o
        self.noise_cov = noise_cov
        self.max_atoms = max_atoms

    def fit(self, X, y):
        X, y = check_sensing_system(X, y)
        tol = 0.0
        if self.noise_cov is not None:
            R = check_covariance(self.noise_cov, X.shape[0], "noise_cov")
            tol = self.eps_o * np.sqrt(np.real(np.trace(R)))
        out = omp_estimate(y, X, tol=tol, max_atoms=self.max_atoms)
        self.coef_ = out.h_hat
        self.support_ = np.array(out.support, dtype=int)
        self.n_iter_ = out.n_iter
        self.residual_norm_ = out.residual_norm
        self.n_features_in_ = X.shape[1]
        return self


class FOCUSS(_LinearModelMixin, BaseEstimator):
    """Regularised FOCUSS sparse estimator.

    Parameters
    ----------
    lambda_reg : float, default=None
        Regularisation weight. ``None`` uses ``trace(noise_cov) / n_samples``
        (one when ``noise_cov`` is also ``None``).
    p_norm : float, default=1.0
    max_iter : int, default=50
    tol : float, default=1e-6
        Relative change of the iterate that ends the loop.
    noise_cov : ndarray, default=None
    """

    def __init__(self, lambda_reg=None, p_norm=1.0, max_iter=50, tol=1e-6, noise_cov=None):
        self.lambda_reg = lambda_reg
        self.p_norm = p_norm
        self.max_iter = max_iter
        self.tol = tol
        self.noise_cov = noise_cov

    def fit(self, X, y):
        X, y = check_sensing_system(X, y)
        lam = self.lambda_reg
        if lam is None:
            R = check_covariance(self.noise_cov, X.shape[0], "noise_cov")
            lam = float(np.real(np.trace(R))) / X.shape[0]
        out, hist = focuss_estimate(y, X, lam, self.p_norm, self.max_iter, self.tol,
                                    return_history=True)
        self.coef_ = out.h_hat
        self.n_iter_ = out.n_iter
        self.objective_path_ = np.array(hist)
        self.lambda_ = lam
        self.n_features_in_ = X.shape[1]
        return self


def sample_channel_covariance(samples, loading=1e-6):
    """Sample covariance of vectorised channels with relative diagonal loading.

    ``samples`` has shape ``(n_samples, n_features)``.
    """
    S = np.asarray(samples, dtype=np.complex128)
    if S.ndim != 2 or S.shape[0] < 1:
        raise ValueError("samples must be a nonempty 2-D array")
    R = S.T @ S.conj() / S.shape[0]
    n = R.shape[0]
    load = loading * max(np.real(np.trace(R)) / n, np.finfo(float).tiny)
    return hermitian(R) + load * np.eye(n)


__all__ = [
    "EstimatorOutput", "FOCUSS", "LeastSquaresEstimator", "LinearMMSEEstimator",
    "NotPositiveDefiniteError", "OrthogonalMatchingPursuit", "UnderdeterminedError",
    "focuss_estimate", "focuss_objective", "ls_estimate", "mmse_estimate", "omp_estimate",
    "sample_channel_covariance",
]
