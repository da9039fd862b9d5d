"""Pilot-aided sparse Bayesian learning.

Per-subcarrier EM over a zero-mean Gaussian prior with one variance
(hyperparameter) per beamspace coefficient, plus the Bayesian Cramer-Rao
bound of the resulting linear Gaussian model.

Internally every solve runs on the whitened model ``L^{-1} y = L^{-1} A h + w``
with ``R = L L^H``, so that ``w`` is white. Two algebraically equivalent
forms of the posterior are used: a data-space (Woodbury) form when the
model has fewer rows than unknowns, and a ``Gamma^{1/2}`` form otherwise.
Neither needs ``Gamma^{-1}``.
"""
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._linalg import NotPositiveDefiniteError, hermitian, whiten, whitener
from ._validation import check_covariance, check_matrix, check_nonnegative, check_sensing_system

GAMMA_FLOOR = 1e-8


@dataclass
class PosteriorMoments:
    mu: np.ndarray
    cov: np.ndarray

    @property
    def sigma_diag(self):
        return np.real(np.diag(self.cov)).copy()


@dataclass
class PablReport:
    """Outcome of one EM run.

    ``delta_history[j]`` is ``||gamma^(j+1) - gamma^(j)||``; ``loglik_history``
    (when tracked) holds the marginal log-likelihood at ``gamma^(0..n_iter)``.
    """

    h_b: np.ndarray
    gamma: np.ndarray
    n_iter: int
    converged: bool
    sigma_diag: np.ndarray
    delta_history: list = field(default_factory=list)
    loglik_history: list = field(default_factory=list)


class _EStep(NamedTuple):
    mu: np.ndarray
    sigma_diag: np.ndarray
    cov: np.ndarray
    logdet: float
    quad: float
    gamma: np.ndarray
    factor: np.ndarray
    woodbury: bool

    def project(self, P):
        """``P Sigma P^H`` from the factored covariance, without forming ``Sigma``."""
        Z = self.factor @ P.conj().T
        if self.woodbury:
            return hermitian((P * self.gamma) @ P.conj().T - Z.conj().T @ Z)
        return hermitian(Z.conj().T @ Z)

    def projected_trace(self, P):
        """``Tr(P Sigma P^H)``."""
        Z = self.factor @ P.conj().T
        t = float(np.sum(np.abs(Z) ** 2))
        if self.woodbury:
            return float(np.sum(self.gamma * np.sum(np.abs(P) ** 2, axis=0))) - t
        return t


def _chol(a, what):
    try:
        return sla.cholesky(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"{what} is not positive definite") from exc


def estep(A, y, gamma, *, full=False):
    """Posterior of ``h ~ CN(0, diag(gamma))`` given white-noise data ``y = A h + w``.

    Returns the mean, the diagonal of the covariance (and the full matrix
    when ``full``), and ``log det(I + A Gamma A^H)`` and
    ``y^H (I + A Gamma A^H)^{-1} y`` for the marginal likelihood.
    """
    m, n = A.shape
    if m < n:
        AG = A * gamma
        C = AG @ A.conj().T
        C[np.diag_indices(m)] += 1.0
        L = _chol(hermitian(C), "observation covariance")
        V = sla.solve_triangular(L, AG, lower=True, check_finite=False)
        z = sla.solve_triangular(L, y, lower=True, check_finite=False)
        mu = V.conj().T @ z
        sdiag = np.maximum(gamma - np.sum(np.abs(V) ** 2, axis=0), 0.0)
        cov = None
        if full:
            cov = hermitian(np.diag(gamma).astype(np.complex128) - V.conj().T @ V)
        logdet = 2.0 * float(np.sum(np.log(np.real(np.diag(L)))))
        quad = float(np.real(np.vdot(z, z)))
        factor, woodbury = V, True
    else:
        s = np.sqrt(gamma)
        Ahy = A.conj().T @ y
        B = (A.conj().T @ A) * np.outer(s, s)
        B[np.diag_indices(n)] += 1.0
        Lb = _chol(hermitian(B), "posterior precision")
        Linv = sla.solve_triangular(Lb, np.eye(n), lower=True, check_finite=False)
        t = Linv @ (s * Ahy)
        mu = s * (Linv.conj().T @ t)
        sdiag = gamma * np.sum(np.abs(Linv) ** 2, axis=0)
        SL = Linv * s
        cov = hermitian(SL.conj().T @ SL) if full else None
        logdet = 2.0 * float(np.sum(np.log(np.real(np.diag(Lb)))))
        quad = float(np.real(np.vdot(y, y)) - np.real(np.vdot(t, t)))
        factor, woodbury = SL, False
    return _EStep(mu, sdiag, cov, logdet, quad, gamma, factor, woodbury)


def floor_gamma(gamma, rel=GAMMA_FLOOR):
    """Clamp entries below ``rel * max(gamma)`` to that floor."""
    gmax = float(np.max(gamma)) if gamma.size else 0.0
    if gmax <= 0:
        return np.full_like(gamma, np.finfo(float).tiny)
    return np.maximum(gamma, rel * gmax)


def _mstep(e):
    return e.sigma_diag + np.abs(e.mu) ** 2


def _whitened_system(y, Psi_t, R):
    Psi_t, y = check_sensing_system(Psi_t, y)
    R = check_covariance(R, Psi_t.shape[0], "noise covariance")
    L = whitener(R)
    A_w = sla.solve_triangular(L, Psi_t, lower=True, check_finite=False)
    y_w = sla.solve_triangular(L, y, lower=True, check_finite=False)
    logdet_R = 2.0 * float(np.sum(np.log(np.real(np.diag(L)))))
    return A_w, y_w, logdet_R


def _check_gamma(gamma, n):
    gamma = check_nonnegative(gamma, "gamma")
    if gamma.shape != (n,):
        raise ValueError(f"gamma must have {n} entries")
    return gamma


def posterior_moments(y, Psi_t, R, gamma):
    """Posterior mean and covariance of the beamspace channel.

    ``Sigma = (Psi_t^H R^{-1} Psi_t + Gamma^{-1})^{-1}`` and
    ``mu = Sigma Psi_t^H R^{-1} y``, evaluated without inverting ``Gamma``.
    """
    A, yw, _ = _whitened_system(y, Psi_t, R)
    gamma = _check_gamma(gamma, A.shape[1])
    e = estep(A, yw, gamma, full=True)
    return PosteriorMoments(mu=e.mu, cov=e.cov)


def update_hyperparameters(moments):
    """``gamma_i = Sigma_ii + |mu_i|^2``."""
    return moments.sigma_diag + np.abs(moments.mu) ** 2


def log_marginal_likelihood(y, Psi_t, R, gamma):
    """``-log det R_y - y^H R_y^{-1} y - m log(pi)`` with ``R_y = R + Psi_t Gamma Psi_t^H``.

    Evaluated directly from ``R_y``; used as an independent check of the EM
    bookkeeping.
    """
    Psi_t, y = check_sensing_system(Psi_t, y)
    m = Psi_t.shape[0]
    R = check_covariance(R, m, "noise covariance")
    Ry = hermitian(R + (Psi_t * gamma) @ Psi_t.conj().T)
    L = _chol(Ry, "observation covariance")
    z = sla.solve_triangular(L, y, lower=True, check_finite=False)
    return float(-2.0 * np.sum(np.log(np.real(np.diag(L)))) - np.real(np.vdot(z, z)) - m * np.log(np.pi))


def run_em(A, y, *, eps=1.0, k_max=20, gamma0=None, logdet_R=0.0, track_likelihood=False):
    """EM on a whitened model; shared by the pilot-only and data-aided paths.

    At least one E/M sweep is always performed. The returned mean is that
    of the last E-step.
    """
    m, n = A.shape
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    gamma = np.ones(n) if gamma0 is None else floor_gamma(np.asarray(gamma0, dtype=float))
    deltas, lls = [], []
    const = -logdet_R - m * np.log(np.pi)
    j = 0
    while True:
        j += 1
        e = estep(A, y, gamma)
        if track_likelihood:
            lls.append(const - e.logdet - e.quad)
        new = floor_gamma(_mstep(e))
        delta = float(np.linalg.norm(new - gamma))
        deltas.append(delta)
        gamma = new
        if delta <= eps or j >= k_max:
            break
    if track_likelihood:
        e_last = estep(A, y, gamma)
        lls.append(const - e_last.logdet - e_last.quad)
    return PablReport(h_b=e.mu, gamma=gamma, n_iter=j, converged=deltas[-1] <= eps,
                      sigma_diag=e.sigma_diag, delta_history=deltas, loglik_history=lls)


def pabl_estimate(y, Psi_t, R, eps=1.0, k_max=20, *, gamma0=None, track_likelihood=False):
    """Pilot-aided Bayesian learning for one subcarrier.

    Parameters
    ----------
    y : ndarray of shape (m,)
        Stacked pilot outputs.
    Psi_t : ndarray of shape (m, n)
        Equivalent sensing matrix in the beamspace.
    R : ndarray of shape (m, m)
        Noise covariance.
    eps : float, default=1.0
        Stop once ``||gamma^(j) - gamma^(j-1)|| <= eps``.
    k_max : int, default=20
        Iteration cap.

    Returns
    -------
    PablReport
    """
    A, yw, logdet_R = _whitened_system(y, Psi_t, R)
    return run_em(A, yw, eps=eps, k_max=k_max, gamma0=gamma0, logdet_R=logdet_R,
                  track_likelihood=track_likelihood)


def _check_positive_gamma(gamma):
    if np.any(gamma <= 0):
        raise NotPositiveDefiniteError("Bayesian FIM is singular: gamma must be > 0")


def bayesian_fim_inverse(A, gamma):
    """``(A^H A + Gamma^{-1})^{-1}`` for whitened ``A`` and ``gamma > 0``."""
    _check_positive_gamma(gamma)
    return estep(A, np.zeros(A.shape[0], dtype=np.complex128), gamma, full=True).cov


def bcrlb_from_whitened(A, gamma, Psi=None):
    """Trace bounds from a whitened sensing matrix; see :func:`bcrlb_pa`."""
    _check_positive_gamma(gamma)
    e = estep(A, np.zeros(A.shape[0], dtype=np.complex128), gamma)
    b = float(np.sum(e.sigma_diag))
    return b, (None if Psi is None else e.projected_trace(Psi))


def bcrlb_pa(Psi_t, R, gamma, Psi=None):
    """Bayesian CRLB of the pilot model.

    Returns ``(Tr J^{-1}, Tr Psi J^{-1} Psi^H)`` with
    ``J = Psi_t^H R^{-1} Psi_t + Gamma^{-1}``; the second entry is ``None``
    when ``Psi`` is not given.
    """
    Psi_t = check_matrix(Psi_t, "Psi_t")
    R = check_covariance(R, Psi_t.shape[0], "noise covariance")
    gamma = _check_gamma(gamma, Psi_t.shape[1])
    (A,) = whiten(R, Psi_t)
    return bcrlb_from_whitened(A, gamma, None if Psi is None else check_matrix(Psi, "Psi"))


def genie_hyperparameters(h_b_true, floor=GAMMA_FLOOR):
    """``|h_b|^2`` clamped at ``floor * max``."""
    return floor_gamma(np.abs(np.asarray(h_b_true)) ** 2, floor)


def genie_estimate(y, Psi_t, R, gamma_true):
    """Posterior mean under fixed (true) hyperparameters: a single solve."""
    A, yw, _ = _whitened_system(y, Psi_t, R)
    gamma = _check_gamma(gamma_true, A.shape[1])
    return estep(A, yw, gamma).mu


class PilotAidedBL(BaseEstimator):
    """Sparse Bayesian learning estimator of a beamspace channel.

    Parameters
    ----------
    eps : float, default=1.0
        Threshold on ``||gamma^(j) - gamma^(j-1)||_2``.
    k_max : int, default=20
        Maximum number of EM iterations.
    noise_cov : ndarray, default=None
        Noise covariance of the observation; identity when ``None``.
    track_likelihood : bool, default=False
        Record the marginal log-likelihood at every iterate.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
        Posterior mean of the beamspace channel.
    gamma_ : ndarray of shape (n_features,)
    sigma_diag_ : ndarray of shape (n_features,)
    n_iter_ : int
    converged_ : bool
    loglik_path_ : ndarray
    """

    def __init__(self, eps=1.0, k_max=20, noise_cov=None, track_likelihood=False):
        self.eps = eps
        self.k_max = k_max
        self.noise_cov = noise_cov
        self.track_likelihood = track_likelihood

    def fit(self, X, y):
        rep = pabl_estimate(y, X, self.noise_cov, self.eps, self.k_max,
                            track_likelihood=self.track_likelihood)
        self.coef_ = rep.h_b
        self.gamma_ = rep.gamma
        self.sigma_diag_ = rep.sigma_diag
        self.n_iter_ = rep.n_iter
        self.converged_ = rep.converged
        self.loglik_path_ = np.array(rep.loglik_history)
        self.n_features_in_ = rep.h_b.shape[0]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return check_matrix(X, "X") @ self.coef_
