"""Data-aided Bayesian learning: joint channel estimation and data detection.

The pilot model is concatenated with the data model (data rows first).
The data rows depend on the current hard symbol decisions, so each EM
sweep is followed by a detection step using a posterior-regularised ZF
detector.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._linalg import block_diag, hermitian, psd_sqrt, solve_psd, unvec, whitener
from ._validation import check_covariance, check_matrix
from .modulation import get_constellation
from .pabl import _whitened_system, bcrlb_pa, estep, floor_gamma, run_em


@dataclass
class ConcatenatedModel:
    y: np.ndarray
    Psi_t: np.ndarray
    R_v: np.ndarray
    n_data_rows: int


@dataclass
class DataEstimate:
    soft: np.ndarray
    symbols: np.ndarray
    indices: np.ndarray


@dataclass
class DablReport:
    h_b: np.ndarray
    gamma: np.ndarray
    n_iter: int
    converged: bool
    sigma_diag: np.ndarray
    data: DataEstimate
    delta_history: list = field(default_factory=list)


def _check_detector_inputs(Y, H):
    H = check_matrix(H, "H_eq")
    Y = check_matrix(Y, "Y_d", allow_empty=True)
    if Y.shape[0] != H.shape[0]:
        raise ValueError(f"Y_d has {Y.shape[0]} rows, H_eq has {H.shape[0]}")
    return Y, H


def zf_detect(Y, H):
    """``(H^H H)^{-1} H^H Y``; raises if ``H`` lacks full column rank."""
    Y, H = _check_detector_inputs(Y, H)
    if np.linalg.matrix_rank(H) < H.shape[1]:
        raise np.linalg.LinAlgError("H_eq is rank deficient")
    return solve_psd(H.conj().T @ H, H.conj().T @ Y, name="H^H H")


def mmse_detect(Y, H, R_d):
    """``(H^H H + R_d)^{-1} H^H Y``."""
    Y, H = _check_detector_inputs(Y, H)
    R_d = check_covariance(R_d, H.shape[1], "R_d")
    return solve_psd(H.conj().T @ H + R_d, H.conj().T @ Y, name="H^H H + R_d")


def data_equivalent_sensing(F, W, pair):
    """``(F^T kron W^H) Psi`` of the shared data RF pair, ``(N_RF^2, G_R G_T)``."""
    return np.kron(F.T @ pair.A_T.conj(), W.conj().T @ pair.A_R)


def data_rows(X, Phi_tilde):
    """Data sensing rows ``(X^T kron I) Phi_tilde`` ordered block by block."""
    n_rf, n_d = X.shape
    n = Phi_tilde.shape[1]
    return (X.T @ Phi_tilde.reshape(n_rf, n_rf * n)).reshape(n_d * n_rf, n)


def equivalent_channel(h_b, Phi_tilde, n_rf):
    """``W^H H F = unvec(Phi_tilde h_b)``."""
    return unvec(Phi_tilde @ h_b, n_rf, n_rf)


def build_concatenated(X_hat, y_p, Psi_t_p, R_vp, Y_d, Phi_tilde, R_d):
    """Concatenated data-then-pilot model for one subcarrier."""
    X_hat = np.asarray(X_hat)
    Y_d = np.asarray(Y_d)
    if X_hat.shape != Y_d.shape:
        raise ValueError("symbol and output matrices differ in shape")
    if Phi_tilde.shape[1] != Psi_t_p.shape[1]:
        raise ValueError("data and pilot sensing have different widths")
    n_d = X_hat.shape[1]
    Psi_d = data_rows(X_hat, Phi_tilde)
    y = np.concatenate([Y_d.T.reshape(-1), y_p])
    R_v = block_diag([block_diag([R_d] * n_d), R_vp]) if n_d else np.asarray(R_vp)
    return ConcatenatedModel(y=y, Psi_t=np.vstack([Psi_d, Psi_t_p]), R_v=R_v,
                             n_data_rows=Psi_d.shape[0])


def xi_from_equivalent_cov(S_eq, n_rf):
    """Block-trace rule on ``Sigma_eq``: entry ``(a, b)`` is the trace of block ``(b, a)``."""
    S4 = np.asarray(S_eq).reshape(n_rf, n_rf, n_rf, n_rf)
    return hermitian(np.einsum("biai->ab", S4))


def xi_matrix(Sigma, Phi_tilde, n_rf):
    """Posterior correction ``E{H_eq^H H_eq} - H_eq_hat^H H_eq_hat``.

    ``Sigma_eq = Phi_tilde Sigma Phi_tilde^H`` is split into ``n_rf x n_rf``
    blocks and reduced by :func:`xi_from_equivalent_cov`.
    """
    return xi_from_equivalent_cov(Phi_tilde @ Sigma @ Phi_tilde.conj().T, n_rf)


def robust_zf_detect(Y, H_hat, Xi, constellation="qpsk"):
    """ZF on the augmented system ``[H_hat; Xi^{1/2}] X = [Y; 0]``, then demodulate."""
    Y, H_hat = _check_detector_inputs(Y, H_hat)
    n = H_hat.shape[1]
    Xi = check_covariance(Xi, n, "Xi")
    const = get_constellation(constellation)
    H_cal = np.vstack([H_hat, psd_sqrt(Xi)])
    Y_bar = np.vstack([Y, np.zeros((n, Y.shape[1]), dtype=np.complex128)])
    soft = solve_psd(H_cal.conj().T @ H_cal, H_cal.conj().T @ Y_bar, name="augmented normal matrix")
    idx = const.demodulate_indices(soft)
    return DataEstimate(soft=soft, symbols=const.points[idx], indices=idx)


def _whiten_blocks(L, Phi_tilde, n_rf):
    n = Phi_tilde.shape[1]
    P = Phi_tilde.reshape(n_rf, n_rf, n)
    out = np.stack([sla.solve_triangular(L, P[j], lower=True, check_finite=False) for j in range(n_rf)])
    return out.reshape(n_rf * n_rf, n)


def dabl_estimate(y_p, Psi_t_p, R_vp, Y_d, Phi_tilde, R_d, *, constellation="qpsk", eps=1.0,
                  j_max=20, h_b_init=None, X_init=None, pabl_eps=1.0, pabl_k_max=20):
    """Data-aided Bayesian learning for one subcarrier.

    Parameters
    ----------
    y_p, Psi_t_p, R_vp
        Pilot outputs, pilot equivalent sensing matrix and pilot noise
        covariance.
    Y_d : ndarray of shape (N_RF, N_d)
        Received data outputs.
    Phi_tilde : ndarray of shape (N_RF**2, G_R G_T)
        ``(F^T kron W^H) Psi`` of the shared data RF pair.
    R_d : ndarray of shape (N_RF, N_RF)
        Combined noise covariance of one data block.
    h_b_init : ndarray, optional
        Channel used for the initial MMSE detection; by default a pilot-only
        run is performed.
    X_init : ndarray, optional
        Initial symbol decisions, overriding the MMSE initialisation.

    Returns
    -------
    DablReport
    """
    const = get_constellation(constellation)
    A_p, yp_w, _ = _whitened_system(y_p, Psi_t_p, R_vp)
    n = A_p.shape[1]
    Y_d = np.asarray(Y_d, dtype=np.complex128)
    n_rf, n_d = Y_d.shape
    if Phi_tilde.shape != (n_rf * n_rf, n):
        raise ValueError(f"Phi_tilde must be {(n_rf * n_rf, n)}, got {Phi_tilde.shape}")
    if j_max < 1:
        raise ValueError("j_max must be >= 1")
    R_d = check_covariance(R_d, n_rf, "R_d")
    if n_d == 0:
        X = np.zeros((n_rf, 0), dtype=np.complex128)
    elif X_init is None:
        if h_b_init is None:
            h_b_init = run_em(A_p, yp_w, eps=pabl_eps, k_max=pabl_k_max).h_b
        H0 = equivalent_channel(h_b_init, Phi_tilde, n_rf)
        X = const.demodulate(mmse_detect(Y_d, H0, R_d))
    else:
        X = np.asarray(X_init, dtype=np.complex128)
    L_d = whitener(R_d)
    Phi_w = _whiten_blocks(L_d, Phi_tilde, n_rf)
    yd_w = sla.solve_triangular(L_d, Y_d, lower=True, check_finite=False).T.reshape(-1)
    y = np.concatenate([yd_w, yp_w])

    gamma = np.ones(n)
    deltas = []
    data = DataEstimate(X, X, np.zeros(X.shape, dtype=int))
    j = 0
    while True:
        j += 1
        A = np.vstack([data_rows(X, Phi_w), A_p])
        e = estep(A, y, gamma)
        new = floor_gamma(e.sigma_diag + np.abs(e.mu) ** 2)
        if n_d:
            H_hat = equivalent_channel(e.mu, Phi_tilde, n_rf)
            Xi = xi_from_equivalent_cov(e.project(Phi_tilde), n_rf)
            data = robust_zf_detect(Y_d, H_hat, Xi, const)
            X = data.symbols
        delta = float(np.linalg.norm(new - gamma))
        deltas.append(delta)
        gamma = new
        if delta <= eps or j >= j_max:
            break
    return DablReport(h_b=e.mu, gamma=gamma, n_iter=j, converged=deltas[-1] <= eps,
                      sigma_diag=e.sigma_diag, data=data, delta_history=deltas)


def bcrlb_da(Psi_t, R_v, gamma, Psi=None):
    """Bayesian CRLB of the concatenated model.

    Identical in form to the pilot bound with the stacked sensing matrix and
    ``R_v``; returns ``(Tr J^{-1}, Tr Psi J^{-1} Psi^H)``.
    """
    return bcrlb_pa(Psi_t, R_v, gamma, Psi)


class DataAidedBL(BaseEstimator):
    """Joint sparse channel estimation and data detection.

    ``fit(X, y, Y_d=..., Phi_tilde=..., R_d=...)`` takes the pilot
    equivalent sensing matrix as ``X`` and the stacked pilot outputs as
    ``y``.

    Parameters
    ----------
    eps : float, default=1.0
    j_max : int, default=20
    noise_cov : ndarray, default=None
        Pilot noise covariance.
    constellation : str, default="qpsk"

    Attributes
    ----------
    coef_ : ndarray
        Posterior mean of the beamspace channel.
    symbols_ : ndarray of shape (N_RF, N_d)
        Final hard data decisions.
    gamma_, n_iter_, converged_
    """

    def __init__(self, eps=1.0, j_max=20, noise_cov=None, constellation="qpsk"):
        self.eps = eps
        self.j_max = j_max
        self.noise_cov = noise_cov
        self.constellation = constellation

    def fit(self, X, y, *, Y_d, Phi_tilde, R_d):
        X = check_matrix(X, "X")
        R = check_covariance(self.noise_cov, X.shape[0], "noise_cov")
        rep = dabl_estimate(y, X, R, Y_d, Phi_tilde, R_d, constellation=self.constellation,
                            eps=self.eps, j_max=self.j_max)
        self.coef_ = rep.h_b
        self.gamma_ = rep.gamma
        self.n_iter_ = rep.n_iter
        self.converged_ = rep.converged
        self.symbols_ = rep.data.symbols
        self.soft_symbols_ = rep.data.soft
        self.n_features_in_ = rep.h_b.shape[0]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return check_matrix(X, "X") @ self.coef_
