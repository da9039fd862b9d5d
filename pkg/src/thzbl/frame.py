"""SC-FDE training and data frames for hybrid MIMO.

Zero-padded pilot blocks, quantized phase-shifter precoders and combiners,
time- and frequency-domain measurement synthesis, and the stacked
per-subcarrier sensing model. The DFT is unnormalised in the forward
direction, ``X[k] = sum_l x[l] exp(-2j pi k l / K)``.
"""
from dataclasses import dataclass

import numpy as np

from ._linalg import block_diag
from .modulation import PSK8, get_constellation


@dataclass(frozen=True)
class SystemConfig:
    """Array, RF-chain, frame and noise dimensions of a link."""

    n_t: int = 16
    n_r: int = 16
    n_rf: int = 4
    n_p: int = 5
    n_taps: int = 4
    n_blocks: int = 20
    n_data: int = 0
    n_q: int = 4
    sigma_v_sq: float = 0.1
    sigma_d_sq: float = 0.1
    n_s: int = None
    constellation: str = "qpsk"

    def __post_init__(self):
        if self.n_s is None:
            object.__setattr__(self, "n_s", self.n_rf)
        if not 1 <= self.n_s <= self.n_rf <= min(self.n_t, self.n_r):
            raise ValueError("need 1 <= n_s <= n_rf <= min(n_t, n_r)")
        if self.n_p < 1 or self.n_taps < 1:
            raise ValueError("n_p and n_taps must be >= 1")
        if self.n_blocks < 1 or self.n_q < 1 or self.n_data < 0:
            raise ValueError("need n_blocks >= 1, n_q >= 1, n_data >= 0")
        if self.sigma_v_sq < 0 or self.sigma_d_sq < 0:
            raise ValueError("noise variances must be >= 0")
        get_constellation(self.constellation)

    @property
    def n_subcarriers(self):
        return self.n_p + self.n_taps - 1

    @property
    def data_constellation(self):
        return get_constellation(self.constellation)


@dataclass
class RfFrame:
    """Training frame: per-block RF matrices and pilot sequences.

    Shapes are ``F (M, N_T, N_RF)``, ``W (M, N_R, N_RF)``, time-domain
    ``pilots (M, N_p, N_RF)`` and frequency-domain ``U (M, K, N_RF)``.
    """

    F: np.ndarray
    W: np.ndarray
    pilots: np.ndarray
    U: np.ndarray

    @property
    def n_blocks(self):
        return self.F.shape[0]


@dataclass
class DataFrame:
    """Data phase sharing one RF pair.

    ``X (K, N_RF, N_d)`` frequency-domain symbols, ``indices`` their
    constellation indices.
    """

    F: np.ndarray
    W: np.ndarray
    X: np.ndarray
    indices: np.ndarray


@dataclass
class MeasurementSet:
    """Stacked per-subcarrier measurements.

    ``y_p (K, M N_RF)``, ``Phi_p (K, M N_RF, N_T N_R)``, ``R_vp`` shared by
    all subcarriers. Data fields are ``None`` when no data phase exists.
    """

    y_p: np.ndarray
    Phi_p: np.ndarray
    R_vp: np.ndarray
    Y_d: np.ndarray = None
    R_d: np.ndarray = None
    R_vd: np.ndarray = None

    @property
    def R_v(self):
        if self.R_vd is None:
            return self.R_vp
        return block_diag([self.R_vd, self.R_vp])


def complex_normal(rng, shape, variance=1.0):
    """Draws from ``CN(0, variance)``: each real part has ``variance / 2``."""
    z = rng.standard_normal(tuple(np.atleast_1d(shape)) + (2,))
    return np.sqrt(variance / 2) * (z[..., 0] + 1j * z[..., 1])


def generate_rf_codebook(rng, n_rows, n_rf, n_q):
    """Phase-shifter matrix with entries ``exp(1j phi) / sqrt(n_rows)``, ``phi`` on a ``2**n_q`` lattice."""
    if n_q < 1:
        raise ValueError("n_q must be >= 1")
    levels = 2 ** n_q
    phi = 2 * np.pi * rng.integers(0, levels, size=(n_rows, n_rf)) / levels
    return np.exp(1j * phi) / np.sqrt(n_rows)


def zero_pad(seq, length):
    seq = np.asarray(seq)
    if seq.shape[0] > length:
        raise ValueError(f"sequence of length {seq.shape[0]} exceeds {length}")
    out = np.zeros((length,) + seq.shape[1:], dtype=np.complex128)
    out[: seq.shape[0]] = seq
    return out


def make_pilot_frame(config, rng, *, pilot_constellation=PSK8):
    """Fresh RF pair and i.i.d. unit-power pilots for every training block."""
    M, K = config.n_blocks, config.n_subcarriers
    F = np.stack([generate_rf_codebook(rng, config.n_t, config.n_rf, config.n_q) for _ in range(M)])
    W = np.stack([generate_rf_codebook(rng, config.n_r, config.n_rf, config.n_q) for _ in range(M)])
    pilots = pilot_constellation.modulate(
        pilot_constellation.sample_indices(rng, (M, config.n_p, config.n_rf)))
    U = np.fft.fft(zero_pad(np.moveaxis(pilots, 1, 0), K), axis=0)
    return RfFrame(F=F, W=W, pilots=pilots, U=np.moveaxis(U, 0, 1))


def make_data_frame(config, rng):
    """One shared RF pair and random data symbols on every subcarrier."""
    K = config.n_subcarriers
    const = config.data_constellation
    F = generate_rf_codebook(rng, config.n_t, config.n_rf, config.n_q)
    W = generate_rf_codebook(rng, config.n_r, config.n_rf, config.n_q)
    idx = const.sample_indices(rng, (K, config.n_rf, config.n_data))
    return DataFrame(F=F, W=W, X=const.modulate(idx), indices=idx)


def channel_taps(H):
    """Delay-domain taps ``H_q``, inverse DFT of ``H[k]`` along axis 0."""
    return np.fft.ifft(np.asarray(H), axis=0)


def synthesize_pilot_block_td(taps, pilots_zp, F, W, noise=None):
    """Combiner outputs of one zero-padded block under circular convolution.

    ``taps`` is ``(K, N_R, N_T)``, ``pilots_zp`` is ``(K, N_RF)`` and
    ``noise`` (optional) is the ``(K, N_R)`` antenna noise. Returns
    ``(K, N_RF)``.
    """
    taps = np.asarray(taps)
    pilots_zp = np.asarray(pilots_zp)
    K = taps.shape[0]
    if pilots_zp.shape[0] != K:
        raise ValueError("pilot and tap sequences must both have length K")
    if taps.shape[2] != F.shape[0] or taps.shape[1] != W.shape[0] or pilots_zp.shape[1] != F.shape[1]:
        raise ValueError("dimension mismatch between taps, RF matrices and pilots")
    x = pilots_zp @ F.T
    rx = np.zeros((K, taps.shape[1]), dtype=np.complex128)
    for q in range(K):
        for l in range(K):
            rx[q] += taps[l] @ x[(q - l) % K]
    if noise is not None:
        rx = rx + noise
    return rx @ W.conj()


def to_frequency_domain(td):
    """Unnormalised K-point DFT along the block axis."""
    return np.fft.fft(np.asarray(td), axis=0)


def synthesize_pilot_block_fd(H, U_m, F, W, noise_fd=None):
    """``y_m[k] = W^H H[k] F u_m[k] (+ W^H v[k])`` for all ``k``; returns ``(K, N_RF)``."""
    y = np.einsum("rn,krt,tj,kj->kn", W.conj(), H, F, U_m, optimize=True)
    if noise_fd is not None:
        y = y + noise_fd @ W.conj()
    return y


def build_pilot_sensing(u_k, F, W):
    """``(u^T F^T) kron W^H`` so that ``Phi vec(H) = W^H H F u``."""
    return np.kron((F @ u_k)[None, :], W.conj().T)


def combined_noise_covariance(W, variance, n_subcarriers):
    return variance * n_subcarriers * (W.conj().T @ W)


def stack_pilot_blocks(Phis, ys, Ws, sigma_v_sq, n_subcarriers):
    """Stack per-block sensing rows and outputs for one subcarrier.

    Returns ``(Phi_p, y_p, R_vp)`` with block order preserved.
    """
    if len(Phis) < 1 or len(Phis) != len(ys) or len(ys) != len(Ws):
        raise ValueError("need matching, nonempty block lists")
    R = block_diag([combined_noise_covariance(W, sigma_v_sq, n_subcarriers) for W in Ws])
    return np.vstack(Phis), np.concatenate(ys), R


def pilot_sensing_matrices(frame):
    """Stacked pilot sensing matrices for all subcarriers, ``(K, M N_RF, N_T N_R)``."""
    M, K = frame.n_blocks, frame.U.shape[1]
    return np.stack([
        np.vstack([build_pilot_sensing(frame.U[m, k], frame.F[m], frame.W[m]) for m in range(M)])
        for k in range(K)
    ])


def pilot_noise_covariance(frame, sigma_v_sq):
    K = frame.U.shape[1]
    return block_diag([combined_noise_covariance(W, sigma_v_sq, K) for W in frame.W])


def antenna_noise_fd(rng, shape, variance):
    """Frequency-domain antenna noise: DFT of i.i.d. ``CN(0, variance)`` samples."""
    return to_frequency_domain(complex_normal(rng, shape, variance))


def synthesize_pilot_measurements(H, frame, sigma_v_sq, rng=None):
    """Noisy stacked pilot outputs ``y_p[k]`` for all subcarriers, ``(K, M N_RF)``.

    Noise is drawn in the time domain for each block and transformed, so
    its per-subcarrier covariance is ``sigma_v_sq K W_m^H W_m``.
    """
    K, n_r = H.shape[0], H.shape[1]
    ys = []
    for m in range(frame.n_blocks):
        noise = None
        if rng is not None and sigma_v_sq > 0:
            noise = antenna_noise_fd(rng, (K, n_r), sigma_v_sq)
        ys.append(synthesize_pilot_block_fd(H, frame.U[m], frame.F[m], frame.W[m], noise))
    return np.concatenate(ys, axis=1)


def synthesize_data_blocks(H, X, F, W, sigma_d_sq, rng=None):
    """Data outputs ``Y_d[k] = W^H H[k] F X[k] + W^H V[k]``.

    ``X`` is ``(K, N_RF, N_d)``. Returns ``(Y_d, R_d)`` where ``R_d`` is the
    per-block combined noise covariance ``sigma_d_sq K W^H W``.
    """
    K, n_r = H.shape[0], H.shape[1]
    n_d = X.shape[2]
    Y = np.einsum("rn,krt,tj,kjd->knd", W.conj(), H, F, X, optimize=True)
    if rng is not None and sigma_d_sq > 0:
        V = np.stack([antenna_noise_fd(rng, (K, n_r), sigma_d_sq) for _ in range(n_d)], axis=2)
        Y = Y + np.einsum("rn,krd->knd", W.conj(), V)
    return Y, combined_noise_covariance(W, sigma_d_sq, K)


def data_sensing(X_k, F, W):
    """Stacked data sensing ``(F X)^T kron W^H`` of one subcarrier, ``(N_d N_RF, N_T N_R)``."""
    return np.kron((F @ X_k).T, W.conj().T)


def measure(H, config, rng, *, noise_rng=None):
    """Draw a training frame (and data phase if ``config.n_data > 0``) and synthesise outputs.

    ``rng`` drives the frame and symbols; ``noise_rng`` (defaults to ``rng``)
    drives only the noise, so that common random numbers can be used across
    noise levels.
    """
    noise_rng = rng if noise_rng is None else noise_rng
    frame = make_pilot_frame(config, rng)
    data = make_data_frame(config, rng) if config.n_data > 0 else None
    y_p = synthesize_pilot_measurements(H, frame, config.sigma_v_sq, noise_rng)
    meas = MeasurementSet(
        y_p=y_p,
        Phi_p=pilot_sensing_matrices(frame),
        R_vp=pilot_noise_covariance(frame, config.sigma_v_sq),
    )
    if data is not None:
        Y_d, R_d = synthesize_data_blocks(H, data.X, data.F, data.W, config.sigma_d_sq, noise_rng)
        meas.Y_d = Y_d
        meas.R_d = R_d
        meas.R_vd = block_diag([R_d] * config.n_data)
    return frame, data, meas
