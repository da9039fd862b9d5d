"""Dual-wideband THz MIMO channel generation.

Frequency-dependent ULA steering vectors (beam squint), LoS/NLoS path gains
with spreading, molecular-absorption and first-order reflection losses,
raised-cosine delay-tap coefficients, and the per-subcarrier channel
matrices built from them.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0
Z0 = 377.0
MU0 = 4e-7 * np.pi
EPS0 = 8.8541878128e-12


class AngleClampWarning(RuntimeWarning):
    """Raised when ``delta * cos(theta)`` leaves ``[-1, 1]``."""


class ReflectionDomainWarning(RuntimeWarning):
    """Raised when the refraction-angle argument has modulus above one."""


@dataclass(frozen=True)
class PhysicalConfig:
    """Carrier, bandwidth and propagation constants of one scenario.

    ``k_abs`` is the molecular absorption coefficient in 1/m, either a
    scalar (flat over the band) or one value per subcarrier.
    """

    f_c: float = 1e12
    bandwidth: float = 20e9
    n_subcarriers: int = 16
    distance: float = 10.0
    k_abs: object = 0.0
    antenna_gain_tx: float = 10 ** (31 / 10)
    antenna_gain_rx: float = 10 ** (31 / 10)
    rolloff: float = 0.8
    per_subcarrier_gain: bool = True

    def __post_init__(self):
        if self.f_c <= 0 or self.bandwidth <= 0:
            raise ValueError("f_c and bandwidth must be positive")
        if self.bandwidth >= self.f_c:
            raise ValueError("bandwidth must be below the carrier frequency")
        if self.n_subcarriers < 1:
            raise ValueError("n_subcarriers must be >= 1")
        if self.distance <= 0:
            raise ValueError("distance must be positive")
        if not 0.0 <= self.rolloff <= 1.0:
            raise ValueError("rolloff must lie in [0, 1]")
        k_abs = np.broadcast_to(np.asarray(self.k_abs, dtype=float), (self.n_subcarriers,)).copy()
        if np.any(k_abs < 0):
            raise ValueError("k_abs entries must be >= 0")
        k_abs.setflags(write=False)
        object.__setattr__(self, "k_abs", k_abs)

    @property
    def sampling_period(self):
        return 1.0 / self.bandwidth

    def subcarrier_frequencies(self):
        """``f_k = f_c + (k - (K - 1) / 2) B / K`` for 0-based ``k``."""
        K = self.n_subcarriers
        k = np.arange(K)
        return self.f_c + (k - (K - 1) / 2) * self.bandwidth / K

    def relative_frequencies(self):
        return self.subcarrier_frequencies() / self.f_c


@dataclass(frozen=True)
class ReflectingMedium:
    n: float
    sigma_rough: float
    varsigma: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("refractive index must be >= 1")
        if self.sigma_rough < 0:
            raise ValueError("roughness must be >= 0")


# Roughness values in metres for three indoor surfaces; n and varsigma are
# configurable and these defaults are illustrative only.
DEFAULT_MEDIA = (
    ReflectingMedium(n=2.24, sigma_rough=0.05e-3, varsigma=100.0),
    ReflectingMedium(n=2.24, sigma_rough=0.13e-3, varsigma=100.0),
    ReflectingMedium(n=2.24, sigma_rough=0.15e-3, varsigma=100.0),
)


@dataclass(frozen=True)
class PathComponent:
    kind: str
    alpha_mag: np.ndarray
    alpha_phase: float
    tau: float
    phi_r: float
    phi_t: float
    cluster: int = 0
    ray: int = 0


@dataclass
class PathSet:
    """Ground-truth multipath parameters of one channel realisation.

    ``magnitude`` has shape ``(P, K)`` so that gains may vary with the
    subcarrier; the first ``n_los`` rows are line-of-sight paths.
    """

    magnitude: np.ndarray
    phase: np.ndarray
    tau: np.ndarray
    phi_r: np.ndarray
    phi_t: np.ndarray
    is_los: np.ndarray
    n_nlos: int = 0
    n_ray: int = 0
    cluster: np.ndarray = field(default=None)

    def __post_init__(self):
        self.magnitude = np.atleast_2d(np.asarray(self.magnitude, dtype=float))
        P = self.magnitude.shape[0]
        for name in ("phase", "tau", "phi_r", "phi_t"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if arr.shape != (P,):
                raise ValueError(f"{name} must have {P} entries")
            setattr(self, name, arr)
        self.is_los = np.asarray(self.is_los, dtype=bool).reshape(P)
        if self.cluster is None:
            self.cluster = np.zeros(P, dtype=int)
        if np.any(self.magnitude < 0):
            raise ValueError("path magnitudes must be >= 0")
        if np.any(self.tau < 0):
            raise ValueError("delays must be >= 0")

    def __len__(self):
        return self.magnitude.shape[0]

    @property
    def gains(self):
        return self.magnitude * np.exp(1j * self.phase)[:, None]

    def components(self):
        out = []
        for p in range(len(self)):
            out.append(PathComponent(
                kind="LoS" if self.is_los[p] else "NLoS",
                alpha_mag=self.magnitude[p],
                alpha_phase=float(self.phase[p]),
                tau=float(self.tau[p]),
                phi_r=float(self.phi_r[p]),
                phi_t=float(self.phi_t[p]),
                cluster=int(self.cluster[p]),
            ))
        return out


def steering_vector(theta, delta_k, n_ant):
    """Unit-norm ULA response with beam squint.

    Element ``n`` (0-based) is ``exp(-1j * pi * n * delta_k * cos(theta)) / sqrt(n_ant)``.
    An array ``theta`` yields one column per angle.
    """
    if n_ant < 1:
        raise ValueError("n_ant must be >= 1")
    if delta_k <= 0:
        raise ValueError("delta_k must be positive")
    n = np.arange(n_ant)
    cos_t = np.cos(np.asarray(theta, dtype=float))
    phase = np.multiply.outer(n, delta_k * cos_t)
    return np.exp(-1j * np.pi * phase) / np.sqrt(n_ant)


def effective_aoa(theta, delta_k):
    """Squinted angle ``arccos(delta_k cos theta)``, clamped to the arccos domain."""
    arg = delta_k * np.cos(theta)
    if np.any(np.abs(arg) > 1):
        warnings.warn(f"delta*cos(theta)={arg} clamped to [-1, 1]", AngleClampWarning, stacklevel=2)
        arg = np.clip(arg, -1.0, 1.0)
    return np.arccos(arg)


def array_gain(theta, f_k, config, n_ant):
    """Normalised array gain ``|a(theta, f_c)^H a(theta, f_k)|^2``."""
    a_c = steering_vector(theta, 1.0, n_ant)
    a_k = steering_vector(theta, f_k / config.f_c, n_ant)
    return float(np.abs(np.vdot(a_c, a_k)) ** 2)


def spreading_loss(f_k, d):
    return (SPEED_OF_LIGHT / (4 * np.pi * np.asarray(f_k) * d)) ** 2


def los_path_gain_sq(f_k, d, k_abs_k):
    """``|alpha_L|^2``: free-space spreading times ``exp(-k_abs d)``."""
    if np.any(np.asarray(f_k) <= 0) or d <= 0 or np.any(np.asarray(k_abs_k) < 0):
        raise ValueError("need f_k > 0, d > 0, k_abs >= 0")
    return spreading_loss(f_k, d) * np.exp(-np.asarray(k_abs_k) * d)


def characteristic_impedance(f_k, medium):
    x = medium.varsigma * SPEED_OF_LIGHT / (4 * np.pi * f_k)
    return np.sqrt(MU0 / (EPS0 * (medium.n ** 2 - x ** 2 - 2j * medium.n * x)))


def fresnel_coefficient(f_k, medium, theta_in):
    Z = characteristic_impedance(f_k, medium)
    s = np.sin(theta_in) * Z / Z0
    if np.any(np.abs(s) > 1):
        warnings.warn("refraction-angle argument exceeds 1 in modulus",
                      ReflectionDomainWarning, stacklevel=3)
    theta_ref = np.arcsin(np.asarray(s, dtype=complex))
    num = Z * np.cos(theta_in) - Z0 * np.cos(theta_ref)
    den = Z * np.cos(theta_in) + Z0 * np.cos(theta_ref)
    return num / den


def roughness_factor(f_k, medium, theta_in):
    return np.exp(-0.5 * (4 * np.pi * f_k * medium.sigma_rough * np.cos(theta_in) / SPEED_OF_LIGHT) ** 2)


def reflection_coefficient(f_k, medium, theta_in):
    """First-order reflection coefficient: Fresnel term times Rayleigh roughness."""
    if np.any(np.asarray(theta_in) < 0) or np.any(np.asarray(theta_in) >= np.pi / 2):
        raise ValueError("theta_in must lie in [0, pi/2)")
    return fresnel_coefficient(f_k, medium, theta_in) * roughness_factor(f_k, medium, theta_in)


def raised_cosine(t, period, rolloff):
    """Raised-cosine impulse response with unit value at ``t = 0``."""
    x = np.asarray(t, dtype=float) / period
    out = np.sinc(x)
    if rolloff == 0:
        return out
    denom = 1.0 - (2.0 * rolloff * x) ** 2
    singular = np.abs(denom) < 1e-10
    safe = np.where(singular, 1.0, denom)
    out = out * np.cos(np.pi * rolloff * x) / safe
    limit = np.pi / 4 * np.sinc(1.0 / (2.0 * rolloff))
    return np.where(singular, limit, out)


def pulse_tap_gain(tau, k, config, pulse=None):
    """``sum_l p(l T_s - tau) exp(-2j pi k l / K)`` over ``l = 0..K-1``."""
    K = config.n_subcarriers
    if not 0 <= k < K:
        raise ValueError("subcarrier index out of range")
    return pulse_tap_gains(np.atleast_1d(tau), config, pulse)[0, k]


def pulse_tap_gains(taus, config, pulse=None):
    """Matrix of ``beta_tau[k]`` with shape ``(len(taus), K)``."""
    K = config.n_subcarriers
    Ts = config.sampling_period
    if pulse is None:
        def pulse(t):
            return raised_cosine(t, Ts, config.rolloff)
    taus = np.asarray(taus, dtype=float).reshape(-1)
    if np.any(taus < 0):
        raise ValueError("delays must be >= 0")
    l = np.arange(K)
    samples = pulse(l[None, :] * Ts - taus[:, None])
    return samples @ np.exp(-2j * np.pi * np.outer(l, l) / K)


def grid_angles(grid_size):
    """Angles whose cosines form the uniform dictionary grid."""
    return np.arccos(2.0 * np.arange(grid_size) / grid_size - 1.0)


def laplacian_angles(rng, means, std):
    """Laplacian perturbation with standard deviation ``std`` around ``means``."""
    means = np.asarray(means, dtype=float)
    return means + rng.laplace(0.0, std / np.sqrt(2.0), size=means.shape)


def sample_paths(config, rng, *, n_taps, n_nlos=3, n_ray=1, grid_size_tx=64, grid_size_rx=64,
                 media=DEFAULT_MEDIA, angle_std=0.1):
    """Draw one LoS path plus ``n_nlos * n_ray`` reflected rays.

    Mean angles are picked uniformly from the dictionary grids and perturbed
    by a Laplacian of standard deviation ``angle_std`` (then clipped to
    ``[0, pi]``). Delays are uniform on ``[0, (n_taps - 1) T_s]``, phases
    uniform on ``(-pi, pi]``. Incidence angles of reflected rays are uniform
    on ``[0, pi/2)``.
    """
    K = config.n_subcarriers
    freqs = config.subcarrier_frequencies() if config.per_subcarrier_gain else np.full(K, config.f_c)
    k_abs = config.k_abs if config.per_subcarrier_gain else np.full(K, config.k_abs.mean())
    ang_t, ang_r = grid_angles(grid_size_tx), grid_angles(grid_size_rx)
    tau_max = (n_taps - 1) * config.sampling_period
    n_rays = n_nlos * n_ray
    P = 1 + n_rays

    cluster = np.zeros(P, dtype=int)
    mean_r = np.empty(P)
    mean_t = np.empty(P)
    mean_r[0] = rng.choice(ang_r)
    mean_t[0] = rng.choice(ang_t)
    for z in range(n_nlos):
        rows = slice(1 + z * n_ray, 1 + (z + 1) * n_ray)
        mean_r[rows] = rng.choice(ang_r)
        mean_t[rows] = rng.choice(ang_t)
        cluster[rows] = z + 1
    phi_r = np.clip(laplacian_angles(rng, mean_r, angle_std), 0.0, np.pi)
    phi_t = np.clip(laplacian_angles(rng, mean_t, angle_std), 0.0, np.pi)
    tau = rng.uniform(0.0, tau_max, size=P)
    phase = np.pi - rng.uniform(0.0, 2 * np.pi, size=P)

    base = los_path_gain_sq(freqs, config.distance, k_abs)
    mag_sq = np.empty((P, K))
    mag_sq[0] = base
    for p in range(1, P):
        medium = media[(cluster[p] - 1) % len(media)]
        theta_in = rng.uniform(0.0, np.pi / 2)
        refl = reflection_coefficient(freqs, medium, theta_in)
        mag_sq[p] = np.abs(refl) ** 2 * base
    is_los = np.zeros(P, dtype=bool)
    is_los[0] = True
    return PathSet(magnitude=np.sqrt(mag_sq), phase=phase, tau=tau, phi_r=phi_r, phi_t=phi_t,
                   is_los=is_los, n_nlos=n_nlos, n_ray=n_ray, cluster=cluster)


def assemble_channel(paths, config, n_t, n_r, pulse=None):
    """Per-subcarrier channel matrices, shape ``(K, n_r, n_t)``."""
    if len(paths) == 0:
        raise ValueError("empty path set")
    K = config.n_subcarriers
    deltas = config.relative_frequencies()
    n_nlos_rays = max(paths.n_nlos * paths.n_ray, 1)
    scale = np.where(paths.is_los, np.sqrt(n_t * n_r), np.sqrt(n_t * n_r / n_nlos_rays))
    beta = pulse_tap_gains(paths.tau, config, pulse)
    coef = scale[:, None] * paths.gains * beta * (config.antenna_gain_tx * config.antenna_gain_rx)
    H = np.empty((K, n_r, n_t), dtype=np.complex128)
    for k in range(K):
        a_r = steering_vector(paths.phi_r, deltas[k], n_r)
        a_t = steering_vector(paths.phi_t, deltas[k], n_t)
        H[k] = (a_r * coef[:, k]) @ a_t.conj().T
    return H


def normalize_channel(H):
    """Scale ``H`` so that its mean per-entry power over all subcarriers is one."""
    energy = np.mean(np.abs(H) ** 2)
    if energy == 0:
        raise ValueError("channel has zero energy")
    s = 1.0 / np.sqrt(energy)
    return H * s, s
