"""Scenario presets, experiment specifications and INI config loading.

Config files are INI (``configparser``) with one section per scenario.
Every key is optional and overrides the named ``preset`` (default
``reduced``)::

    [myrun]
    preset = system1
    n_blocks = 50
    methods = pa-bl,omp
    snr_db = -10:5:20
    trials = 100
    seed = 7
    k_abs = 0.0
    media_sigma_rough_mm = 0.05,0.13,0.15
"""
import configparser
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from ..channel import DEFAULT_MEDIA, PhysicalConfig, ReflectingMedium
from ..frame import SystemConfig

METHODS = ("LS", "MMSE", "OMP", "FOCUSS", "PA-BL", "DA-BL", "GENIE", "BCRLB-PA", "BCRLB-DA")
DETECTING_METHODS = ("PA-BL", "DA-BL", "GENIE")
FULL_SCALE_LIMIT = 4096


class FullScaleRequired(RuntimeError):
    """Beamspace dimension exceeds the desk-scale limit without ``--full-scale``."""


@dataclass(frozen=True)
class Scenario:
    n_t: int = 16
    n_r: int = 16
    n_rf: int = 4
    n_subcarriers: int = 8
    n_taps: int = 4
    n_blocks: int = 20
    n_data: int = 50
    grid_t: int = 16
    grid_r: int = 16
    n_q: int = 4
    f_c: float = 1e12
    bandwidth: float = 20e9
    distance: float = 10.0
    k_abs: tuple = (0.0,)
    antenna_gain_db: float = 31.0
    rolloff: float = 0.8
    per_subcarrier_gain: bool = True
    n_nlos: int = 3
    n_ray: int = 1
    angle_std: float = 0.1
    media: tuple = DEFAULT_MEDIA
    constellation: str = "qpsk"
    eps: float = 1.0
    k_max: int = 20
    j_max: int = 20
    omp_eps: float = 1.0
    focuss_p: float = 1.0
    focuss_max_iter: int = 50
    mmse_calibration: int = 2000

    def __post_init__(self):
        if self.n_subcarriers - self.n_taps + 1 < 1:
            raise ValueError("n_subcarriers must be >= n_taps")
        if self.grid_t < 1 or self.grid_r < 1:
            raise ValueError("grid sizes must be >= 1")
        k = tuple(float(v) for v in np.atleast_1d(self.k_abs))
        if len(k) not in (1, self.n_subcarriers):
            raise ValueError("k_abs needs one value or one per subcarrier")
        object.__setattr__(self, "k_abs", k)

    @property
    def n_p(self):
        return self.n_subcarriers - self.n_taps + 1

    @property
    def beamspace_dim(self):
        return self.grid_t * self.grid_r

    def system_config(self, sigma_sq=0.0):
        return SystemConfig(n_t=self.n_t, n_r=self.n_r, n_rf=self.n_rf, n_p=self.n_p,
                            n_taps=self.n_taps, n_blocks=self.n_blocks, n_data=self.n_data,
                            n_q=self.n_q, sigma_v_sq=sigma_sq, sigma_d_sq=sigma_sq,
                            constellation=self.constellation)

    def physical_config(self):
        g = 10 ** (self.antenna_gain_db / 10)
        k_abs = self.k_abs[0] if len(self.k_abs) == 1 else np.array(self.k_abs)
        return PhysicalConfig(f_c=self.f_c, bandwidth=self.bandwidth,
                              n_subcarriers=self.n_subcarriers, distance=self.distance,
                              k_abs=k_abs, antenna_gain_tx=g, antenna_gain_rx=g,
                              rolloff=self.rolloff, per_subcarrier_gain=self.per_subcarrier_gain)


PRESETS = {
    "reduced": Scenario(),
    "system1": Scenario(n_t=32, n_r=32, n_rf=6, n_subcarriers=16, n_blocks=30, n_data=100,
                        grid_t=64, grid_r=64, mmse_calibration=4096),
    "system2": Scenario(n_t=64, n_r=64, n_rf=12, n_subcarriers=32, n_blocks=30, n_data=200,
                        grid_t=128, grid_r=128, mmse_calibration=8192),
}


def get_preset(name):
    try:
        return PRESETS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def normalize_method(name):
    key = name.strip().upper().replace("_", "-")
    aliases = {"PABL": "PA-BL", "DABL": "DA-BL", "BCRLB": "BCRLB-PA"}
    key = aliases.get(key, key)
    if key not in METHODS:
        raise ValueError(f"unknown method {name!r}; choose from {', '.join(METHODS)}")
    return key


def parse_methods(text):
    out = []
    for part in str(text).split(","):
        if part.strip():
            m = normalize_method(part)
            if m not in out:
                out.append(m)
    if not out:
        raise ValueError("no methods given")
    return tuple(out)


def parse_snr_grid(text):
    """``start:step:stop`` (inclusive) or a comma-separated list of dB values."""
    text = str(text).strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[1] == 0:
            raise ValueError(f"bad SNR range {text!r}; use start:step:stop")
        start, step, stop = parts
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        if n < 1:
            raise ValueError(f"empty SNR range {text!r}")
        return tuple(float(start + i * step) for i in range(n))
    vals = tuple(float(p) for p in text.split(",") if p.strip())
    if not vals:
        raise ValueError("empty SNR grid")
    return vals


@dataclass(frozen=True)
class ExperimentSpec:
    scenario: Scenario = Scenario()
    methods: tuple = ("PA-BL",)
    snr_db: tuple = (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0)
    trials: int = 10
    seed: int = 0
    full_scale: bool = False
    timing: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.snr_db:
            raise ValueError("SNR grid is empty")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "methods", tuple(normalize_method(m) for m in self.methods))
        needs_data = {"DA-BL", "BCRLB-DA"} & set(self.methods)
        if needs_data and self.scenario.n_data < 1:
            raise ValueError(f"{sorted(needs_data)} need n_data >= 1")

    def check_scale(self):
        if self.scenario.beamspace_dim > FULL_SCALE_LIMIT and not self.full_scale:
            raise FullScaleRequired(
                f"beamspace dimension {self.scenario.beamspace_dim} exceeds {FULL_SCALE_LIMIT}; "
                "pass --full-scale to run it")


_INT_FIELDS = {f.name for f in fields(Scenario) if f.type is int}
_FLOAT_FIELDS = {f.name for f in fields(Scenario) if f.type is float}


def _media_from(section, base):
    keys = ("media_n", "media_sigma_rough_mm", "media_varsigma")
    if not any(k in section for k in keys):
        return base
    n_def = [m.n for m in base]
    s_def = [m.sigma_rough * 1e3 for m in base]
    v_def = [m.varsigma for m in base]

    def get(key, default):
        return [float(v) for v in section[key].split(",")] if key in section else default

    n, s, v = get("media_n", n_def), get("media_sigma_rough_mm", s_def), get("media_varsigma", v_def)
    if not len(n) == len(s) == len(v):
        raise ValueError("media_* lists must have equal length")
    return tuple(ReflectingMedium(n=a, sigma_rough=b * 1e-3, varsigma=c) for a, b, c in zip(n, s, v))


def scenario_from_section(section):
    base = get_preset(section.get("preset", "reduced"))
    kw = {}
    for key, raw in section.items():
        if key in _INT_FIELDS:
            kw[key] = int(raw)
        elif key in _FLOAT_FIELDS:
            kw[key] = float(raw)
        elif key == "k_abs":
            kw[key] = tuple(float(v) for v in raw.split(","))
        elif key == "per_subcarrier_gain":
            kw[key] = section.getboolean(key)
        elif key == "constellation":
            kw[key] = raw.strip()
    kw["media"] = _media_from(section, base.media)
    return replace(base, **kw)


def load_config(path, section=None):
    """Read an :class:`ExperimentSpec` from an INI file.

    ``section`` defaults to the first section in the file.
    """
    cp = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    names = cp.sections()
    if not names:
        raise ValueError(f"{path} has no sections")
    name = section or names[0]
    if name not in cp:
        raise ValueError(f"{path} has no section [{name}]")
    sec = cp[name]
    kw = {"scenario": scenario_from_section(sec)}
    if "methods" in sec:
        kw["methods"] = parse_methods(sec["methods"])
    if "snr_db" in sec:
        kw["snr_db"] = parse_snr_grid(sec["snr_db"])
    if "trials" in sec:
        kw["trials"] = int(sec["trials"])
    if "seed" in sec:
        kw["seed"] = int(sec["seed"])
    return ExperimentSpec(**kw)


def scenario_dict(scenario):
    d = asdict(scenario)
    d["media"] = [asdict(m) for m in scenario.media]
    d["k_abs"] = list(scenario.k_abs)
    return d
