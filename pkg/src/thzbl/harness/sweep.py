"""Seeded Monte Carlo NMSE/BER sweeps over SNR.

Every trial owns a seed sequence ``SeedSequence(seed, spawn_key=(0, t))``
split into channel, frame and noise streams. The noise generator is
re-created from the same stream at every SNR point, so all SNRs and
methods see common random numbers. Trials may run in a process pool;
results are reduced in trial order so output does not depend on the
number of workers.
"""
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .._linalg import unvec
from ..channel import assemble_channel, normalize_channel, sample_paths
from ..dabl import (bcrlb_da, build_concatenated, dabl_estimate, data_equivalent_sensing,
                    equivalent_channel, mmse_detect)
from ..estimators import (focuss_estimate, ls_estimate, mmse_estimate, omp_estimate,
                          sample_channel_covariance)
from ..frame import (make_data_frame, make_pilot_frame, pilot_noise_covariance,
                     pilot_sensing_matrices, synthesize_data_blocks,
                     synthesize_pilot_measurements)
from ..pabl import bcrlb_pa, genie_estimate, genie_hyperparameters, pabl_estimate
from ..sparsemodel import (beamspace_to_channel, channel_to_beamspace, make_grid,
                           pilot_equivalent_sensing, sparsifying_dictionary,
                           subcarrier_dictionaries)
from .config import DETECTING_METHODS

logger = logging.getLogger(__name__)


@dataclass
class MethodOutcome:
    err: float = 0.0
    energy: float = 0.0
    bit_errors: int = 0
    n_bits: int = 0
    iterations: list = field(default_factory=list)
    seconds: float = 0.0
    failed: bool = False
    message: str = ""

    @property
    def nmse(self):
        return self.err / self.energy if self.energy > 0 else np.nan


@dataclass
class TrialResult:
    index: int
    outcomes: dict


@dataclass
class ResultRow:
    method: str
    snr_db: float
    M: int
    nmse: float
    ber: float
    trials: int
    wall_time_s: float
    seed: int
    failures: int = 0


def nmse(H_hat, H_true):
    """``sum_k ||H_hat[k] - H[k]||_F^2 / sum_k ||H[k]||_F^2``."""
    H_hat, H_true = np.asarray(H_hat), np.asarray(H_true)
    if H_hat.shape != H_true.shape:
        raise ValueError(f"shape mismatch {H_hat.shape} vs {H_true.shape}")
    den = float(np.sum(np.abs(H_true) ** 2))
    if den == 0:
        raise ValueError("true channel has zero energy")
    return float(np.sum(np.abs(H_hat - H_true) ** 2)) / den


@dataclass
class _Context:
    phys: object
    pairs: list
    R_h: list


def _draw_channel(scenario, phys, rng):
    paths = sample_paths(phys, rng, n_taps=scenario.n_taps, n_nlos=scenario.n_nlos,
                         n_ray=scenario.n_ray, grid_size_tx=scenario.grid_t,
                         grid_size_rx=scenario.grid_r, media=scenario.media,
                         angle_std=scenario.angle_std)
    H, _ = normalize_channel(assemble_channel(paths, phys, scenario.n_t, scenario.n_r))
    return H


@lru_cache(maxsize=8)
def _context(spec):
    sc = spec.scenario
    phys = sc.physical_config()
    pairs = subcarrier_dictionaries(make_grid(sc.grid_t), make_grid(sc.grid_r),
                                    phys.relative_frequencies(), sc.n_t, sc.n_r)
    R_h = None
    if "MMSE" in spec.methods:
        rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(1,)))
        Hs = np.stack([_draw_channel(sc, phys, rng) for _ in range(sc.mmse_calibration)])
        R_h = [sample_channel_covariance(Hs[:, k].transpose(0, 2, 1).reshape(len(Hs), -1))
               for k in range(sc.n_subcarriers)]
    return _Context(phys=phys, pairs=pairs, R_h=R_h)


def trial_seed(seed, t):
    return np.random.SeedSequence(seed, spawn_key=(0, t))


def _ber_counts(const, idx_hat, idx_true):
    return const.bit_errors(idx_hat, idx_true), idx_true.size * const.bits_per_symbol


def simulate_trial(spec, t):
    """Run every method of ``spec`` on trial ``t`` at all SNR points."""
    sc = spec.scenario
    ctx = _context(spec)
    chan_ss, frame_ss, noise_ss = trial_seed(spec.seed, t).spawn(3)
    H = _draw_channel(sc, ctx.phys, np.random.default_rng(chan_ss))
    cfg = sc.system_config(1.0)
    const = cfg.data_constellation
    K, n_rf = sc.n_subcarriers, sc.n_rf
    rng_f = np.random.default_rng(frame_ss)
    frame = make_pilot_frame(cfg, rng_f)
    data = make_data_frame(cfg, rng_f) if sc.n_data > 0 else None

    methods = spec.methods
    Pt = [pilot_equivalent_sensing(frame, k, ctx.pairs[k]) for k in range(K)]
    Phi_p = pilot_sensing_matrices(frame) if {"LS", "MMSE"} & set(methods) else None
    Phi_d = ([data_equivalent_sensing(data.F, data.W, ctx.pairs[k]) for k in range(K)]
             if data is not None else None)
    need_truth = {"GENIE", "BCRLB-PA", "BCRLB-DA"} & set(methods)
    gamma_true = ([genie_hyperparameters(channel_to_beamspace(H[k], ctx.pairs[k])) for k in range(K)]
                  if need_truth else None)
    energy = [float(np.sum(np.abs(H[k]) ** 2)) for k in range(K)]

    outcomes = {}
    for si, snr in enumerate(spec.snr_db):
        s2 = 10.0 ** (-snr / 10.0)
        rng_n = np.random.default_rng(noise_ss)
        y_p = synthesize_pilot_measurements(H, frame, s2, rng_n)
        R_vp = pilot_noise_covariance(frame, s2)
        if data is not None:
            Y_d, R_d = synthesize_data_blocks(H, data.X, data.F, data.W, s2, rng_n)
        res = {m: MethodOutcome() for m in methods}
        for k in range(K):
            pabl_rep = None
            for m in methods:
                out = res[m]
                if out.failed:
                    continue
                t0 = time.perf_counter()
                try:
                    H_hat, idx_hat = None, None
                    if m == "LS":
                        H_hat = unvec(ls_estimate(y_p[k], Phi_p[k]), sc.n_r, sc.n_t)
                    elif m == "MMSE":
                        H_hat = unvec(mmse_estimate(y_p[k], Phi_p[k], ctx.R_h[k], R_vp), sc.n_r, sc.n_t)
                    elif m == "OMP":
                        tol = sc.omp_eps * np.sqrt(np.real(np.trace(R_vp)))
                        r = omp_estimate(y_p[k], Pt[k], tol=tol)
                        H_hat = beamspace_to_channel(r.h_hat, ctx.pairs[k])
                        out.iterations.append(r.n_iter)
                    elif m == "FOCUSS":
                        lam = float(np.real(np.trace(R_vp))) / R_vp.shape[0]
                        r = focuss_estimate(y_p[k], Pt[k], lam, sc.focuss_p, sc.focuss_max_iter)
                        H_hat = beamspace_to_channel(r.h_hat, ctx.pairs[k])
                        out.iterations.append(r.n_iter)
                    elif m in ("PA-BL", "DA-BL"):
                        if pabl_rep is None:
                            pabl_rep = pabl_estimate(y_p[k], Pt[k], R_vp, sc.eps, sc.k_max)
                        if m == "PA-BL":
                            h_b = pabl_rep.h_b
                            out.iterations.append(pabl_rep.n_iter)
                            if data is not None:
                                H_eq = equivalent_channel(h_b, Phi_d[k], n_rf)
                                idx_hat = const.demodulate_indices(mmse_detect(Y_d[k], H_eq, R_d))
                        else:
                            r = dabl_estimate(y_p[k], Pt[k], R_vp, Y_d[k], Phi_d[k], R_d,
                                              constellation=const, eps=sc.eps, j_max=sc.j_max,
                                              h_b_init=pabl_rep.h_b)
                            h_b = r.h_b
                            idx_hat = r.data.indices
                            out.iterations.append(r.n_iter)
                        H_hat = beamspace_to_channel(h_b, ctx.pairs[k])
                    elif m == "GENIE":
                        h_b = genie_estimate(y_p[k], Pt[k], R_vp, gamma_true[k])
                        H_hat = beamspace_to_channel(h_b, ctx.pairs[k])
                        if data is not None:
                            H_eq = equivalent_channel(h_b, Phi_d[k], n_rf)
                            idx_hat = const.demodulate_indices(mmse_detect(Y_d[k], H_eq, R_d))
                    elif m == "BCRLB-PA":
                        Psi = sparsifying_dictionary(ctx.pairs[k])
                        out.err += bcrlb_pa(Pt[k], R_vp, gamma_true[k], Psi)[1]
                    elif m == "BCRLB-DA":
                        Psi = sparsifying_dictionary(ctx.pairs[k])
                        cm = build_concatenated(data.X[k], y_p[k], Pt[k], R_vp, Y_d[k], Phi_d[k], R_d)
                        out.err += bcrlb_da(cm.Psi_t, cm.R_v, gamma_true[k], Psi)[1]
                    if H_hat is not None:
                        out.err += float(np.sum(np.abs(H_hat - H[k]) ** 2))
                    if idx_hat is not None and m in DETECTING_METHODS:
                        be, nb = _ber_counts(const, idx_hat, data.indices[k])
                        out.bit_errors += be
                        out.n_bits += nb
                    out.energy += energy[k]
                except (np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
                    out.failed = True
                    out.message = f"{type(exc).__name__}: {exc}"
                out.seconds += time.perf_counter() - t0
        for m in methods:
            outcomes[(m, si)] = res[m]
    return TrialResult(index=t, outcomes=outcomes)


def _trial_job(args):
    return simulate_trial(*args)


def run_trials(spec, workers=1):
    """Per-trial outcomes in trial order."""
    spec.check_scale()
    jobs = [(spec, t) for t in range(spec.trials)]
    if workers is None or workers <= 1:
        return [simulate_trial(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_trial_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def aggregate(spec, trials):
    """Reduce per-trial outcomes into one row per (method, SNR)."""
    rows = []
    for m in spec.methods:
        for si, snr in enumerate(spec.snr_db):
            err = energy = 0.0
            bits = nbits = 0
            ok = failed = 0
            secs = 0.0
            for tr in sorted(trials, key=lambda r: r.index):
                o = tr.outcomes[(m, si)]
                secs += o.seconds
                if o.failed:
                    failed += 1
                    continue
                ok += 1
                err += o.err
                energy += o.energy
                bits += o.bit_errors
                nbits += o.n_bits
            if failed:
                first = next(tr.outcomes[(m, si)].message for tr in trials if tr.outcomes[(m, si)].failed)
                logger.warning("%s at %g dB: %d of %d trials failed (%s)", m, snr, failed,
                               len(trials), first)
            detects = m in DETECTING_METHODS and spec.scenario.n_data > 0
            rows.append(ResultRow(
                method=m, snr_db=float(snr), M=spec.scenario.n_blocks,
                nmse=err / energy if energy > 0 else float("nan"),
                ber=bits / nbits if detects and nbits > 0 else float("nan"),
                trials=ok, wall_time_s=secs if spec.timing else 0.0,
                seed=int(spec.seed), failures=failed))
    return rows


def run_sweep(spec, workers=1):
    """Simulate every trial and return aggregated :class:`ResultRow` objects."""
    return aggregate(spec, run_trials(spec, workers))
