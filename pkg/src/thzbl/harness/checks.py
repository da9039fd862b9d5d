"""Self-checks run by ``thzbl validate``.

Each check returns ``(name, passed, detail)`` and works on a tiny,
seeded problem so the whole set runs in a few seconds.
"""
from dataclasses import replace

import numpy as np

from .._linalg import vec
from ..channel import assemble_channel, normalize_channel, sample_paths
from ..frame import (channel_taps, make_pilot_frame, pilot_noise_covariance,
                     pilot_sensing_matrices, synthesize_pilot_block_fd,
                     synthesize_pilot_block_td, synthesize_pilot_measurements, to_frequency_domain,
                     zero_pad)
from ..pabl import estep, pabl_estimate
from ..sparsemodel import (beamspace_to_channel, make_grid, pilot_equivalent_sensing,
                           sparsifying_dictionary, subcarrier_dictionaries)
from .config import ExperimentSpec, Scenario
from .sweep import run_sweep

_SMALL = Scenario(n_t=8, n_r=8, n_rf=2, n_subcarriers=8, n_taps=4, n_blocks=12, n_data=8,
                  grid_t=8, grid_r=8)


def _problem(seed=0, scenario=_SMALL):
    rng = np.random.default_rng(seed)
    phys = scenario.physical_config()
    paths = sample_paths(phys, rng, n_taps=scenario.n_taps, grid_size_tx=scenario.grid_t,
                         grid_size_rx=scenario.grid_r)
    H, _ = normalize_channel(assemble_channel(paths, phys, scenario.n_t, scenario.n_r))
    frame = make_pilot_frame(scenario.system_config(0.1), rng)
    pairs = subcarrier_dictionaries(make_grid(scenario.grid_t), make_grid(scenario.grid_r),
                                    phys.relative_frequencies(), scenario.n_t, scenario.n_r)
    return rng, H, frame, pairs


def check_fd_td_equivalence(tol=1e-10):
    _, H, frame, _ = _problem()
    K = H.shape[0]
    td = synthesize_pilot_block_td(channel_taps(H), zero_pad(frame.pilots[0], K), frame.F[0], frame.W[0])
    fd = synthesize_pilot_block_fd(H, frame.U[0], frame.F[0], frame.W[0])
    err = float(np.max(np.abs(to_frequency_domain(td) - fd)))
    return "frequency/time-domain synthesis agree", err < tol, f"max abs diff {err:.2e}"


def check_sensing_factorization(tol=1e-10):
    _, H, frame, pairs = _problem()
    Phi = pilot_sensing_matrices(frame)
    err = max(float(np.max(np.abs(Phi[k] @ sparsifying_dictionary(pairs[k])
                                  - pilot_equivalent_sensing(frame, k, pairs[k]))))
              for k in range(H.shape[0]))
    return "Kronecker sensing equals Phi Psi", err < tol, f"max abs diff {err:.2e}"


def check_noiseless_model(tol=1e-10):
    _, H, frame, _ = _problem()
    y = synthesize_pilot_measurements(H, frame, 0.0)
    Phi = pilot_sensing_matrices(frame)
    err = max(float(np.max(np.abs(Phi[k] @ vec(H[k]) - y[k]))) for k in range(H.shape[0]))
    return "noiseless outputs equal Phi vec(H)", err < tol, f"max abs diff {err:.2e}"


def check_beamspace_roundtrip(tol=1e-10):
    rng = np.random.default_rng(1)
    pair = subcarrier_dictionaries(make_grid(8), make_grid(8), [1.0], 8, 8)[0]
    h_b = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    H = beamspace_to_channel(h_b, pair)
    err = float(np.max(np.abs(vec(H) - sparsifying_dictionary(pair) @ h_b)))
    return "beamspace map equals Psi h_b", err < tol, f"max abs diff {err:.2e}"


def check_posterior_forms(tol=1e-8):
    rng = np.random.default_rng(2)
    worst = 0.0
    for m, n in ((6, 10), (10, 6)):
        A = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
        y = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        g = rng.uniform(0.1, 2.0, n)
        S = np.linalg.inv(A.conj().T @ A + np.diag(1 / g))
        e = estep(A, y, g, full=True)
        worst = max(worst, float(np.max(np.abs(e.cov - S))), float(np.max(np.abs(e.mu - S @ A.conj().T @ y))))
    return "posterior matches the direct inverse", worst < tol, f"max abs diff {worst:.2e}"


def check_em_monotone(tol=1e-8):
    _, H, frame, pairs = _problem()
    y = synthesize_pilot_measurements(H, frame, 0.1, np.random.default_rng(3))
    R = pilot_noise_covariance(frame, 0.1)
    Pt = pilot_equivalent_sensing(frame, 0, pairs[0])
    rep = pabl_estimate(y[0], Pt, R, eps=1e-12, k_max=30, track_likelihood=True)
    ll = np.array(rep.loglik_history)
    drop = float(np.max(-np.diff(ll) / np.maximum(np.abs(ll[:-1]), 1.0))) if len(ll) > 1 else 0.0
    ok = drop <= tol
    return "EM marginal likelihood is non-decreasing", ok, f"largest relative drop {max(drop, 0.0):.2e}"


def check_sweep_reproducible():
    spec = ExperimentSpec(scenario=replace(_SMALL, mmse_calibration=20),
                          methods=("OMP", "PA-BL"), snr_db=(0.0, 10.0), trials=2, seed=11)
    a, b = run_sweep(spec), run_sweep(spec)
    same = all(x.nmse == y.nmse for x, y in zip(a, b))
    return "fixed seed gives identical sweeps", same, f"{len(a)} rows compared"


CHECKS = (check_fd_td_equivalence, check_sensing_factorization, check_noiseless_model,
          check_beamspace_roundtrip, check_posterior_forms, check_em_monotone,
          check_sweep_reproducible)


def run_checks():
    return [c() for c in CHECKS]
