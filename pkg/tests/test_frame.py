import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thzbl._linalg import vec
from thzbl.frame import (SystemConfig, antenna_noise_fd, build_pilot_sensing, channel_taps,
                         combined_noise_covariance, complex_normal, data_sensing,
                         generate_rf_codebook, make_data_frame, make_pilot_frame, measure,
                         pilot_noise_covariance, pilot_sensing_matrices, stack_pilot_blocks,
                         synthesize_data_blocks, synthesize_pilot_block_fd,
                         synthesize_pilot_block_td, synthesize_pilot_measurements,
                         to_frequency_domain, zero_pad)
from thzbl.modulation import PSK8, QPSK, Constellation, get_constellation


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _circular_oracle(taps, x_zp, F, W):
    # y(q) = W^H sum_l H_l F x((q - l) mod K), written out entry by entry
    K, n_r, n_t = taps.shape
    n_rf = F.shape[1]
    out = np.zeros((K, W.shape[1]), dtype=complex)
    for q in range(K):
        r = np.zeros(n_r, dtype=complex)
        for l in range(K):
            s = x_zp[(q - l) % K]
            for i in range(n_r):
                for j in range(n_t):
                    r[i] += taps[l, i, j] * sum(F[j, c] * s[c] for c in range(n_rf))
        for c in range(W.shape[1]):
            out[q, c] = sum(np.conj(W[i, c]) * r[i] for i in range(n_r))
    return out


class TestCodebook:
    def test_binary_lattice(self):
        F = generate_rf_codebook(np.random.default_rng(0), 6, 3, 1)
        assert np.allclose(np.abs(F), 1 / np.sqrt(6))
        assert np.allclose(np.sort(np.unique(np.round(F.real * np.sqrt(6), 12))), [-1, 1])
        assert np.allclose(F.imag, 0, atol=1e-15)

    def test_phase_uniformity(self):
        F = generate_rf_codebook(np.random.default_rng(1), 1000, 100, 4)
        k = np.round(np.angle(F) / (2 * np.pi / 16)).astype(int) % 16
        freq = np.bincount(k.ravel(), minlength=16) / k.size
        np.testing.assert_allclose(freq, 1 / 16, atol=0.01)

    def test_constant_modulus_lattice(self):
        F = generate_rf_codebook(np.random.default_rng(2), 8, 4, 3)
        ph = np.angle(F) / (2 * np.pi / 8)
        np.testing.assert_allclose(ph, np.round(ph), atol=1e-12)
        np.testing.assert_allclose(np.abs(F), 1 / np.sqrt(8))


class TestTimeDomain:
    def test_memoryless(self):
        rng = np.random.default_rng(0)
        K, N = 6, 3
        taps = np.zeros((K, N, N), dtype=complex)
        taps[0] = 2.0 * np.eye(N)
        F = generate_rf_codebook(rng, N, N, 2)
        x = zero_pad(crandn(rng, 4, N), K)
        out = synthesize_pilot_block_td(taps, x, F, np.eye(N))
        np.testing.assert_allclose(out, 2.0 * x @ F.T)

    def test_zero_pilots(self):
        rng = np.random.default_rng(1)
        taps = crandn(rng, 5, 3, 2)
        out = synthesize_pilot_block_td(taps, np.zeros((5, 2)), generate_rf_codebook(rng, 2, 2, 2),
                                        generate_rf_codebook(rng, 3, 2, 2))
        assert not np.any(out)

    def test_circular_convolution_oracle(self):
        rng = np.random.default_rng(2)
        L, n_p, n_t, n_r, n_rf = 2, 3, 3, 2, 2
        K = n_p + L - 1
        taps = np.zeros((K, n_r, n_t), dtype=complex)
        taps[:L] = crandn(rng, L, n_r, n_t)
        F = generate_rf_codebook(rng, n_t, n_rf, 2)
        W = generate_rf_codebook(rng, n_r, n_rf, 2)
        x = zero_pad(crandn(rng, n_p, n_rf), K)
        np.testing.assert_allclose(synthesize_pilot_block_td(taps, x, F, W),
                                   _circular_oracle(taps, x, F, W), atol=1e-13)

    def test_shape_checks(self):
        with pytest.raises(ValueError):
            synthesize_pilot_block_td(np.zeros((4, 2, 2)), np.zeros((5, 2)), np.eye(2), np.eye(2))


class TestFrequencyDomain:
    def test_k_one_identity(self):
        x = crandn(np.random.default_rng(0), 1, 3)
        np.testing.assert_allclose(to_frequency_domain(x), x)

    def test_parseval(self):
        rng = np.random.default_rng(3)
        td = crandn(rng, 8, 4)
        fd = to_frequency_domain(td)
        assert np.sum(np.abs(td) ** 2) == pytest.approx(np.sum(np.abs(fd) ** 2) / 8)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 8), st.integers(1, 8), st.integers(1, 16))
    def test_fd_td_equivalence(self, seed, n_t, n_r, K):
        rng = np.random.default_rng(seed)
        n_rf = min(n_t, n_r)
        H = crandn(rng, K, n_r, n_t)
        F = generate_rf_codebook(rng, n_t, n_rf, 3)
        W = generate_rf_codebook(rng, n_r, n_rf, 3)
        x = zero_pad(crandn(rng, max(1, K // 2), n_rf), K)
        td = synthesize_pilot_block_td(channel_taps(H), x, F, W)
        fd = synthesize_pilot_block_fd(H, to_frequency_domain(x), F, W)
        err = np.linalg.norm(to_frequency_domain(td) - fd) / np.linalg.norm(fd)
        assert err <= 1e-9


class TestSensing:
    def test_scalar(self):
        u, F, W = np.array([0.3 + 0.1j]), np.array([[1j]]), np.array([[np.exp(0.5j)]])
        np.testing.assert_allclose(build_pilot_sensing(u, F, W), [[u[0] * F[0, 0] * np.conj(W[0, 0])]])

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000))
    def test_identity(self, seed):
        rng = np.random.default_rng(seed)
        n_t, n_r, n_rf = 4, 3, 2
        H = crandn(rng, n_r, n_t)
        F = generate_rf_codebook(rng, n_t, n_rf, 2)
        W = generate_rf_codebook(rng, n_r, n_rf, 2)
        u = crandn(rng, n_rf)
        np.testing.assert_allclose(build_pilot_sensing(u, F, W) @ vec(H), W.conj().T @ H @ F @ u,
                                   atol=1e-12)

    def test_zero_pilot(self):
        assert not np.any(build_pilot_sensing(np.zeros(2), np.ones((3, 2)), np.ones((3, 2))))

    def test_stacking(self):
        rng = np.random.default_rng(4)
        Phis = [crandn(rng, 2, 6) for _ in range(3)]
        ys = [crandn(rng, 2) for _ in range(3)]
        Ws = [generate_rf_codebook(rng, 3, 2, 2) for _ in range(3)]
        Phi, y, R = stack_pilot_blocks(Phis, ys, Ws, 0.5, 8)
        for m in range(3):
            np.testing.assert_array_equal(Phi[2 * m:2 * m + 2], Phis[m])
            np.testing.assert_array_equal(y[2 * m:2 * m + 2], ys[m])
        np.testing.assert_allclose(R, R.conj().T)
        assert np.linalg.eigvalsh(R).min() >= 0
        P1, y1, _ = stack_pilot_blocks(Phis[:1], ys[:1], Ws[:1], 0.5, 8)
        np.testing.assert_array_equal(P1, Phis[0])
        np.testing.assert_array_equal(y1, ys[0])

    def test_stacking_rejects_mismatch(self):
        with pytest.raises(ValueError):
            stack_pilot_blocks([], [], [], 1.0, 4)

    def test_frame_sensing_matches_synthesis(self):
        cfg = SystemConfig(n_t=4, n_r=4, n_rf=2, n_p=3, n_taps=2, n_blocks=5)
        rng = np.random.default_rng(5)
        frame = make_pilot_frame(cfg, rng)
        H = crandn(rng, cfg.n_subcarriers, 4, 4)
        y = synthesize_pilot_measurements(H, frame, 0.0)
        Phi = pilot_sensing_matrices(frame)
        for k in range(cfg.n_subcarriers):
            np.testing.assert_allclose(Phi[k] @ vec(H[k]), y[k], atol=1e-12)


class TestNoise:
    def test_complex_normal_convention(self):
        z = complex_normal(np.random.default_rng(0), 200_000, 2.0)
        assert np.var(z.real) == pytest.approx(1.0, rel=0.02)
        assert np.mean(np.abs(z) ** 2) == pytest.approx(2.0, rel=0.02)

    def test_empirical_pilot_covariance(self):
        rng = np.random.default_rng(1)
        K, n_r, n_rf, s2 = 8, 4, 2, 0.3
        W = generate_rf_codebook(rng, n_r, n_rf, 2)
        v = np.stack([antenna_noise_fd(rng, (K, n_r), s2)[3] @ W.conj() for _ in range(10_000)])
        emp = v.T @ v.conj() / len(v)
        R = combined_noise_covariance(W, s2, K)
        assert np.linalg.norm(emp - R) / np.linalg.norm(R) < 0.05

    def test_pilot_noise_covariance_psd(self):
        frame = make_pilot_frame(SystemConfig(n_t=4, n_r=4, n_rf=2, n_p=3, n_taps=2, n_blocks=3),
                                 np.random.default_rng(2))
        R = pilot_noise_covariance(frame, 0.1)
        np.testing.assert_allclose(R, R.conj().T)
        assert np.linalg.eigvalsh(R).min() > 0


class TestData:
    def test_scalar_noiseless(self):
        H = np.full((1, 1, 1), 0.7 - 0.2j)
        X = np.full((1, 1, 3), 1j)
        F, W = np.array([[np.exp(0.3j)]]), np.array([[np.exp(-0.4j)]])
        Y, _ = synthesize_data_blocks(H, X, F, W, 0.0)
        np.testing.assert_allclose(Y[0, 0], H[0, 0, 0] * F[0, 0] * np.conj(W[0, 0]) * 1j)

    def test_zero_symbols_pure_noise(self):
        rng = np.random.default_rng(3)
        K, N, n_rf, n_d, s2 = 4, 3, 2, 5000, 0.2
        W = generate_rf_codebook(rng, N, n_rf, 2)
        Y, R_d = synthesize_data_blocks(crandn(rng, K, N, N), np.zeros((K, n_rf, n_d)),
                                        generate_rf_codebook(rng, N, n_rf, 2), W, s2, rng)
        emp = Y[1] @ Y[1].conj().T / n_d
        assert np.linalg.norm(emp - R_d) / np.linalg.norm(R_d) < 0.05

    def test_data_sensing_identity(self):
        rng = np.random.default_rng(4)
        K, n_t, n_r, n_rf, n_d = 3, 4, 3, 2, 5
        H = crandn(rng, K, n_r, n_t)
        X = crandn(rng, K, n_rf, n_d)
        F = generate_rf_codebook(rng, n_t, n_rf, 2)
        W = generate_rf_codebook(rng, n_r, n_rf, 2)
        Y, _ = synthesize_data_blocks(H, X, F, W, 0.0)
        for k in range(K):
            np.testing.assert_allclose(data_sensing(X[k], F, W) @ vec(H[k]), Y[k].T.reshape(-1),
                                       atol=1e-12)


class TestFrames:
    def test_config(self):
        cfg = SystemConfig()
        assert cfg.n_subcarriers == cfg.n_p + cfg.n_taps - 1
        assert cfg.n_s == cfg.n_rf
        with pytest.raises(ValueError):
            SystemConfig(n_rf=20)
        with pytest.raises(ValueError):
            SystemConfig(constellation="16qam")

    def test_pilot_frame(self):
        cfg = SystemConfig(n_t=8, n_r=8, n_rf=2, n_p=4, n_taps=3, n_blocks=6)
        fr = make_pilot_frame(cfg, np.random.default_rng(0))
        assert fr.F.shape == (6, 8, 2) and fr.U.shape == (6, 6, 2)
        np.testing.assert_allclose(np.abs(fr.pilots), 1.0)
        np.testing.assert_allclose(fr.U[2], np.fft.fft(zero_pad(fr.pilots[2], 6), axis=0))

    def test_data_frame(self):
        cfg = SystemConfig(n_t=8, n_r=8, n_rf=2, n_p=4, n_taps=3, n_data=7)
        d = make_data_frame(cfg, np.random.default_rng(0))
        assert d.X.shape == (6, 2, 7) and d.F.shape == (8, 2)
        np.testing.assert_array_equal(QPSK.modulate(d.indices), d.X)

    def test_measure(self):
        cfg = SystemConfig(n_t=4, n_r=4, n_rf=2, n_p=3, n_taps=2, n_blocks=4, n_data=3)
        H = crandn(np.random.default_rng(0), cfg.n_subcarriers, 4, 4)
        fr, d, meas = measure(H, cfg, np.random.default_rng(1))
        assert meas.y_p.shape == (4, 8) and meas.Y_d.shape == (4, 2, 3)
        assert meas.R_v.shape == (6 + 8, 6 + 8)

    def test_zero_pad_too_long(self):
        with pytest.raises(ValueError):
            zero_pad(np.ones(5), 3)


class TestConstellation:
    def test_unit_power_and_gray(self):
        for c in (QPSK, PSK8):
            np.testing.assert_allclose(np.abs(c.points), 1.0)
            lab = c.labels
            assert sorted(lab) == list(range(c.order))
            for i in range(c.order):
                assert bin(lab[i] ^ lab[(i + 1) % c.order]).count("1") == 1

    def test_roundtrip(self):
        idx = np.arange(8)
        np.testing.assert_array_equal(PSK8.demodulate_indices(PSK8.modulate(idx)), idx)

    def test_ties_lowest_index(self):
        c = Constellation(4, 0.0)
        # the origin is equidistant from every point
        assert c.demodulate_indices(0.0) == 0
        assert PSK8.demodulate_indices(np.zeros(3)).tolist() == [0, 0, 0]

    def test_bit_errors(self):
        assert QPSK.bit_errors([0, 1], [0, 2]) == 1
        assert QPSK.bit_errors([1], [3]) == 2
        assert QPSK.bit_errors([0], [2]) == 2

    def test_lookup(self):
        assert get_constellation("QPSK") is QPSK
        with pytest.raises(ValueError):
            get_constellation("64qam")
        with pytest.raises(ValueError):
            Constellation(3)
