import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thzbl._linalg import unvec, vec
from thzbl.channel import steering_vector
from thzbl.frame import SystemConfig, make_pilot_frame, pilot_sensing_matrices, synthesize_pilot_measurements
from thzbl.sparsemodel import (AngularGrid, DictionaryPair, array_dictionary, beamspace_to_channel,
                               build_dictionaries, channel_to_beamspace, equivalent_sensing,
                               kron_sensing, make_grid, pilot_equivalent_sensing,
                               sparsifying_dictionary, subcarrier_dictionaries)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestGrid:
    def test_small(self):
        np.testing.assert_array_equal(make_grid(2).cosines, [-1, 0])
        np.testing.assert_array_equal(make_grid(4).cosines, [-1, -0.5, 0, 0.5])

    def test_spacing(self):
        c = make_grid(64).cosines
        np.testing.assert_allclose(np.diff(c), 2 / 64)
        assert c.max() == pytest.approx(1 - 2 / 64)

    def test_angles(self):
        g = make_grid(8)
        np.testing.assert_allclose(np.cos(g.angles), g.cosines, atol=1e-15)

    def test_invalid(self):
        with pytest.raises(ValueError):
            AngularGrid(0)


class TestDictionaries:
    @pytest.mark.parametrize("N", [4, 8, 16])
    def test_orthogonal_at_carrier(self, N):
        A = array_dictionary(make_grid(N), 1.0, N)
        np.testing.assert_allclose(A @ A.conj().T, np.eye(N), atol=1e-10)

    def test_oversampled_frame(self):
        A = array_dictionary(make_grid(16), 1.0, 8)
        np.testing.assert_allclose(A @ A.conj().T, 2 * np.eye(8), atol=1e-10)

    @given(st.floats(0.8, 1.2), st.integers(1, 32), st.integers(1, 32))
    def test_unit_columns(self, delta, N, G):
        A = array_dictionary(make_grid(G), delta, N)
        np.testing.assert_allclose(np.linalg.norm(A, axis=0), 1.0)

    def test_columns_are_steering_vectors(self):
        g = make_grid(8)
        A = array_dictionary(g, 1.02, 6)
        np.testing.assert_allclose(A[:, 3], steering_vector(g.angles[3], 1.02, 6))

    def test_cache_read_only(self):
        A = array_dictionary(make_grid(8), 1.0, 4)
        assert A is array_dictionary(make_grid(8), 1.0, 4)
        with pytest.raises(ValueError):
            A[0, 0] = 0

    def test_subcarrier_pairs(self):
        pairs = subcarrier_dictionaries(make_grid(4), make_grid(6), [0.99, 1.0, 1.01], 3, 5)
        assert len(pairs) == 3
        assert pairs[0].shape == (6, 4)
        assert pairs[0].A_R.shape == (5, 6)


class TestPsi:
    def test_scalar(self):
        pair = DictionaryPair(np.array([[0.3j]]), np.array([[0.5 + 0.1j]]))
        np.testing.assert_allclose(sparsifying_dictionary(pair), [[np.conj(0.3j) * (0.5 + 0.1j)]])

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0.9, 1.1))
    def test_vec_identity(self, seed, delta):
        rng = np.random.default_rng(seed)
        pair = build_dictionaries(make_grid(5), make_grid(7), delta, 3, 4)
        B = crandn(rng, 7, 5)
        np.testing.assert_allclose(sparsifying_dictionary(pair) @ vec(B),
                                   vec(pair.A_R @ B @ pair.A_T.conj().T), atol=1e-12)
        np.testing.assert_allclose(beamspace_to_channel(vec(B), pair), pair.A_R @ B @ pair.A_T.conj().T,
                                   atol=1e-12)

    def test_zero(self):
        pair = build_dictionaries(make_grid(4), make_grid(4), 1.0, 4, 4)
        assert not np.any(sparsifying_dictionary(pair) @ np.zeros(16))
        assert not np.any(beamspace_to_channel(np.zeros(16), pair))

    def test_vec_unvec(self):
        M = crandn(np.random.default_rng(0), 3, 4)
        np.testing.assert_array_equal(unvec(vec(M), 3, 4), M)

    def test_wrong_length(self):
        pair = build_dictionaries(make_grid(4), make_grid(4), 1.0, 4, 4)
        with pytest.raises(ValueError):
            beamspace_to_channel(np.zeros(15), pair)


class TestEquivalentSensing:
    def test_identity_psi(self):
        Phi = crandn(np.random.default_rng(0), 3, 4)
        np.testing.assert_array_equal(equivalent_sensing(Phi, np.eye(4)), Phi)
        assert not np.any(equivalent_sensing(np.zeros((3, 4)), crandn(np.random.default_rng(1), 4, 5)))

    def test_inner_dim(self):
        with pytest.raises(ValueError):
            equivalent_sensing(np.zeros((3, 4)), np.zeros((5, 2)))

    def test_kron_matches_dense(self):
        rng = np.random.default_rng(2)
        cfg = SystemConfig(n_t=4, n_r=4, n_rf=2, n_p=3, n_taps=2, n_blocks=5)
        frame = make_pilot_frame(cfg, rng)
        Phi = pilot_sensing_matrices(frame)
        pairs = subcarrier_dictionaries(make_grid(8), make_grid(6), [0.99, 1.0, 1.005, 1.01], 4, 4)
        for k in range(4):
            np.testing.assert_allclose(pilot_equivalent_sensing(frame, k, pairs[k]),
                                       Phi[k] @ sparsifying_dictionary(pairs[k]), atol=1e-13)

    def test_end_to_end(self):
        rng = np.random.default_rng(3)
        cfg = SystemConfig(n_t=4, n_r=4, n_rf=2, n_p=3, n_taps=2, n_blocks=5)
        frame = make_pilot_frame(cfg, rng)
        K = cfg.n_subcarriers
        pairs = subcarrier_dictionaries(make_grid(4), make_grid(4), np.linspace(0.99, 1.01, K), 4, 4)
        h_b = np.zeros((K, 16), dtype=complex)
        h_b[:, [2, 9]] = crandn(rng, K, 2)
        H = np.stack([beamspace_to_channel(h_b[k], pairs[k]) for k in range(K)])
        y = synthesize_pilot_measurements(H, frame, 0.0)
        Phi = pilot_sensing_matrices(frame)
        for k in range(K):
            Pt = pilot_equivalent_sensing(frame, k, pairs[k])
            np.testing.assert_allclose(Pt @ h_b[k], y[k], atol=1e-10)
            np.testing.assert_allclose(Phi[k] @ vec(H[k]), y[k], atol=1e-10)

    def test_kron_sensing_shape(self):
        pair = build_dictionaries(make_grid(5), make_grid(6), 1.0, 3, 4)
        W = crandn(np.random.default_rng(0), 4, 2)
        assert kron_sensing(np.ones((1, 3)), W, pair).shape == (2, 30)


class TestRoundTrip:
    def test_on_grid_single_path(self):
        N = 8
        g = make_grid(N)
        pair = build_dictionaries(g, g, 1.0, N, N)
        gain = 0.7 - 0.4j
        H = gain * np.outer(steering_vector(g.angles[3], 1.0, N), steering_vector(g.angles[5], 1.0, N).conj())
        h_b = channel_to_beamspace(H, pair)
        assert np.count_nonzero(np.abs(h_b) > 1e-10) == 1
        # column-major index of row 3 (receive), column 5 (transmit)
        assert h_b[5 * N + 3] == pytest.approx(gain)

    def test_oversampled_min_norm(self):
        rng = np.random.default_rng(4)
        pair = build_dictionaries(make_grid(8), make_grid(8), 1.03, 4, 4)
        H = crandn(rng, 4, 4)
        h_b = channel_to_beamspace(H, pair)
        np.testing.assert_allclose(beamspace_to_channel(h_b, pair), H, atol=1e-10)
        ref = np.linalg.lstsq(sparsifying_dictionary(pair), vec(H), rcond=None)[0]
        np.testing.assert_allclose(h_b, ref, atol=1e-10)
