"""Angular grids, squint-aware dictionaries and the beamspace channel model."""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._linalg import unvec
from .channel import steering_vector


@dataclass(frozen=True)
class AngularGrid:
    """Uniform grid of direction cosines ``2 t / G - 1``, ``t = 0..G-1``."""

    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("grid size must be >= 1")

    @property
    def cosines(self):
        return 2.0 * np.arange(self.size) / self.size - 1.0

    @property
    def angles(self):
        return np.arccos(self.cosines)


def make_grid(G):
    return AngularGrid(int(G))


@dataclass(frozen=True)
class DictionaryPair:
    A_T: np.ndarray
    A_R: np.ndarray

    @property
    def shape(self):
        return self.A_R.shape[1], self.A_T.shape[1]


@lru_cache(maxsize=256)
def _dictionary(G, n_ant, delta):
    A = steering_vector(AngularGrid(G).angles, delta, n_ant)
    A.setflags(write=False)
    return A


def array_dictionary(grid, delta_k, n_ant):
    """``n_ant x G`` matrix of squinted steering vectors on ``grid`` (cached, read-only)."""
    return _dictionary(grid.size, int(n_ant), float(delta_k))


def build_dictionaries(grid_t, grid_r, delta_k, n_t, n_r):
    return DictionaryPair(array_dictionary(grid_t, delta_k, n_t), array_dictionary(grid_r, delta_k, n_r))


def subcarrier_dictionaries(grid_t, grid_r, deltas, n_t, n_r):
    return [build_dictionaries(grid_t, grid_r, d, n_t, n_r) for d in deltas]


def sparsifying_dictionary(pair):
    """``Psi = conj(A_T) kron A_R`` so that ``Psi vec(H_b) = vec(A_R H_b A_T^H)``."""
    return np.kron(pair.A_T.conj(), pair.A_R)


def equivalent_sensing(Phi, Psi):
    Phi, Psi = np.asarray(Phi), np.asarray(Psi)
    if Phi.shape[-1] != Psi.shape[0]:
        raise ValueError(f"inner dimensions differ: {Phi.shape} vs {Psi.shape}")
    return Phi @ Psi


def kron_sensing(tx_rows, W, pair):
    """``Phi Psi`` for ``Phi = tx_rows kron W^H`` without forming ``Psi``.

    ``tx_rows`` is ``(B, N_T)``; each row is one transmitted vector
    (e.g. ``(F u)^T``). Uses ``(a^T kron W^H)(conj(A_T) kron A_R) =
    (a^T conj(A_T)) kron (W^H A_R)``.
    """
    return np.kron(np.asarray(tx_rows) @ pair.A_T.conj(), W.conj().T @ pair.A_R)


def pilot_equivalent_sensing(frame, k, pair):
    """Stacked ``Psi_tilde_p[k]`` of a training frame."""
    return np.vstack([
        kron_sensing((frame.F[m] @ frame.U[m, k])[None, :], frame.W[m], pair)
        for m in range(frame.n_blocks)
    ])


def beamspace_to_channel(h_b, pair):
    """``A_R unvec(h_b) A_T^H`` with column-major ``unvec``."""
    G_R, G_T = pair.shape
    h_b = np.asarray(h_b)
    if h_b.size != G_R * G_T:
        raise ValueError(f"h_b has length {h_b.size}, expected {G_R * G_T}")
    return pair.A_R @ unvec(h_b, G_R, G_T) @ pair.A_T.conj().T


def channel_to_beamspace(H_k, pair):
    """Minimum-norm least-squares beamspace coefficients of one channel matrix.

    Uses ``pinv(conj(A_T) kron A_R) = pinv(conj(A_T)) kron pinv(A_R)``, i.e.
    ``H_b = pinv(A_R) H pinv(A_T^H)``.
    """
    H_b = np.linalg.pinv(pair.A_R) @ np.asarray(H_k) @ np.linalg.pinv(pair.A_T.conj().T)
    return H_b.reshape(-1, order="F")
