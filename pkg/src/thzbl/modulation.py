"""Unit-power PSK constellations with Gray labelling."""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Constellation:
    """M-ary PSK alphabet.

    Point ``i`` is ``exp(1j * (2 pi i / M + offset))`` and carries the Gray
    label ``i ^ (i >> 1)``.
    """

    order: int
    offset: float = 0.0

    def __post_init__(self):
        if self.order < 2 or self.order & (self.order - 1):
            raise ValueError("order must be a power of two >= 2")

    @property
    def points(self):
        i = np.arange(self.order)
        return np.exp(1j * (2 * np.pi * i / self.order + self.offset))

    @property
    def bits_per_symbol(self):
        return int(np.log2(self.order))

    @property
    def labels(self):
        i = np.arange(self.order)
        return i ^ (i >> 1)

    def sample_indices(self, rng, size):
        return rng.integers(0, self.order, size=size)

    def modulate(self, indices):
        return self.points[np.asarray(indices)]

    def demodulate_indices(self, soft):
        """Nearest-point decisions; ties go to the lowest index."""
        soft = np.asarray(soft)
        d = np.abs(soft[..., None] - self.points) ** 2
        return np.argmin(d, axis=-1)

    def demodulate(self, soft):
        return self.points[self.demodulate_indices(soft)]

    def indices_of(self, symbols):
        return self.demodulate_indices(symbols)

    def bit_errors(self, idx_a, idx_b):
        """Number of differing Gray-label bits between two index arrays."""
        x = self.labels[np.asarray(idx_a)] ^ self.labels[np.asarray(idx_b)]
        return int(sum(((x >> b) & 1).sum() for b in range(self.bits_per_symbol)))


QPSK = Constellation(4, np.pi / 4)
PSK8 = Constellation(8, 0.0)

_NAMED = {"qpsk": QPSK, "8psk": PSK8, "bpsk": Constellation(2, 0.0)}


def get_constellation(name):
    if isinstance(name, Constellation):
        return name
    try:
        return _NAMED[str(name).lower()]
    except KeyError:
        raise ValueError(f"unknown constellation {name!r}; choose from {sorted(_NAMED)}") from None
