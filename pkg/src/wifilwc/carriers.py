"""802.11a 64-subcarrier plan and the two synchronization words.

Vectors handed to the IFFT are in FFT-bin order: subcarrier label ``k`` lives at
bin ``k mod 64``. :func:`by_label` reorders a vector to labels -32..31.
"""

from dataclasses import dataclass

import numpy as np

FFT_SIZE = 64
CP_LEN = 16
SYMBOL_LEN = FFT_SIZE + CP_LEN
LABELS = tuple(range(-32, 32))

PILOT_LABELS = (-21, -7, 7, 21)
PILOT_VALUES = (1.0, 1.0, 1.0, -1.0)
NULL_LABELS = tuple(range(-32, -26)) + (0,) + tuple(range(27, 32))
ACTIVE_LABELS = tuple(k for k in range(-26, 27) if k != 0)
DATA_LABELS = tuple(k for k in ACTIVE_LABELS if k not in PILOT_LABELS)


def label_to_bin(label):
    return label % FFT_SIZE


def by_label(vec):
    """Reorder a 64-vector from FFT-bin order to label order -32..31."""
    return np.fft.fftshift(np.asarray(vec))


@dataclass(frozen=True)
class CarrierPlan:
    fft_size: int = FFT_SIZE
    data_indices: tuple = DATA_LABELS
    pilot_indices: tuple = PILOT_LABELS
    pilot_values: tuple = PILOT_VALUES
    null_indices: tuple = NULL_LABELS

    def __post_init__(self):
        groups = [set(self.data_indices), set(self.pilot_indices), set(self.null_indices)]
        union = set().union(*groups)
        if sum(len(g) for g in groups) != len(union) or union != set(range(-32, 32)):
            raise ValueError("data, pilot and null labels must partition -32..31")
        if 0 not in self.null_indices:
            raise ValueError("DC must be a null subcarrier")

    @property
    def data_bins(self):
        return np.array([label_to_bin(k) for k in self.data_indices])

    @property
    def pilot_bins(self):
        return np.array([label_to_bin(k) for k in self.pilot_indices])

    @property
    def null_bins(self):
        return np.array([label_to_bin(k) for k in self.null_indices])

    @property
    def n_data(self):
        return len(self.data_indices)


DEFAULT_PLAN = CarrierPlan()


def scrambler_bits(n, state=0x7F):
    """Output of the 802.11 x^7 + x^4 + 1 scrambler run on zeros."""
    out = np.empty(n, dtype=np.uint8)
    for i in range(n):
        bit = ((state >> 6) ^ (state >> 3)) & 1
        state = ((state << 1) | bit) & 0x7F
        out[i] = bit
    return out


def _qpsk_from_bits(bits):
    b = bits.reshape(-1, 2).astype(float)
    return ((2 * b[:, 0] - 1) + 1j * (2 * b[:, 1] - 1)) / np.sqrt(2)


def _make_sync_words():
    bits = scrambler_bits(2 * (26 + 52))
    m1 = np.zeros(FFT_SIZE, dtype=complex)
    even = [k for k in ACTIVE_LABELS if k % 2 == 0]
    # even labels only: the time-domain symbol is two identical 32-sample halves
    m1[[label_to_bin(k) for k in even]] = np.sqrt(2) * _qpsk_from_bits(bits[:52])
    m2 = np.zeros(FFT_SIZE, dtype=complex)
    m2[[label_to_bin(k) for k in ACTIVE_LABELS]] = _qpsk_from_bits(bits[52:])
    m1.setflags(write=False)
    m2.setflags(write=False)
    return m1, m2


SYNC_M1, SYNC_M2 = _make_sync_words()
SYNC_WORDS = (SYNC_M1, SYNC_M2)
