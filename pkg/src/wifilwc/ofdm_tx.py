"""Baseband 802.11a OFDM transmitter.

Chain per 96-byte tagged payload: header generator, repack to 2-bit (QPSK) or
1-bit (BPSK) symbols, constellation map, MUX, carrier allocation with two sync
words, 64-point IFFT, 16-sample cyclic prefix and a constant gain.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .carriers import CP_LEN, DEFAULT_PLAN, FFT_SIZE, SYMBOL_LEN, SYNC_WORDS, CarrierPlan
from .errors import InvalidSymbol, LengthMismatch, NonPositiveGain

PAYLOAD_BYTES = 96
HEADER_LEN = 48
SAMPLE_RATE_HZ = 20e6
GAIN_RANGE = (0.01, 0.03)


class Modulation(str, enum.Enum):
    BPSK = "BPSK"
    QPSK = "QPSK"

    @property
    def bits_per_symbol(self):
        return 1 if self is Modulation.BPSK else 2


@dataclass(frozen=True)
class TaggedPayload:
    bytes: bytes
    frame_index: int

    def __post_init__(self):
        if len(self.bytes) != PAYLOAD_BYTES:
            raise LengthMismatch(f"tagged payload must be {PAYLOAD_BYTES} bytes")


@dataclass(frozen=True, eq=False)
class IqBuffer:
    """Complex baseband samples stored as complex64 (two 32-bit floats)."""

    samples: np.ndarray
    sample_rate_hz: float = SAMPLE_RATE_HZ

    def __post_init__(self):
        s = np.ascontiguousarray(self.samples, dtype=np.complex64).reshape(-1)
        if not np.all(np.isfinite(s)):
            raise ValueError("IQ samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return len(self.samples)

    def __eq__(self, other):
        return (isinstance(other, IqBuffer) and self.sample_rate_hz == other.sample_rate_hz
                and np.array_equal(self.samples, other.samples))

    def to_bytes(self) -> bytes:
        return self.samples.astype("<c8").tobytes()

    @classmethod
    def from_bytes(cls, raw: bytes, sample_rate_hz=SAMPLE_RATE_HZ) -> "IqBuffer":
        if len(raw) % 8:
            raise LengthMismatch("IQ file length must be a multiple of 8 bytes")
        return cls(np.frombuffer(raw, dtype="<c8"), sample_rate_hz)

    def write(self, path):
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def read(cls, path, sample_rate_hz=SAMPLE_RATE_HZ):
        return cls.from_bytes(Path(path).read_bytes(), sample_rate_hz)


def tag_stream(data: bytes) -> list[TaggedPayload]:
    """Zero-pad ``data`` to a multiple of 96 bytes and cut it into tagged payloads."""
    n = -(-len(data) // PAYLOAD_BYTES)
    padded = bytes(data) + bytes(n * PAYLOAD_BYTES - len(data))
    return [TaggedPayload(padded[i * PAYLOAD_BYTES:(i + 1) * PAYLOAD_BYTES], i) for i in range(n)]


def crc8(data: bytes, poly=0x07, init=0x00) -> int:
    crc = init
    for byte in data:
        crc ^= byte
        for _ in range(8):
            crc = ((crc << 1) ^ poly) & 0xFF if crc & 0x80 else (crc << 1) & 0xFF
    return crc


def _bits_lsb_first(value, n):
    return [(value >> i) & 1 for i in range(n)]


def header_word(length, frame_index):
    """24-bit header word: 12-bit length, then 12-bit frame index."""
    return (length & 0xFFF) | ((frame_index % 4096) << 12)


def generate_header(p: TaggedPayload) -> bytes:
    """48 header bytes, one bit each: length, index, CRC-8, zero fill."""
    word = header_word(len(p.bytes), p.frame_index)
    crc = crc8(word.to_bytes(3, "little"))
    bits = _bits_lsb_first(word, 24) + _bits_lsb_first(crc, 8)
    return bytes(bits + [0] * (HEADER_LEN - len(bits)))


def parse_header(bits) -> tuple[int, int, bool]:
    """Inverse of :func:`generate_header`: (length, frame_index, crc_ok)."""
    bits = [int(b) & 1 for b in bits]
    word = sum(b << i for i, b in enumerate(bits[:24]))
    crc = sum(b << i for i, b in enumerate(bits[24:32]))
    ok = crc == crc8(word.to_bytes(3, "little")) and not any(bits[32:HEADER_LEN])
    return word & 0xFFF, word >> 12, ok


def repack_bits(b: int) -> tuple[int, int, int, int]:
    """Split a byte into four 2-bit values, least-significant pair first."""
    if not 0 <= b <= 0xFF:
        raise ValueError("byte out of range")
    return tuple((b >> (2 * i)) & 3 for i in range(4))


def repack_array(data: bytes, bits_per_symbol: int) -> np.ndarray:
    """Vectorized repack: each byte becomes 8/bits_per_symbol values, LSB first."""
    a = np.frombuffer(bytes(data), dtype=np.uint8)
    shifts = np.arange(0, 8, bits_per_symbol, dtype=np.uint8)
    return ((a[:, None] >> shifts) & ((1 << bits_per_symbol) - 1)).reshape(-1).astype(np.uint8)


_INV_SQRT2 = 1 / np.sqrt(2)
BPSK_POINTS = np.array([-1 + 0j, 1 + 0j])
QPSK_POINTS = np.array([-1 - 1j, 1 - 1j, -1 + 1j, 1 + 1j]) * _INV_SQRT2


def map_bpsk(b: int) -> complex:
    if b not in (0, 1):
        raise InvalidSymbol(f"BPSK input must be 0 or 1, got {b}")
    return complex(BPSK_POINTS[b])


def map_qpsk(b: int) -> complex:
    if b not in (0, 1, 2, 3):
        raise InvalidSymbol(f"QPSK input must be 0..3, got {b}")
    return complex(QPSK_POINTS[b])


def map_symbols(values, modulation) -> np.ndarray:
    values = np.asarray(values)
    points = BPSK_POINTS if Modulation(modulation) is Modulation.BPSK else QPSK_POINTS
    if values.size and (values.min() < 0 or values.max() >= len(points)):
        raise InvalidSymbol(f"symbol values outside 0..{len(points) - 1}")
    return points[values.astype(int)]


def payload_symbol_count(modulation) -> int:
    return PAYLOAD_BYTES * 8 // Modulation(modulation).bits_per_symbol


def mux(header_syms, payload_syms) -> np.ndarray:
    """Header symbols first, payload second.

    The payload is 384 symbols for QPSK or 768 for BPSK.
    """
    header_syms = np.asarray(header_syms, dtype=complex)
    payload_syms = np.asarray(payload_syms, dtype=complex)
    if len(header_syms) != HEADER_LEN:
        raise LengthMismatch(f"header must be {HEADER_LEN} symbols, got {len(header_syms)}")
    if len(payload_syms) not in (payload_symbol_count("QPSK"), payload_symbol_count("BPSK")):
        raise LengthMismatch(f"payload must be 384 or 768 symbols, got {len(payload_syms)}")
    return np.concatenate([header_syms, payload_syms])


def allocate_carriers(syms, plan: CarrierPlan = DEFAULT_PLAN, sync_words=SYNC_WORDS) -> np.ndarray:
    """Place the sync words and data symbols onto 64-bin vectors.

    Returns an ``(n, 64)`` array in FFT-bin order: the two sync words, then one
    vector per ``plan.n_data`` data symbols with pilots inserted.
    """
    syms = np.asarray(syms, dtype=complex)
    if len(syms) == 0 or len(syms) % plan.n_data:
        raise LengthMismatch(f"{len(syms)} symbols do not fill whole OFDM symbols")
    if len(sync_words) != 2 or any(len(w) != plan.fft_size for w in sync_words):
        raise LengthMismatch("need two 64-entry sync words")
    n_data = len(syms) // plan.n_data
    out = np.zeros((2 + n_data, plan.fft_size), dtype=complex)
    out[0] = sync_words[0]
    out[1] = sync_words[1]
    body = out[2:]
    body[:, plan.data_bins] = syms.reshape(n_data, plan.n_data)
    body[:, plan.pilot_bins] = np.asarray(plan.pilot_values)
    return out


def _check64(x):
    x = np.asarray(x, dtype=complex)
    if x.shape[-1] != FFT_SIZE:
        raise LengthMismatch(f"expected {FFT_SIZE} samples, got {x.shape[-1]}")
    return x


def ifft64(freq) -> np.ndarray:
    """Unitary 64-point IDFT (1/sqrt(64) scaling); works along the last axis."""
    return np.fft.ifft(_check64(freq), norm="ortho")


def add_cp(sym) -> np.ndarray:
    sym = _check64(sym)
    return np.concatenate([sym[..., FFT_SIZE - CP_LEN:], sym], axis=-1)


def apply_gain(buf: IqBuffer, g: float) -> IqBuffer:
    if not g > 0:
        raise NonPositiveGain(f"gain must be positive, got {g}")
    return IqBuffer(buf.samples * np.float32(g), buf.sample_rate_hz)


def frame_symbols(p: TaggedPayload, modulation) -> np.ndarray:
    """Header plus payload constellation points, the MUX output."""
    modulation = Modulation(modulation)
    header = map_symbols(np.frombuffer(generate_header(p), dtype=np.uint8), Modulation.BPSK)
    payload = map_symbols(repack_array(p.bytes, modulation.bits_per_symbol), modulation)
    return mux(header, payload)


def frame_length(modulation, plan: CarrierPlan = DEFAULT_PLAN) -> int:
    """Samples per transmitted frame: 880 for QPSK, 1520 for BPSK."""
    n_syms = HEADER_LEN + payload_symbol_count(modulation)
    return (2 + n_syms // plan.n_data) * SYMBOL_LEN


def transmit_frame(p: TaggedPayload, modulation="QPSK", plan: CarrierPlan = DEFAULT_PLAN,
                   gain: float = 1.0) -> IqBuffer:
    vectors = allocate_carriers(frame_symbols(p, modulation), plan)
    time = add_cp(ifft64(vectors)).reshape(-1)
    return apply_gain(IqBuffer(time), gain)
