"""Baseband 802.11a OFDM receiver.

Schmidl-Cox timing and fractional CFO on the half-repeated sync word M1, fine
timing by cross-correlation against M2, channel estimation, equalization,
hard-decision demapping and header CRC check.

Two equalizers are available. ``equalize`` is the per-symbol pilot estimator
(least squares at the four pilots, linear interpolation across labels). The
frame decoder defaults to a preamble estimator that fits a short FIR channel to
M1 and M2, then tracks common phase with the pilots; pilot interpolation alone
cannot follow a channel whose delay spread approaches the cyclic prefix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .carriers import (
    CP_LEN,
    DEFAULT_PLAN,
    FFT_SIZE,
    SYMBOL_LEN,
    SYNC_M1,
    SYNC_M2,
    CarrierPlan,
)
from .errors import DecodeFailure, InvalidSymbol, LengthMismatch, NoFrame, ZeroPilot
from .ofdm_tx import (
    HEADER_LEN,
    PAYLOAD_BYTES,
    IqBuffer,
    Modulation,
    frame_length,
    ifft64,
    parse_header,
    payload_symbol_count,
)

HALF = FFT_SIZE // 2
DEFAULT_THRESHOLD = 0.8
MAX_CHANNEL_TAPS = CP_LEN + 1
TAP_KEEP_RATIO = 0.05

_M2_TIME = ifft64(SYNC_M2)


@dataclass(frozen=True)
class SyncResult:
    frame_start: int
    cfo_estimate: float
    metric_peak: float


@dataclass(frozen=True, eq=False)
class ChannelEstimate:
    gains: np.ndarray          # 64 bins, FFT order
    source_pilots: np.ndarray  # 4 pilot measurements (or empty for preamble fits)


def timing_metric(samples, half=HALF):
    """Normalized autocorrelation ``|P(d)| / R(d)`` and the raw ``P(d)``.

    ``P(d)`` correlates the window at ``d`` with the one ``half`` samples later;
    ``R(d)`` is the mean energy of the two windows, so the metric lies in [0, 1].
    """
    r = np.asarray(samples, dtype=complex)
    n = len(r) - 2 * half + 1
    if n <= 0:
        return np.zeros(0), np.zeros(0, dtype=complex)
    prod = np.conj(r[:-half]) * r[half:]
    cp = np.concatenate([[0], np.cumsum(prod)])
    p = cp[half:half + n] - cp[:n]
    ce = np.concatenate([[0], np.cumsum(np.abs(r) ** 2)])
    e = ce[half:] - ce[:-half]
    energy = 0.5 * (e[:n] + e[half:half + n])
    tiny = 1e-30 + 1e-12 * (energy.max() if energy.size else 0)
    metric = np.abs(p) / np.maximum(energy, tiny)
    return np.minimum(metric, 1.0), p


def schmidl_sync(rx: IqBuffer, threshold: float = DEFAULT_THRESHOLD) -> SyncResult:
    """Locate the M1 sync word and estimate fractional CFO.

    The metric plateaus over the cyclic prefix of M1; the frame start is the
    plateau centre minus half the prefix length. CFO, in subcarrier spacings,
    comes from the phase of ``P`` accumulated over the plateau.
    """
    samples = rx.samples if isinstance(rx, IqBuffer) else np.asarray(rx)
    metric, p = timing_metric(samples)
    if metric.size == 0:
        raise NoFrame("buffer shorter than one sync word")
    peak_idx = int(np.argmax(metric))
    peak = float(metric[peak_idx])
    if peak < threshold:
        raise NoFrame(f"timing metric peak {peak:.3f} below threshold {threshold}")
    level = 0.9 * peak
    lo = peak_idx
    while lo > 0 and metric[lo - 1] >= level:
        lo -= 1
    hi = peak_idx
    while hi + 1 < metric.size and metric[hi + 1] >= level:
        hi += 1
    centre = (lo + hi) // 2
    cfo = float(np.angle(p[lo:hi + 1].sum()) / np.pi)
    return SyncResult(frame_start=max(centre - CP_LEN // 2, 0), cfo_estimate=cfo, metric_peak=peak)


def correct_cfo(samples, frac):
    n = np.arange(len(samples))
    return np.asarray(samples, dtype=complex) * np.exp(-2j * np.pi * frac * n / FFT_SIZE)


def fine_timing(samples, coarse_start, search=CP_LEN):
    """Refine a frame start by correlating against the known M2 waveform."""
    best, best_val = coarse_start, -1.0
    m2 = np.conj(_M2_TIME)
    for start in range(max(coarse_start - search, 0), coarse_start + search + 1):
        pos = start + SYMBOL_LEN + CP_LEN
        seg = samples[pos:pos + FFT_SIZE]
        if len(seg) < FFT_SIZE:
            break
        val = abs(np.dot(m2, seg))
        if val > best_val:
            best, best_val = start, val
    return best


def remove_cp(sym80) -> np.ndarray:
    sym80 = np.asarray(sym80)
    if sym80.shape[-1] != SYMBOL_LEN:
        raise LengthMismatch(f"expected {SYMBOL_LEN} samples, got {sym80.shape[-1]}")
    return sym80[..., CP_LEN:]


def fft64(time) -> np.ndarray:
    """Unitary 64-point DFT (1/sqrt(64) scaling); works along the last axis."""
    time = np.asarray(time, dtype=complex)
    if time.shape[-1] != FFT_SIZE:
        raise LengthMismatch(f"expected {FFT_SIZE} samples, got {time.shape[-1]}")
    return np.fft.fft(time, norm="ortho")


def _interp_gains(h_pilots, plan):
    labels = np.arange(-32, 32)
    order = np.argsort(plan.pilot_indices)
    xp = np.asarray(plan.pilot_indices, dtype=float)[order]
    hp = np.asarray(h_pilots)[order]
    # np.interp holds the edge values flat outside the pilot span
    re = np.interp(labels, xp, hp.real)
    im = np.interp(labels, xp, hp.imag)
    return np.fft.ifftshift(re + 1j * im)


def equalize(sym_freq, plan: CarrierPlan = DEFAULT_PLAN):
    """Pilot least-squares estimate, linearly interpolated, applied to the data bins.

    Returns the equalized data symbols in transmit fill order and the estimate.
    """
    y = np.asarray(sym_freq, dtype=complex)
    if y.shape != (FFT_SIZE,):
        raise LengthMismatch(f"expected {FFT_SIZE} bins, got {y.shape}")
    received = y[plan.pilot_bins]
    if np.any(np.abs(received) < 1e-12):
        raise ZeroPilot("pilot subcarrier carries no energy")
    h_pilots = received / np.asarray(plan.pilot_values)
    gains = _interp_gains(h_pilots, plan)
    est = ChannelEstimate(gains=gains, source_pilots=h_pilots)
    return y[plan.data_bins] / gains[plan.data_bins], est


def _tap_matrix(bins, taps):
    labels = np.where(bins >= 32, bins - 64, bins)
    return np.exp(-2j * np.pi * np.outer(labels, taps) / FFT_SIZE)


def estimate_channel_preamble(y_m1, y_m2, max_taps=MAX_CHANNEL_TAPS, keep_ratio=TAP_KEEP_RATIO):
    """Fit a sparse FIR channel (delays 0..max_taps-1) to the two sync words.

    A full fit picks out the significant taps (power above ``keep_ratio`` of the
    strongest); a second least-squares fit over those taps gives the estimate.
    """
    bins1 = np.flatnonzero(SYNC_M1)
    bins2 = np.flatnonzero(SYNC_M2)
    bins = np.concatenate([bins1, bins2])
    x = np.concatenate([SYNC_M1[bins1], SYNC_M2[bins2]])
    y = np.concatenate([np.asarray(y_m1)[bins1], np.asarray(y_m2)[bins2]])
    taps = np.arange(max_taps)
    h, *_ = np.linalg.lstsq(x[:, None] * _tap_matrix(bins, taps), y, rcond=None)
    power = np.abs(h) ** 2
    keep = taps[power >= keep_ratio * power.max()] if power.max() > 0 else taps[:1]
    h_keep, *_ = np.linalg.lstsq(x[:, None] * _tap_matrix(bins, keep), y, rcond=None)
    gains = _tap_matrix(np.arange(FFT_SIZE), keep) @ h_keep
    return ChannelEstimate(gains=gains, source_pilots=np.zeros(0, dtype=complex))


def common_phase(y_syms, est, plan):
    """Per-symbol phase from the pilots, smoothed as a linear drift."""
    ref = est.gains[plan.pilot_bins] * np.asarray(plan.pilot_values)
    z = y_syms[:, plan.pilot_bins] @ np.conj(ref)
    if len(z) < 2:
        return np.angle(z)
    step = np.angle(np.sum(z[1:] * np.conj(z[:-1])))
    k = np.arange(1, len(z) + 1)
    offset = np.angle(np.sum(z * np.exp(-1j * step * k)))
    return offset + step * k


def demap(sym: complex, modulation) -> int:
    """Nearest constellation point; ties go to the lower byte value."""
    return int(demap_array(np.array([sym]), modulation)[0])


def demap_array(syms, modulation) -> np.ndarray:
    syms = np.asarray(syms)
    i_bit = (syms.real > 0).astype(np.uint8)
    if Modulation(modulation) is Modulation.BPSK:
        return i_bit
    return i_bit + 2 * (syms.imag > 0).astype(np.uint8)


def unpack_bits(quads) -> int:
    """Inverse of ``repack_bits``: four 2-bit values, LSB pair first, to one byte."""
    quads = list(quads)
    if len(quads) != 4:
        raise LengthMismatch("expected four 2-bit values")
    if any(not 0 <= q <= 3 for q in quads):
        raise InvalidSymbol(f"2-bit values must be 0..3, got {quads}")
    return sum(q << (2 * i) for i, q in enumerate(quads))


def unpack_array(values, bits_per_symbol) -> bytes:
    v = np.asarray(values, dtype=np.uint8).reshape(-1, 8 // bits_per_symbol)
    shifts = np.arange(0, 8, bits_per_symbol, dtype=np.uint8)
    return (v << shifts).sum(axis=1).astype(np.uint8).tobytes()


def compute_ber(sent: bytes, received: bytes) -> float:
    if len(sent) != len(received):
        raise LengthMismatch("sent and received lengths differ")
    if not sent:
        return 0.0
    return bit_errors(sent, received) / (8 * len(sent))


def bit_errors(sent: bytes, received: bytes) -> int:
    a = np.frombuffer(bytes(sent), dtype=np.uint8)
    b = np.frombuffer(bytes(received), dtype=np.uint8)
    return int(np.unpackbits(a ^ b).sum())


@dataclass(frozen=True, eq=False)
class RxFrame:
    payload: bytes
    header_ok: bool
    frame_index: int
    length: int
    sync: SyncResult
    data_symbols: np.ndarray


def demodulate_frame(rx: IqBuffer, modulation="QPSK", plan: CarrierPlan = DEFAULT_PLAN,
                     threshold: float = DEFAULT_THRESHOLD, equalizer: str = "preamble") -> RxFrame:
    modulation = Modulation(modulation)
    try:
        sync = schmidl_sync(rx, threshold)
    except NoFrame as exc:
        raise DecodeFailure(f"no sync: {exc}") from exc
    samples = correct_cfo(rx.samples, sync.cfo_estimate)
    start = fine_timing(samples, sync.frame_start)
    n_total = frame_length(modulation, plan)
    if start + n_total > len(samples):
        raise DecodeFailure(f"buffer ends {start + n_total - len(samples)} samples early")
    blocks = samples[start:start + n_total].reshape(-1, SYMBOL_LEN)
    y = fft64(remove_cp(blocks))
    data_freq = y[2:]
    if equalizer == "preamble":
        est = estimate_channel_preamble(y[0], y[1])
        phase = common_phase(data_freq, est, plan)
        eq = data_freq[:, plan.data_bins] / (est.gains[plan.data_bins] * np.exp(1j * phase)[:, None])
    elif equalizer == "pilot":
        try:
            eq = np.stack([equalize(sym, plan)[0] for sym in data_freq])
        except ZeroPilot as exc:
            raise DecodeFailure(str(exc)) from exc
    else:
        raise ValueError(f"unknown equalizer {equalizer!r}")
    syms = eq.reshape(-1)
    length, index, ok = parse_header(demap_array(syms[:HEADER_LEN], Modulation.BPSK))
    ok = ok and length == PAYLOAD_BYTES
    values = demap_array(syms[HEADER_LEN:HEADER_LEN + payload_symbol_count(modulation)], modulation)
    payload = unpack_array(values, modulation.bits_per_symbol)
    return RxFrame(payload, ok, index, length, SyncResult(start, sync.cfo_estimate, sync.metric_peak), syms)


def receive_frame(rx: IqBuffer, modulation="QPSK", plan: CarrierPlan = DEFAULT_PLAN,
                  threshold: float = DEFAULT_THRESHOLD, strict: bool = True) -> tuple[bytes, bool]:
    """Decode one frame to its 96-byte payload.

    With ``strict`` a header CRC failure raises :class:`DecodeFailure`;
    otherwise the payload is returned with ``header_ok=False``.
    """
    frame = demodulate_frame(rx, modulation, plan, threshold)
    if strict and not frame.header_ok:
        raise DecodeFailure("header CRC check failed")
    return frame.payload, frame.header_ok


def decode_stream(rx: IqBuffer, modulation="QPSK", plan: CarrierPlan = DEFAULT_PLAN,
                  threshold: float = DEFAULT_THRESHOLD) -> list[RxFrame]:
    """Decode every frame in a buffer holding several bursts, e.g. an IQ file.

    Scans the timing metric left to right; each threshold crossing is decoded in
    a window just wide enough for one frame, then the scan skips past it.
    Crossings that fail to decode are dropped.
    """
    samples = rx.samples if isinstance(rx, IqBuffer) else np.asarray(rx)
    metric, _ = timing_metric(samples)
    n_total = frame_length(modulation, plan)
    frames, pos = [], 0
    while True:
        hits = np.flatnonzero(metric[pos:] >= threshold)
        if hits.size == 0:
            break
        s = pos + int(hits[0])
        lo = max(s - CP_LEN, 0)
        window = IqBuffer(samples[lo:s + n_total + 2 * CP_LEN], rx.sample_rate_hz
                          if isinstance(rx, IqBuffer) else 20e6)
        try:
            frames.append(demodulate_frame(window, modulation, plan, threshold))
            pos = lo + frames[-1].sync.frame_start + n_total
        except DecodeFailure:
            pos = s + SYMBOL_LEN
        if pos >= metric.size:
            break
    return frames
