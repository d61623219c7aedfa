"""Baseband impairments between transmitter and receiver, and the analytic
M-PSK bit error rate used as the reference curve.

SNR is measured over occupied (non-zero) samples of the buffer handed in,
i.e. post-gain transmitter output, not per subcarrier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DelayTooLarge, EmptyBuffer, InvalidM
from .ofdm_tx import IqBuffer


def noise_rng(seed: int) -> np.random.Generator:
    """Counter-based generator, reproducible across platforms."""
    return np.random.Generator(np.random.Philox(key=int(seed) & (2**64 - 1)))


def signal_power(samples) -> float:
    s = np.asarray(samples)
    occupied = s[s != 0]
    if occupied.size == 0:
        return 0.0
    return float(np.mean(np.abs(occupied.astype(complex)) ** 2))


def awgn(buf: IqBuffer, snr_db: float, seed: int) -> IqBuffer:
    if len(buf) == 0:
        raise EmptyBuffer("cannot add noise to an empty buffer")
    if math.isinf(snr_db) and snr_db > 0:
        return IqBuffer(buf.samples.copy(), buf.sample_rate_hz)
    p_noise = signal_power(buf.samples) / 10 ** (snr_db / 10)
    noise = noise_rng(seed).standard_normal((len(buf), 2)) * math.sqrt(p_noise / 2)
    out = buf.samples.astype(complex) + noise[:, 0] + 1j * noise[:, 1]
    return IqBuffer(out, buf.sample_rate_hz)


def apply_cfo(buf: IqBuffer, frac: float) -> IqBuffer:
    """Rotate sample ``n`` by ``exp(j 2 pi frac n / 64)``."""
    if frac == 0:
        return IqBuffer(buf.samples.copy(), buf.sample_rate_hz)
    n = np.arange(len(buf))
    return IqBuffer(buf.samples * np.exp(2j * np.pi * frac * n / 64), buf.sample_rate_hz)


def multipath(buf: IqBuffer, taps) -> IqBuffer:
    """Sparse linear convolution, truncated to the input length."""
    if not taps:
        raise ValueError("at least one tap is required")
    x = buf.samples.astype(complex)
    out = np.zeros_like(x)
    for delay, gain in taps:
        delay = int(delay)
        if delay < 0:
            raise ValueError("tap delays must be non-negative")
        if delay >= len(x):
            raise DelayTooLarge(f"delay {delay} not below buffer length {len(x)}")
        out[delay:] += gain * x[:len(x) - delay]
    return IqBuffer(out, buf.sample_rate_hz)


@dataclass(frozen=True)
class ChannelConfig:
    snr_db: float = math.inf
    cfo_fraction: float = 0.0
    taps: tuple = ((0, 1 + 0j),)
    seed: int = 0

    def __post_init__(self):
        if not self.taps:
            raise ValueError("at least one tap is required")
        if any(int(d) < 0 for d, _ in self.taps):
            raise ValueError("tap delays must be non-negative")

    @property
    def is_identity(self):
        return (math.isinf(self.snr_db) and self.cfo_fraction == 0
                and len(self.taps) == 1 and self.taps[0][0] == 0 and self.taps[0][1] == 1)


def apply_channel(buf: IqBuffer, cfg: ChannelConfig, seed=None) -> IqBuffer:
    """Multipath, then carrier offset, then noise; ``seed`` overrides ``cfg.seed``."""
    out = multipath(buf, cfg.taps)
    out = apply_cfo(out, cfg.cfo_fraction)
    return awgn(out, cfg.snr_db, cfg.seed if seed is None else seed)


def q_function(x: float) -> float:
    """Gaussian tail probability P(Z > x)."""
    return 0.5 * math.erfc(x / math.sqrt(2))


def theoretical_ber_mpsk(m: int, ebn0_db: float, form: str = "textbook") -> float:
    """Bit error probability of Gray-coded M-PSK over AWGN.

    Exact ``Q(sqrt(2 Eb/N0))`` for M = 2. For M >= 4 the nearest-neighbour
    approximation ``(2/k) Q(sqrt(2 k Eb/N0) sin(pi/M))`` with ``k = log2 M``.
    ``form="printed"`` puts ``sin(pi/M)`` under the square root instead; that
    variant ranks QPSK below BPSK and is kept only for comparison.
    """
    if m < 2 or m & (m - 1):
        raise InvalidM(f"M must be a power of two >= 2, got {m}")
    if form not in ("textbook", "printed"):
        raise ValueError(f"unknown form {form!r}")
    g = 10 ** (ebn0_db / 10)
    if m == 2:
        return q_function(math.sqrt(2 * g))
    k = math.log2(m)
    s = math.sin(math.pi / m)
    if form == "printed":
        return (2 / k) * q_function(math.sqrt(2 * g * k * s))
    return (2 / k) * q_function(math.sqrt(2 * g * k) * s)
