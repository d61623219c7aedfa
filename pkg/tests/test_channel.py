import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wifilwc.channel import (ChannelConfig, apply_cfo, apply_channel, awgn, multipath, q_function,
                             signal_power, theoretical_ber_mpsk)
from wifilwc.errors import DelayTooLarge, EmptyBuffer, InvalidM
from wifilwc.ofdm_tx import IqBuffer, TaggedPayload, transmit_frame


def q_oracle(x, n=200_001):
    """Trapezoid integration of the normal density over [x, x + 12]."""
    t = np.linspace(x, x + 12, n)
    f = np.exp(-t * t / 2) / math.sqrt(2 * math.pi)
    return float(np.sum((f[1:] + f[:-1]) / 2) * (t[1] - t[0]))


@pytest.mark.parametrize("x", [0.0, 0.5, 1.0, 2.0, 3.09, 4.5])
def test_q_function_against_integration(x):
    assert q_function(x) == pytest.approx(q_oracle(x), rel=1e-6)


def test_q_function_known_values():
    assert q_function(0) == 0.5
    assert q_function(-1) == pytest.approx(1 - q_function(1))


def test_bpsk_theory_reference_points():
    # 9.6 dB is the textbook Eb/N0 for 1e-5 with BPSK
    assert theoretical_ber_mpsk(2, 9.6) == pytest.approx(1e-5, rel=0.1)
    assert theoretical_ber_mpsk(2, 6.79) == pytest.approx(1e-3, rel=0.02)


def test_qpsk_theory_equals_bpsk_per_bit():
    for e in (0, 4, 8):
        assert theoretical_ber_mpsk(4, e) == pytest.approx(theoretical_ber_mpsk(2, e))


def test_higher_order_is_never_better():
    for e in (0, 3, 6, 9):
        assert theoretical_ber_mpsk(4, e) >= theoretical_ber_mpsk(2, e) * (1 - 1e-12)
        assert theoretical_ber_mpsk(8, e) > theoretical_ber_mpsk(4, e)


def test_printed_form():
    g = 10 ** 0.5
    expected = 0.5 * math.erfc(math.sqrt(2 * g * 2 * math.sin(math.pi / 4)) / math.sqrt(2))
    assert theoretical_ber_mpsk(4, 5, form="printed") == pytest.approx(expected)
    assert theoretical_ber_mpsk(2, 5, form="printed") == theoretical_ber_mpsk(2, 5)
    with pytest.raises(ValueError):
        theoretical_ber_mpsk(4, 5, form="other")


def test_bpsk_at_zero_db():
    assert theoretical_ber_mpsk(2, 0) == pytest.approx(0.0786, abs=1e-4)


def test_theory_monotone_and_valid_m():
    vals = [theoretical_ber_mpsk(8, e) for e in range(0, 15)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    for m in (0, 1, 3, 6):
        with pytest.raises(InvalidM):
            theoretical_ber_mpsk(m, 5)


def _frame():
    tx = transmit_frame(TaggedPayload(bytes(range(96)), 0), "QPSK", gain=0.02)
    return IqBuffer(np.concatenate([np.zeros(100), tx.samples, np.zeros(100)]))


@pytest.mark.parametrize("snr", [0, 10, 20])
def test_awgn_hits_target_snr(snr):
    buf = IqBuffer(np.tile(_frame().samples[100:980], 40))
    out = awgn(buf, snr, seed=5)
    noise = out.samples.astype(complex) - buf.samples
    measured = 10 * math.log10(signal_power(buf.samples) / np.mean(np.abs(noise) ** 2))
    assert measured == pytest.approx(snr, abs=0.1)


def test_awgn_deterministic_and_seed_dependent():
    buf = _frame()
    assert awgn(buf, 5, 1) == awgn(buf, 5, 1)
    assert awgn(buf, 5, 1) != awgn(buf, 5, 2)


def test_awgn_identity_and_empty():
    buf = _frame()
    assert awgn(buf, math.inf, 9) == buf
    with pytest.raises(EmptyBuffer):
        awgn(IqBuffer(np.zeros(0)), 10, 0)


def test_signal_power_ignores_silence():
    assert signal_power(np.array([0, 0, 2, 0])) == 4.0
    assert signal_power(np.zeros(3)) == 0.0


@settings(max_examples=40)
@given(st.lists(st.tuples(st.integers(0, 30), st.complex_numbers(max_magnitude=2, allow_nan=False)),
                min_size=1, max_size=4))
def test_multipath_matches_convolution(taps):
    x = np.random.default_rng(0).standard_normal(64).astype(np.complex64)
    h = np.zeros(31, dtype=complex)
    for d, g in taps:
        h[d] += g
    expected = np.convolve(x, h)[:64]
    assert np.allclose(multipath(IqBuffer(x), taps).samples, expected, atol=1e-4)


def test_multipath_delay_too_large():
    with pytest.raises(DelayTooLarge):
        multipath(IqBuffer(np.ones(10)), [(0, 1), (10, 0.5)])


def test_cfo_rotation():
    x = IqBuffer(np.ones(128))
    y = apply_cfo(x, 0.25).samples
    assert np.allclose(y[64], np.exp(2j * np.pi * 0.25))
    assert np.allclose(np.abs(y), 1)


def test_apply_channel_order_and_identity():
    buf = _frame()
    assert ChannelConfig().is_identity
    assert apply_channel(buf, ChannelConfig()) == buf
    cfg = ChannelConfig(snr_db=15, cfo_fraction=0.1, taps=((0, 1), (3, 0.4j)), seed=4)
    manual = awgn(apply_cfo(multipath(buf, cfg.taps), 0.1), 15, 4)
    assert apply_channel(buf, cfg) == manual
    with pytest.raises(ValueError):
        ChannelConfig(taps=())
