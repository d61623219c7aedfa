"""Transmitter blocks, each against a direct, slow oracle."""

import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wifilwc.carriers import (ACTIVE_LABELS, DATA_LABELS, DEFAULT_PLAN, NULL_LABELS, PILOT_LABELS,
                              SYNC_M1, SYNC_M2, CarrierPlan, by_label, label_to_bin,
                              scrambler_bits)
from wifilwc.errors import InvalidSymbol, LengthMismatch, NonPositiveGain
from wifilwc.ofdm_tx import (IqBuffer, Modulation, TaggedPayload, add_cp, allocate_carriers,
                             apply_gain, crc8, frame_length, generate_header, header_word, ifft64,
                             map_bpsk, map_qpsk, mux, parse_header, repack_array, repack_bits,
                             tag_stream, transmit_frame)


def _crc8_table():
    table = []
    for b in range(256):
        c = b
        for _ in range(8):
            c = ((c << 1) ^ 0x07) & 0xFF if c & 0x80 else (c << 1) & 0xFF
        table.append(c)
    return table


CRC_TABLE = _crc8_table()


def crc8_oracle(data):
    c = 0
    for b in data:
        c = CRC_TABLE[c ^ b]
    return c


def idft_oracle(x):
    n = len(x)
    return np.array([sum(x[k] * cmath.exp(2j * cmath.pi * k * t / n) for k in range(n)) / n ** 0.5
                     for t in range(n)])


def test_crc8_check_value():
    assert crc8(b"123456789") == 0xF4


@given(st.binary(max_size=64))
def test_crc8_matches_table_driven(data):
    assert crc8(data) == crc8_oracle(data)


@pytest.mark.parametrize("n", [0, 1, 95, 96, 97, 1000])
def test_tag_stream(n):
    data = bytes(i % 251 for i in range(n))
    frames = tag_stream(data)
    assert len(frames) == -(-n // 96)
    assert [f.frame_index for f in frames] == list(range(len(frames)))
    joined = b"".join(f.bytes for f in frames)
    assert joined[:n] == data and not any(joined[n:])


def test_tagged_payload_length():
    with pytest.raises(LengthMismatch):
        TaggedPayload(bytes(95), 0)


@settings(max_examples=200)
@given(st.integers(0, 4095), st.integers(0, 10**6))
def test_header_roundtrip(length, index):
    p = TaggedPayload(bytes(96), index)
    word = header_word(length, index)
    bits = [(word >> i) & 1 for i in range(24)]
    assert header_word(length, index) & 0xFFF == length
    hdr = generate_header(p)
    assert len(hdr) == 48 and set(hdr) <= {0, 1}
    assert parse_header(hdr) == (96, index % 4096, True)
    assert bits[:12] == [(length >> i) & 1 for i in range(12)]


def test_header_crc_detects_single_flips():
    hdr = bytearray(generate_header(TaggedPayload(bytes(96), 77)))
    for i in range(48):
        bad = bytearray(hdr)
        bad[i] ^= 1
        assert parse_header(bytes(bad))[2] is False


@given(st.integers(0, 255))
def test_repack_bits(b):
    q = repack_bits(b)
    assert sum(v << (2 * i) for i, v in enumerate(q)) == b
    assert list(repack_array(bytes([b]), 2)) == list(q)
    assert list(repack_array(bytes([b]), 1)) == [(b >> i) & 1 for i in range(8)]


def test_mappers():
    assert map_bpsk(0) == -1 and map_bpsk(1) == 1
    pts = [map_qpsk(v) for v in range(4)]
    assert all(abs(abs(p) - 1) < 1e-12 for p in pts)
    assert len(set(pts)) == 4
    # adjacent points differ in exactly one bit (Gray)
    for a in range(4):
        for b in range(4):
            if abs(abs(pts[a] - pts[b]) - 2 ** 0.5) < 1e-9:
                assert bin(a ^ b).count("1") == 1
    with pytest.raises(InvalidSymbol):
        map_qpsk(4)
    with pytest.raises(InvalidSymbol):
        map_bpsk(2)


def test_carrier_partition():
    assert len(DATA_LABELS) == 48 and len(PILOT_LABELS) == 4 and len(NULL_LABELS) == 12
    assert sorted(DATA_LABELS + PILOT_LABELS + NULL_LABELS) == list(range(-32, 32))
    assert 0 in NULL_LABELS
    assert len(ACTIVE_LABELS) == 52
    with pytest.raises(ValueError):
        CarrierPlan(data_indices=DATA_LABELS[:-1])


def test_scrambler_sequence():
    # first 16 bits of the 802.11 sequence for the all-ones seed
    assert "".join(map(str, scrambler_bits(16))) == "0000111011110010"
    assert np.array_equal(scrambler_bits(254)[:127], scrambler_bits(254)[127:])


def test_sync_words():
    labels = np.arange(-32, 32)
    m1 = by_label(SYNC_M1)
    assert np.all(m1[labels % 2 == 1] == 0)
    assert np.all(m1[[k + 32 for k in NULL_LABELS]] == 0)
    t = ifft64(SYNC_M1)
    assert np.allclose(t[:32], t[32:])
    m2 = by_label(SYNC_M2)
    assert np.count_nonzero(m2) == 52
    assert np.isclose(np.sum(np.abs(SYNC_M1) ** 2), np.sum(np.abs(SYNC_M2) ** 2))


def test_allocate_and_ifft_against_oracle(rng):
    syms = np.exp(2j * np.pi * rng.random(48))
    vecs = allocate_carriers(syms, DEFAULT_PLAN)
    assert vecs.shape == (3, 64)
    v = vecs[2]
    assert np.allclose(v[DEFAULT_PLAN.data_bins], syms)
    assert np.allclose(v[[label_to_bin(k) for k in PILOT_LABELS]], [1, 1, 1, -1])
    assert np.all(v[DEFAULT_PLAN.null_bins] == 0)
    assert np.allclose(ifft64(v), idft_oracle(v))


def test_ifft_is_unitary(rng):
    x = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    assert np.isclose(np.linalg.norm(ifft64(x)), np.linalg.norm(x))
    with pytest.raises(LengthMismatch):
        ifft64(np.zeros(63))


def test_add_cp():
    x = np.arange(64, dtype=complex)
    y = add_cp(x)
    assert len(y) == 80 and np.array_equal(y[:16], x[48:]) and np.array_equal(y[16:], x)


def test_mux_lengths():
    assert len(mux(np.ones(48), np.ones(384))) == 432
    assert len(mux(np.ones(48), np.ones(768))) == 816
    with pytest.raises(LengthMismatch):
        mux(np.ones(47), np.ones(384))
    with pytest.raises(LengthMismatch):
        mux(np.ones(48), np.ones(383))


@pytest.mark.parametrize("mod,n", [("QPSK", 880), ("BPSK", 1520)])
def test_frame_length(mod, n):
    assert frame_length(mod) == n
    assert len(transmit_frame(TaggedPayload(bytes(96), 0), mod)) == n


def test_gain():
    buf = transmit_frame(TaggedPayload(bytes(96), 0), "QPSK")
    g = apply_gain(buf, 0.02)
    assert np.allclose(g.samples, buf.samples * 0.02, atol=1e-7)
    with pytest.raises(NonPositiveGain):
        apply_gain(buf, 0)


def test_iq_file_roundtrip(tmp_path):
    buf = transmit_frame(TaggedPayload(bytes(range(96)), 3), Modulation.BPSK, gain=0.02)
    path = tmp_path / "f.iq"
    buf.write(path)
    assert path.stat().st_size == 8 * len(buf)
    assert IqBuffer.read(path) == buf
    raw = path.read_bytes()
    assert np.frombuffer(raw[:8], "<f4")[0] == buf.samples[0].real
    with pytest.raises(LengthMismatch):
        IqBuffer.from_bytes(raw[:-1])
