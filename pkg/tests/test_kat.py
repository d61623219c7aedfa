from importlib import resources

import pytest

from wifilwc.kat import KatRecord, check_record, make_record, read_kat, write_kat
from wifilwc.sponge import get_spec, reference_permutation

GOLDEN = resources.files("wifilwc").joinpath("data/aead_kat.txt")


def _oracle_aead(width, key, nonce, ad, msg):
    """Straight-line duplex sponge written from the construction, no shared helpers."""
    top = width - 2

    def perm(s):
        return reference_permutation(s, width)

    def blocks(data):
        for off in range(0, len(data), 8):
            chunk = data[off:off + 8]
            full = len(chunk) == 8
            if not full:
                chunk = chunk + b"\x01" + b"\x00" * (7 - len(chunk))
            yield int.from_bytes(chunk, "little"), full

    s = perm(int.from_bytes(key + nonce, "little"))
    for v, full in blocks(ad):
        s = perm(s ^ v ^ (1 << top) ^ (0 if full else 1 << (width - 3)))
    ct = b""
    for off, (v, full) in zip(range(0, len(msg), 8), blocks(msg)):
        n = min(8, len(msg) - off)
        ct += ((s ^ v) & (2**64 - 1)).to_bytes(8, "little")[:n]
        s = perm(s ^ v ^ (2 << top) ^ (0 if full else 1 << (width - 3)))
    s = perm(s ^ (3 << top))
    tag = (s & (2**64 - 1)).to_bytes(8, "little")
    s = perm(s)
    tag += (s & (2**64 - 1)).to_bytes(8, "little")
    return ct, tag


def test_golden_file_verifies():
    records = read_kat(GOLDEN)
    assert len(records) == 64
    assert {r.scheme for r in records} == {"ACE", "SPIX", "WAGE", "Reference"}
    assert all(check_record(r) == [] for r in records)


def test_golden_file_agrees_with_oracle():
    for rec in read_kat(GOLDEN):
        width = get_spec(rec.scheme).state_bits
        assert _oracle_aead(width, rec.key, rec.nonce, rec.ad, rec.msg) == (rec.ct, rec.tag)


def test_write_read_roundtrip(tmp_path):
    recs = [make_record("SPIX", bytes(16), bytes(range(16)), b"", b"hi"),
            make_record("WAGE", bytes([7]) * 16, bytes(16), b"ad", b"")]
    path = tmp_path / "kat.txt"
    write_kat(path, recs)
    assert read_kat(path) == recs


def test_tampered_record_is_reported():
    rec = make_record("ACE", bytes(16), bytes(16), b"a", b"payload")
    bad = KatRecord(rec.scheme, rec.key, rec.nonce, rec.ad, rec.msg, rec.ct, bytes(16))
    problems = check_record(bad)
    assert "tag mismatch" in problems and "decrypt raised AuthFailure" in problems


def test_malformed_line(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("00,11\n")
    with pytest.raises(ValueError):
        read_kat(path)
