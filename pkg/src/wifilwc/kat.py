"""Known-answer test files for the AEAD.

One record per line: ``key,nonce,ad,msg,ct,tag`` as hex, empty fields allowed.
Lines starting with ``#`` are comments; ``# scheme=<name>`` selects the
permutation for the records that follow.
"""

from dataclasses import dataclass
from pathlib import Path

from .sponge import AeadParams, aead_decrypt, aead_encrypt, get_spec

FIELDS = ("key", "nonce", "ad", "msg", "ct", "tag")


@dataclass(frozen=True)
class KatRecord:
    scheme: str
    key: bytes
    nonce: bytes
    ad: bytes
    msg: bytes
    ct: bytes
    tag: bytes

    def params(self):
        return AeadParams(l_ad=-(-len(self.ad) // 8), l_m=-(-len(self.msg) // 8),
                          key=self.key, nonce=self.nonce)

    def to_line(self):
        return ",".join(getattr(self, f).hex() for f in FIELDS)


def read_kat(path, default_scheme="Reference"):
    scheme = default_scheme
    records = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("scheme="):
                scheme = body.split("=", 1)[1].strip()
            continue
        parts = line.split(",")
        if len(parts) != len(FIELDS):
            raise ValueError(f"{path}:{lineno}: expected {len(FIELDS)} fields, got {len(parts)}")
        try:
            values = [bytes.fromhex(p.strip()) for p in parts]
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
        records.append(KatRecord(scheme, *values))
    return records


def write_kat(path, records):
    lines, scheme = [], None
    for rec in records:
        if rec.scheme != scheme:
            scheme = rec.scheme
            lines.append(f"# scheme={scheme}")
        lines.append(rec.to_line())
    Path(path).write_text("\n".join(lines) + "\n")


def make_record(scheme, key, nonce, ad, msg):
    rec = KatRecord(scheme, key, nonce, ad, msg, b"", b"")
    ct, tag = aead_encrypt(rec.params(), ad, msg, get_spec(scheme))
    return KatRecord(scheme, key, nonce, ad, msg, ct, tag)


def check_record(rec):
    """Return a list of problems with ``rec``; empty when it verifies both ways."""
    spec = get_spec(rec.scheme)
    problems = []
    ct, tag = aead_encrypt(rec.params(), rec.ad, rec.msg, spec)
    if ct != rec.ct:
        problems.append("ciphertext mismatch")
    if tag != rec.tag:
        problems.append("tag mismatch")
    try:
        if aead_decrypt(rec.params(), rec.ad, rec.ct, rec.tag, spec) != rec.msg:
            problems.append("decrypt mismatch")
    except Exception as exc:
        problems.append(f"decrypt raised {type(exc).__name__}")
    return problems
