"""Duplex-sponge AEAD with pluggable permutations, plus the KDF and MIC built on it.

State words are plain Python integers of ``state_bits`` width. Bit ``i`` of the
integer is state bit ``i``; the rate is the low 64 bits and byte strings enter
the rate little-endian.
"""

from __future__ import annotations

import enum
import hmac
from dataclasses import dataclass, field
from typing import Callable, Optional

from .errors import (
    AuthFailure,
    DataLimitExceeded,
    OversizeInput,
    PhaseError,
    UnsupportedWidth,
)

LANE_BITS = 64
REFERENCE_ROUNDS = 12
SUPPORTED_WIDTHS = (256, 259, 320)

KEY_BYTES = 16
NONCE_BYTES = 16
TAG_BYTES = 16

# Published (state, rate, key, tag, log2 data limit) per cipher suite.
SUITE_PARAMETERS = {
    "ACE": (320, 64, 128, 128, 124),
    "SPIX": (256, 64, 128, 128, 60),
    "WAGE": (259, 64, 128, 128, 60),
}

# 2-bit domain value XORed into the two highest state bits before each call.
DOMAIN_AD = 1
DOMAIN_MSG = 2
DOMAIN_FINAL = 3


def _lane_widths(width):
    n = -(-width // LANE_BITS)
    return [LANE_BITS] * (n - 1) + [width - LANE_BITS * (n - 1)]


def _rotl(x, r, w):
    if r == 0:
        return x
    mask = (1 << w) - 1
    return ((x << r) | (x >> (w - r))) & mask


def _rotr(x, r, w):
    return _rotl(x, (w - r) % w, w) if r else x


def round_constant(j, i, width):
    """Lane ``i`` constant of round ``j``: the byte ``(17j + 29i + 1) mod 256`` repeated."""
    b = (17 * j + 29 * i + 1) % 256
    return (b * 0x0101010101010101) & ((1 << width) - 1)


def _split(state, widths):
    lanes, shift = [], 0
    for w in widths:
        lanes.append((state >> shift) & ((1 << w) - 1))
        shift += w
    return lanes


def _join(lanes, widths):
    state, shift = 0, 0
    for lane, w in zip(lanes, widths):
        state |= lane << shift
        shift += w
    return state


def _check_width(width):
    if width not in SUPPORTED_WIDTHS:
        raise UnsupportedWidth(f"state width {width} not in {SUPPORTED_WIDTHS}")


def reference_permutation(state: int, width: int, rounds: int = REFERENCE_ROUNDS) -> int:
    """Apply the reference lane permutation to a ``width``-bit state.

    Lanes are updated in place in ascending order, so the last lane mixes in the
    already-updated first lane; this keeps every round invertible.
    """
    _check_width(width)
    widths = _lane_widths(width)
    n = len(widths)
    lanes = _split(state, widths)
    for j in range(rounds):
        for i in range(n):
            w = widths[i]
            lanes[i] = (
                _rotl(lanes[i], (7 * i + j) % w, w)
                ^ (lanes[(i + 1) % n] & ((1 << w) - 1))
                ^ round_constant(j, i, w)
            )
    return _join(lanes, widths)


def reference_permutation_inverse(state: int, width: int, rounds: int = REFERENCE_ROUNDS) -> int:
    _check_width(width)
    widths = _lane_widths(width)
    n = len(widths)
    lanes = _split(state, widths)
    for j in reversed(range(rounds)):
        for i in reversed(range(n)):
            w = widths[i]
            t = lanes[i] ^ (lanes[(i + 1) % n] & ((1 << w) - 1)) ^ round_constant(j, i, w)
            lanes[i] = _rotr(t, (7 * i + j) % w, w)
    return _join(lanes, widths)


@dataclass(frozen=True)
class PermutationSpec:
    """A named permutation plus its sponge geometry.

    ``permute`` maps a ``state_bits``-wide integer to another of the same width.
    Real ACE/SPIX/WAGE round functions can be supplied here; the bundled specs
    use :func:`reference_permutation` at each suite's width.
    """

    name: str
    state_bits: int
    permute: Callable[[int], int] = field(repr=False, compare=False)
    rate_bits: int = 64
    rounds: int = REFERENCE_ROUNDS
    data_log2: int = 60
    inverse: Optional[Callable[[int], int]] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.rate_bits != LANE_BITS:
            raise UnsupportedWidth(f"rate must be {LANE_BITS} bits, got {self.rate_bits}")
        if self.state_bits < 256:
            # key||nonce must fit in the initial load
            raise UnsupportedWidth(f"state of {self.state_bits} bits is too small")
        suite = SUITE_PARAMETERS.get(self.name)
        if suite is not None and (self.state_bits, self.rate_bits) != suite[:2]:
            raise UnsupportedWidth(
                f"{self.name} is a {suite[0]}-bit state with {suite[1]}-bit rate"
            )

    @property
    def state_bytes(self):
        return -(-self.state_bits // 8)


def reference_spec(name="Reference", width=256, rounds=REFERENCE_ROUNDS, data_log2=None):
    """Build a :class:`PermutationSpec` backed by the reference permutation."""
    _check_width(width)
    if data_log2 is None:
        data_log2 = SUITE_PARAMETERS.get(name, (0, 0, 0, 0, 60))[4]
    return PermutationSpec(
        name=name,
        state_bits=width,
        permute=lambda s: reference_permutation(s, width, rounds),
        inverse=lambda s: reference_permutation_inverse(s, width, rounds),
        rounds=rounds,
        data_log2=data_log2,
    )


SCHEMES = {
    "ACE": reference_spec("ACE", 320),
    "SPIX": reference_spec("SPIX", 256),
    "WAGE": reference_spec("WAGE", 259),
    "Reference": reference_spec("Reference", 256),
}


def get_spec(name: str) -> PermutationSpec:
    try:
        return SCHEMES[name]
    except KeyError:
        raise KeyError(f"unknown scheme {name!r}; choose from {sorted(SCHEMES)}") from None


class Phase(enum.IntEnum):
    INIT = 0
    ABSORB_AD = 1
    ABSORB_MSG = 2
    SQUEEZE = 3
    FINALIZED = 4


def _pad_block(block: bytes) -> tuple[int, bool]:
    """Rate block as an integer, with 10* padding when ``block`` is short."""
    if len(block) == 8:
        return int.from_bytes(block, "little"), False
    return int.from_bytes(block + b"\x01" + bytes(7 - len(block)), "little"), True


class SpongeState:
    """The running duplex sponge for one AEAD invocation.

    Phases only move forward: Init -> AbsorbAD -> AbsorbMsg -> Squeeze ->
    Finalized. Each absorbing call consumes its whole input, so calling it a
    second time is also rejected.
    """

    def __init__(self, spec: PermutationSpec, key: bytes, nonce: bytes):
        if len(key) != KEY_BYTES or len(nonce) != NONCE_BYTES:
            raise ValueError("key and nonce must be 16 bytes each")
        self.spec = spec
        self._mask = (1 << spec.state_bits) - 1
        self._rate_mask = (1 << spec.rate_bits) - 1
        self._domain_shift = spec.state_bits - 2
        self._pad_flag = 1 << (spec.state_bits - 3)
        self.bits = int.from_bytes(key + nonce, "little")
        self._permute()
        self.phase = Phase.INIT

    def _permute(self):
        out = self.spec.permute(self.bits)
        if out >> self.spec.state_bits:
            raise ValueError(f"permutation {self.spec.name} overflowed the state width")
        self.bits = out

    def _advance(self, to, allowed):
        if self.phase not in allowed:
            raise PhaseError(f"cannot enter {to.name} from {self.phase.name}")
        self.phase = to

    def _absorb_block(self, value, padded, domain):
        self.bits ^= value
        self.bits ^= domain << self._domain_shift
        if padded:
            self.bits ^= self._pad_flag
        self._permute()

    def absorb_ad(self, ad: bytes):
        self._advance(Phase.ABSORB_AD, (Phase.INIT,))
        for off in range(0, len(ad), 8):
            value, padded = _pad_block(ad[off:off + 8])
            self._absorb_block(value, padded, DOMAIN_AD)

    def encrypt(self, msg: bytes) -> bytes:
        self._advance(Phase.ABSORB_MSG, (Phase.INIT, Phase.ABSORB_AD))
        out = bytearray()
        for off in range(0, len(msg), 8):
            block = msg[off:off + 8]
            rate = self.bits & self._rate_mask
            value, padded = _pad_block(block)
            out += ((rate ^ value) & self._rate_mask).to_bytes(8, "little")[:len(block)]
            self._absorb_block(value, padded, DOMAIN_MSG)
        return bytes(out)

    def decrypt(self, ct: bytes) -> bytes:
        self._advance(Phase.ABSORB_MSG, (Phase.INIT, Phase.ABSORB_AD))
        out = bytearray()
        for off in range(0, len(ct), 8):
            block = ct[off:off + 8]
            rate = self.bits & self._rate_mask
            plain = (rate ^ int.from_bytes(block, "little")).to_bytes(8, "little")[:len(block)]
            value, padded = _pad_block(plain)
            out += plain
            self._absorb_block(value, padded, DOMAIN_MSG)
        return bytes(out)

    def squeeze(self, n_bytes: int) -> bytes:
        """Read ``n_bytes`` from the rate, permuting between 8-byte chunks."""
        self._advance(Phase.SQUEEZE, (Phase.INIT, Phase.ABSORB_AD, Phase.ABSORB_MSG))
        out = bytearray()
        while True:
            out += (self.bits & self._rate_mask).to_bytes(8, "little")
            if len(out) >= n_bytes:
                break
            self._permute()
        self.phase = Phase.FINALIZED
        return bytes(out[:n_bytes])

    def finalize(self) -> bytes:
        """Domain-separated permutation call, then squeeze the 128-bit tag."""
        if self.phase >= Phase.SQUEEZE:
            raise PhaseError(f"cannot finalize from {self.phase.name}")
        self.bits ^= DOMAIN_FINAL << self._domain_shift
        self._permute()
        return self.squeeze(TAG_BYTES)


@dataclass(frozen=True)
class AeadParams:
    l_ad: int
    l_m: int
    key: bytes
    nonce: bytes
    tag_bits: int = 128

    def __post_init__(self):
        if self.l_ad < 0 or self.l_m < 0:
            raise ValueError("block counts must be non-negative")
        if len(self.key) != KEY_BYTES or len(self.nonce) != NONCE_BYTES:
            raise ValueError("key and nonce must be 16 bytes each")
        if self.tag_bits != 128:
            raise ValueError("only 128-bit tags are supported")


def _check_sizes(params, ad, body, spec):
    if len(ad) > 8 * params.l_ad:
        raise OversizeInput(f"{len(ad)}-byte AD exceeds l_AD={params.l_ad} blocks")
    if len(body) > 8 * params.l_m:
        raise OversizeInput(f"{len(body)}-byte message exceeds l_M={params.l_m} blocks")
    # the limit counts 64-bit blocks processed under one key
    if params.l_ad + params.l_m >= 2 ** spec.data_log2:
        raise DataLimitExceeded(
            f"{params.l_ad + params.l_m} blocks reach the 2^{spec.data_log2} limit of {spec.name}"
        )


def aead_encrypt(params: AeadParams, ad: bytes, msg: bytes, spec: PermutationSpec) -> tuple[bytes, bytes]:
    _check_sizes(params, ad, msg, spec)
    st = SpongeState(spec, params.key, params.nonce)
    if ad:
        st.absorb_ad(ad)
    ct = st.encrypt(msg) if msg else b""
    return ct, st.finalize()


def aead_decrypt(params: AeadParams, ad: bytes, ct: bytes, tag: bytes, spec: PermutationSpec) -> bytes:
    _check_sizes(params, ad, ct, spec)
    st = SpongeState(spec, params.key, params.nonce)
    if ad:
        st.absorb_ad(ad)
    msg = st.decrypt(ct) if ct else b""
    expected = st.finalize()
    if not hmac.compare_digest(expected, bytes(tag)):
        raise AuthFailure("tag mismatch")
    return msg


@dataclass(frozen=True)
class SessionKeys:
    kck: bytes
    kek: bytes
    tk: bytes

    @classmethod
    def from_bytes(cls, ptk: bytes) -> "SessionKeys":
        if len(ptk) != 48:
            raise ValueError("PTK must be 384 bits")
        return cls(ptk[:16], ptk[16:32], ptk[32:])

    def to_bytes(self) -> bytes:
        return self.kck + self.kek + self.tk


KDF_MSG_BLOCKS = 6
MIC_AD_BLOCKS = 4


def kdf(pmk: bytes, anonce: bytes, snonce: bytes, ap_mac: bytes, sta_mac: bytes,
        spec: PermutationSpec) -> SessionKeys:
    """Derive KCK||KEK||TK from the PMK, both nonces and both MAC addresses.

    The sponge nonce is the last 64 bits of ANonce followed by the last 64 bits
    of SNonce. Six message blocks carry AP MAC, STA MAC, then the leading 64 bits
    of each nonce, zero-filled. No finalization: 384 bits are squeezed straight
    out of the rate.
    """
    if len(ap_mac) != 6 or len(sta_mac) != 6:
        raise ValueError("MAC addresses must be 6 bytes")
    if len(anonce) != NONCE_BYTES or len(snonce) != NONCE_BYTES:
        raise ValueError("nonces must be 16 bytes")
    iv = anonce[8:] + snonce[8:]
    body = ap_mac + sta_mac + anonce[:8] + snonce[:8]
    body += bytes(8 * KDF_MSG_BLOCKS - len(body))
    st = SpongeState(spec, pmk, iv)
    st.encrypt(body)
    return SessionKeys.from_bytes(st.squeeze(48))


def mic(kck: bytes, nonce: bytes, replay_counter: int, spec: PermutationSpec) -> bytes:
    """128-bit MIC: AE mode with four AD blocks nonce||counter and no message."""
    ad = nonce + replay_counter.to_bytes(16, "big")
    params = AeadParams(l_ad=MIC_AD_BLOCKS, l_m=0, key=kck, nonce=nonce)
    return aead_encrypt(params, ad, b"", spec)[1]
