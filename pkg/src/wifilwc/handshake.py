"""Supplicant and Authenticator state machines for the 4-way handshake and the
protected-data phase that follows it.

Every operation takes a :class:`PartyState` and returns a new one; states are
never mutated in place.

MICs follow the simplified form::

    MIC_A   = MIC(KCK, ANonce, r)
    MIC_S   = MIC(KCK, SNonce, r)
    MIC_all = MIC(KCK, D, r + 1)
"""

from __future__ import annotations

import enum
import hashlib
import hmac
from dataclasses import dataclass, field, replace
from typing import Optional

from .errors import (
    AuthFailure,
    KeysUnavailable,
    MalformedFrame,
    MicMismatch,
    NonceMismatch,
    NotInstalled,
    OversizeInput,
    ReplayDetected,
    WrongPhase,
    WrongRole,
)
from .sponge import (
    AeadParams,
    PermutationSpec,
    SessionKeys,
    aead_decrypt,
    aead_encrypt,
    kdf,
    mic,
)

FRAME_BYTES = 96
FIELD_BYTES = 16
NONCE_OFFSET = 1
MIC_OFFSET = 17
COUNTER_OFFSET = 33
FIELDS_END = 49

MAX_RECORD_MSG = 128  # l_M = 16 blocks
MAX_RECORD_AD = 16    # l_AD = 2 blocks


class Role(enum.Enum):
    SUPPLICANT = "Supplicant"
    AUTHENTICATOR = "Authenticator"


class HsPhase(enum.IntEnum):
    IDLE = 0
    SENT_NONCE = 1
    DERIVED = 2
    CONFIRMED = 3
    INSTALLED = 4


class MsgKind(enum.IntEnum):
    MSG1_ANONCE = 1
    MSG2_SNONCE_MIC_A = 2
    MSG3_ANONCE_MIC_S = 3
    MSG4_MIC_ALL = 4


# which optional fields each kind carries: (nonce, mic)
_LAYOUT = {
    MsgKind.MSG1_ANONCE: (True, False),
    MsgKind.MSG2_SNONCE_MIC_A: (True, True),
    MsgKind.MSG3_ANONCE_MIC_S: (True, True),
    MsgKind.MSG4_MIC_ALL: (False, True),
}


@dataclass(frozen=True)
class HandshakeMessage:
    kind: MsgKind
    replay_counter: int
    nonce: Optional[bytes] = None
    mic: Optional[bytes] = None

    def __post_init__(self):
        has_nonce, has_mic = _LAYOUT[self.kind]
        if has_nonce != (self.nonce is not None) or has_mic != (self.mic is not None):
            raise MalformedFrame(f"{self.kind.name} field set does not match its kind")
        for value in (self.nonce, self.mic):
            if value is not None and len(value) != FIELD_BYTES:
                raise MalformedFrame("nonce and MIC fields are 16 bytes")
        if not 0 <= self.replay_counter < 1 << 128:
            raise MalformedFrame("replay counter out of range")

    @property
    def padded_frame(self) -> bytes:
        buf = bytearray(FRAME_BYTES)
        buf[0] = int(self.kind)
        if self.nonce is not None:
            buf[NONCE_OFFSET:MIC_OFFSET] = self.nonce
        if self.mic is not None:
            buf[MIC_OFFSET:COUNTER_OFFSET] = self.mic
        buf[COUNTER_OFFSET:FIELDS_END] = self.replay_counter.to_bytes(16, "big")
        return bytes(buf)

    @classmethod
    def from_frame(cls, frame: bytes) -> "HandshakeMessage":
        if len(frame) != FRAME_BYTES:
            raise MalformedFrame(f"frame is {len(frame)} bytes, expected {FRAME_BYTES}")
        try:
            kind = MsgKind(frame[0])
        except ValueError:
            raise MalformedFrame(f"unknown message kind {frame[0]}") from None
        if any(frame[FIELDS_END:]):
            raise MalformedFrame("non-zero padding")
        has_nonce, has_mic = _LAYOUT[kind]
        nonce = frame[NONCE_OFFSET:MIC_OFFSET]
        mic_field = frame[MIC_OFFSET:COUNTER_OFFSET]
        if not has_nonce and any(nonce):
            raise MalformedFrame(f"{kind.name} carries no nonce")
        if not has_mic and any(mic_field):
            raise MalformedFrame(f"{kind.name} carries no MIC")
        return cls(
            kind=kind,
            replay_counter=int.from_bytes(frame[COUNTER_OFFSET:FIELDS_END], "big"),
            nonce=bytes(nonce) if has_nonce else None,
            mic=bytes(mic_field) if has_mic else None,
        )


def suite_descriptor(spec: PermutationSpec) -> bytes:
    """128-bit D field naming the cipher suite and its mode parameters."""
    name = spec.name.encode("ascii")[:8].ljust(8, b"\x00")
    return (name + spec.state_bits.to_bytes(2, "big") + bytes([spec.rate_bits, spec.rounds])
            + (128).to_bytes(2, "big") + bytes([6, 4]))


@dataclass(frozen=True)
class PartyState:
    role: Role
    pmk: bytes
    my_mac: bytes
    peer_mac: bytes
    spec: PermutationSpec
    d: bytes = b""
    replay_counter: int = 0
    phase: HsPhase = HsPhase.IDLE
    my_nonce: Optional[bytes] = None
    peer_nonce: Optional[bytes] = None
    tx_seq: int = 0
    rx_seq: int = -1
    _keys: Optional[SessionKeys] = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.pmk) != 16:
            raise ValueError("PMK must be 128 bits")
        if len(self.my_mac) != 6 or len(self.peer_mac) != 6:
            raise ValueError("MAC addresses must be 48 bits")
        if not self.d:
            object.__setattr__(self, "d", suite_descriptor(self.spec))
        if len(self.d) != 16:
            raise ValueError("D must be 128 bits")

    @property
    def keys(self) -> SessionKeys:
        if self.phase < HsPhase.DERIVED or self._keys is None:
            raise KeysUnavailable(f"no session keys in phase {self.phase.name}")
        return self._keys


def new_session(s: PartyState) -> PartyState:
    """Drop keys and nonces but keep the replay counter for the next handshake."""
    return replace(s, phase=HsPhase.IDLE, my_nonce=None, peer_nonce=None,
                   tx_seq=0, rx_seq=-1, _keys=None)


def nonce_from_seed(rng_seed: bytes) -> bytes:
    """Deterministic 128-bit nonce from a 256-bit seed."""
    if len(rng_seed) != 32:
        raise ValueError("rng_seed must be 256 bits")
    return hashlib.shake_128(b"wifilwc-nonce" + rng_seed).digest(16)


def _require(s, role, phase):
    if s.role is not role:
        raise WrongRole(f"{s.role.value} cannot perform an {role.value} step")
    if s.phase is not phase:
        raise WrongPhase(f"expected phase {phase.name}, in {s.phase.name}")


def _require_kind(m, kind):
    if not isinstance(m, HandshakeMessage):
        m = HandshakeMessage.from_frame(m)
    if m.kind is not kind:
        raise MalformedFrame(f"expected {kind.name}, got {m.kind.name}")
    return m


def _verify(expected, got):
    if not hmac.compare_digest(expected, got):
        raise MicMismatch("MIC does not verify")


def auth_start(a: PartyState, rng_seed: bytes) -> tuple[PartyState, HandshakeMessage]:
    _require(a, Role.AUTHENTICATOR, HsPhase.IDLE)
    anonce = nonce_from_seed(rng_seed)
    r = a.replay_counter + 1
    msg = HandshakeMessage(MsgKind.MSG1_ANONCE, r, nonce=anonce)
    return replace(a, replay_counter=r, my_nonce=anonce, phase=HsPhase.SENT_NONCE), msg


def supplicant_on_msg1(s: PartyState, m, rng_seed: bytes) -> tuple[PartyState, HandshakeMessage]:
    _require(s, Role.SUPPLICANT, HsPhase.IDLE)
    m = _require_kind(m, MsgKind.MSG1_ANONCE)
    if m.replay_counter <= s.replay_counter:
        raise ReplayDetected(f"counter {m.replay_counter} not above {s.replay_counter}")
    snonce = nonce_from_seed(rng_seed)
    keys = kdf(s.pmk, m.nonce, snonce, s.peer_mac, s.my_mac, s.spec)
    mic_a = mic(keys.kck, m.nonce, m.replay_counter, s.spec)
    out = HandshakeMessage(MsgKind.MSG2_SNONCE_MIC_A, m.replay_counter, nonce=snonce, mic=mic_a)
    s = replace(s, replay_counter=m.replay_counter, my_nonce=snonce, peer_nonce=m.nonce,
                phase=HsPhase.DERIVED, _keys=keys)
    return s, out


def authenticator_on_msg2(a: PartyState, m) -> tuple[PartyState, HandshakeMessage]:
    _require(a, Role.AUTHENTICATOR, HsPhase.SENT_NONCE)
    m = _require_kind(m, MsgKind.MSG2_SNONCE_MIC_A)
    if m.replay_counter != a.replay_counter:
        raise ReplayDetected(f"counter {m.replay_counter}, session uses {a.replay_counter}")
    keys = kdf(a.pmk, a.my_nonce, m.nonce, a.my_mac, a.peer_mac, a.spec)
    _verify(mic(keys.kck, a.my_nonce, a.replay_counter, a.spec), m.mic)
    mic_s = mic(keys.kck, m.nonce, a.replay_counter, a.spec)
    out = HandshakeMessage(MsgKind.MSG3_ANONCE_MIC_S, a.replay_counter, nonce=a.my_nonce, mic=mic_s)
    return replace(a, peer_nonce=m.nonce, phase=HsPhase.DERIVED, _keys=keys), out


def supplicant_on_msg3(s: PartyState, m) -> tuple[PartyState, HandshakeMessage]:
    _require(s, Role.SUPPLICANT, HsPhase.DERIVED)
    m = _require_kind(m, MsgKind.MSG3_ANONCE_MIC_S)
    if m.replay_counter != s.replay_counter:
        raise ReplayDetected(f"counter {m.replay_counter}, session uses {s.replay_counter}")
    if not hmac.compare_digest(m.nonce, s.peer_nonce):
        raise NonceMismatch("ANonce in message 3 differs from message 1")
    kck = s.keys.kck
    _verify(mic(kck, s.my_nonce, s.replay_counter, s.spec), m.mic)
    r1 = s.replay_counter + 1
    out = HandshakeMessage(MsgKind.MSG4_MIC_ALL, r1, mic=mic(kck, s.d, r1, s.spec))
    return replace(s, replay_counter=r1, phase=HsPhase.INSTALLED), out


def authenticator_on_msg4(a: PartyState, m) -> PartyState:
    _require(a, Role.AUTHENTICATOR, HsPhase.DERIVED)
    m = _require_kind(m, MsgKind.MSG4_MIC_ALL)
    r1 = a.replay_counter + 1
    if m.replay_counter != r1:
        raise ReplayDetected(f"counter {m.replay_counter}, expected {r1}")
    _verify(mic(a.keys.kck, a.d, r1, a.spec), m.mic)
    return replace(a, replay_counter=r1, phase=HsPhase.INSTALLED)


# --- protected data phase ---

_DIRECTION = {Role.AUTHENTICATOR: 1, Role.SUPPLICANT: 2}


def record_nonce(sender: Role, seq: int) -> bytes:
    """Direction byte, seven zero bytes, 64-bit big-endian sequence number."""
    return bytes([_DIRECTION[sender]]) + bytes(7) + seq.to_bytes(8, "big")


@dataclass(frozen=True)
class ProtectedRecord:
    ad: bytes
    ciphertext: bytes
    tag: bytes
    seq: int

    def to_bytes(self) -> bytes:
        return (self.seq.to_bytes(8, "big") + bytes([len(self.ad), len(self.ciphertext)])
                + self.ad + self.ciphertext + self.tag)

    @classmethod
    def from_bytes(cls, buf: bytes) -> "ProtectedRecord":
        """Parse a serialized record; trailing zero padding is ignored."""
        if len(buf) < 10:
            raise MalformedFrame("record header truncated")
        n_ad, n_ct = buf[8], buf[9]
        if n_ad > MAX_RECORD_AD or n_ct > MAX_RECORD_MSG:
            raise MalformedFrame("record lengths out of range")
        end = 10 + n_ad + n_ct + 16
        if len(buf) < end:
            raise MalformedFrame("record body truncated")
        body = buf[10:end]
        return cls(ad=bytes(body[:n_ad]), ciphertext=bytes(body[n_ad:n_ad + n_ct]),
                   tag=bytes(body[n_ad + n_ct:]), seq=int.from_bytes(buf[:8], "big"))

    @staticmethod
    def wire_size(n_ad, n_msg):
        return 10 + n_ad + n_msg + 16


def _record_params(s, ad, body, sender, seq):
    if len(body) > MAX_RECORD_MSG or len(ad) > MAX_RECORD_AD:
        raise OversizeInput(f"record limits are {MAX_RECORD_MSG}-byte message, {MAX_RECORD_AD}-byte AD")
    return AeadParams(l_ad=2 if ad else 0, l_m=16, key=s.keys.tk, nonce=record_nonce(sender, seq))


def protect(s: PartyState, ad: bytes, msg: bytes) -> tuple[PartyState, ProtectedRecord]:
    if s.phase is not HsPhase.INSTALLED:
        raise NotInstalled(f"traffic key not installed (phase {s.phase.name})")
    params = _record_params(s, ad, msg, s.role, s.tx_seq)
    ct, tag = aead_encrypt(params, ad, msg, s.spec)
    rec = ProtectedRecord(ad=bytes(ad), ciphertext=ct, tag=tag, seq=s.tx_seq)
    return replace(s, tx_seq=s.tx_seq + 1), rec


def unprotect(s: PartyState, rec: ProtectedRecord) -> tuple[PartyState, bytes]:
    if s.phase is not HsPhase.INSTALLED:
        raise NotInstalled(f"traffic key not installed (phase {s.phase.name})")
    if rec.seq <= s.rx_seq:
        raise ReplayDetected(f"record seq {rec.seq} not above {s.rx_seq}")
    peer = Role.SUPPLICANT if s.role is Role.AUTHENTICATOR else Role.AUTHENTICATOR
    params = _record_params(s, rec.ad, rec.ciphertext, peer, rec.seq)
    if len(rec.tag) != 16:
        raise AuthFailure("tag must be 128 bits")
    plain = aead_decrypt(params, rec.ad, rec.ciphertext, rec.tag, s.spec)
    return replace(s, rx_seq=rec.seq), plain
