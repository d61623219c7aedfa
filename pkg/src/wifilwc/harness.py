"""End-to-end runs: a threaded 4-way handshake over a link, a protected data
phase on the installed keys, and Monte-Carlo BER sweeps of the modem.

Each party runs in its own thread and only sees what comes off the link. A frame
the receiver cannot decode counts as lost: the sender waits ``timeout_s``,
retransmits it once, and gives up after a second loss. Timestamps come from the
link's simulated airtime clock, so transcripts are reproducible.
"""

from __future__ import annotations

import json
import math
import queue
import threading
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from .channel import awgn, noise_rng, theoretical_ber_mpsk
from .errors import (AuthFailure, DecodeFailure, HandshakeAbort, HandshakeFailed, MalformedFrame,
                     ReplayDetected, WifiLwcError)
from .handshake import (FRAME_BYTES, MsgKind, PartyState, ProtectedRecord, Role, auth_start,
                        authenticator_on_msg2, authenticator_on_msg4, protect, supplicant_on_msg1,
                        supplicant_on_msg3, unprotect)
from .link import DirectLink, ModemLink, burst_seed
from .ofdm_rx import bit_errors, demodulate_frame
from .ofdm_tx import IqBuffer, Modulation, TaggedPayload, transmit_frame
from .scenario import Scenario
from .sponge import get_spec

# Safety net against a wedged peer thread; never reached in a healthy run.
WATCHDOG_S = 120.0

Tamper = Callable[[MsgKind, int, bytes], bytes]


def flip_bit(frame: bytes, bit: int) -> bytes:
    buf = bytearray(frame)
    buf[bit // 8] ^= 0x80 >> (bit % 8)
    return bytes(buf)


def bit_flip_tamper(kind: int, bit: int) -> Tamper:
    """Flip ``bit`` of message ``kind`` (1..4) on every attempt."""
    def hook(k, attempt, frame):
        return flip_bit(frame, bit) if int(k) == kind else frame
    return hook


class _PeerAborted(Exception):
    pass


@dataclass
class HandshakeResult:
    authenticator: PartyState
    supplicant: PartyState
    transcript: list
    elapsed_s: float
    failure: Optional[WifiLwcError] = None

    @property
    def ok(self) -> bool:
        return self.failure is None

    def transcript_jsonl(self) -> str:
        return "".join(json.dumps(e, sort_keys=True) + "\n" for e in self.transcript)


def make_parties(sc: Scenario) -> tuple[PartyState, PartyState]:
    spec = get_spec(sc.scheme)
    return (PartyState(Role.AUTHENTICATOR, sc.pmk, sc.ap_mac, sc.sta_mac, spec),
            PartyState(Role.SUPPLICANT, sc.pmk, sc.sta_mac, sc.ap_mac, spec))


class _Port:
    """One party's view of the link: send frames, wait for the next event."""

    def __init__(self, role, boxes, link, transcript, tamper, timeout_s):
        self.role = role
        self.peer = Role.SUPPLICANT if role is Role.AUTHENTICATOR else Role.AUTHENTICATOR
        self.inbox = boxes[role]
        self.outbox = boxes[self.peer]
        self.link = link
        self.transcript = transcript
        self.tamper = tamper
        self.timeout_s = timeout_s
        self.last = None

    def send(self, frame: bytes, kind: MsgKind, attempt: int = 1):
        self.last = (frame, kind)
        with self.link.lock:
            on_air = self.tamper(kind, attempt, frame) if self.tamper else frame
            t0 = self.link.clock_s
            bursts = self.link.transmit(on_air)
            entry = dict(seq=len(self.transcript),
                         direction="AP->STA" if self.role is Role.AUTHENTICATOR else "STA->AP",
                         kind=kind.name, attempt=attempt, frame=on_air.hex(),
                         t_start_s=round(t0, 9), t_end_s=round(self.link.clock_s, 9), delivered=None)
            self.transcript.append(entry)
        self.outbox.put(("air", bursts, entry))

    def signal(self, what: str):
        self.outbox.put((what,))

    def _next(self):
        """Block for the next event; undecodable bursts are reported back as losses."""
        while True:
            try:
                item = self.inbox.get(timeout=WATCHDOG_S)
            except queue.Empty:
                raise DecodeFailure("peer went silent") from None
            if item[0] != "air":
                return item
            _, bursts, entry = item
            try:
                data = self.link.receive(bursts)[:FRAME_BYTES]
            except DecodeFailure:
                entry["delivered"] = False
                self.signal("timeout")
                continue
            entry["delivered"] = True
            return ("frame", data)

    def await_reply(self, expect_frame: bool = True) -> Optional[bytes]:
        """Wait for the peer's answer to our last frame, retransmitting once on loss."""
        attempt = 1
        while True:
            item = self._next()
            if item[0] == "frame" and expect_frame:
                return item[1]
            if item[0] == "done" and not expect_frame:
                return None
            if item[0] == "abort":
                raise _PeerAborted()
            if item[0] == "timeout":
                frame, kind = self.last
                if attempt >= 2:
                    raise DecodeFailure(f"{kind.name} lost twice")
                self.link.wait(self.timeout_s)
                attempt += 1
                self.send(frame, kind, attempt)
                continue
            raise MalformedFrame(f"unexpected event {item[0]!r}")


def run_handshake(sc: Scenario, link=None, tamper: Optional[Tamper] = None,
                  authenticator: Optional[PartyState] = None,
                  supplicant: Optional[PartyState] = None, session: int = 0) -> HandshakeResult:
    """Run one 4-way handshake; the result carries the failure instead of raising."""
    a0, s0 = make_parties(sc)
    a0 = authenticator or a0
    s0 = supplicant or s0
    link = link if link is not None else ModemLink.from_scenario(sc)
    if tamper is None and sc.tamper_frame:
        tamper = bit_flip_tamper(sc.tamper_frame, sc.tamper_bit)
    boxes = {Role.AUTHENTICATOR: queue.Queue(), Role.SUPPLICANT: queue.Queue()}
    transcript: list = []
    final = {Role.AUTHENTICATOR: a0, Role.SUPPLICANT: s0}
    errors: dict = {}
    crashes: list = []
    start = link.clock_s

    def ap_side(port: _Port):
        st, m1 = auth_start(a0, sc.seeds.nonce_seed("authenticator", session))
        final[port.role] = st
        port.send(m1.padded_frame, m1.kind)
        step = "msg2"
        try:
            st, m3 = authenticator_on_msg2(st, port.await_reply())
            final[port.role] = st
            port.send(m3.padded_frame, m3.kind)
            step = "msg4"
            st = authenticator_on_msg4(st, port.await_reply())
        except HandshakeAbort as exc:
            raise HandshakeFailed(step, exc) from exc
        final[port.role] = st
        port.signal("done")

    def sta_side(port: _Port):
        item = port._next()
        if item[0] != "frame":
            raise _PeerAborted()
        step = "msg1"
        try:
            st, m2 = supplicant_on_msg1(s0, item[1], sc.seeds.nonce_seed("supplicant", session))
            final[port.role] = st
            port.send(m2.padded_frame, m2.kind)
            step = "msg3"
            st, m4 = supplicant_on_msg3(st, port.await_reply())
        except HandshakeAbort as exc:
            raise HandshakeFailed(step, exc) from exc
        final[port.role] = st
        port.send(m4.padded_frame, m4.kind)
        port.await_reply(expect_frame=False)

    def run(body, role):
        port = _Port(role, boxes, link, transcript, tamper, sc.timeout_s)
        try:
            body(port)
        except _PeerAborted:
            pass
        except WifiLwcError as exc:
            errors[role] = exc
            port.signal("abort")
        except BaseException as exc:  # bug, not a protocol outcome: unblock the peer, re-raise below
            crashes.append(exc)
            port.signal("abort")

    threads = [threading.Thread(target=run, args=(ap_side, Role.AUTHENTICATOR), name="authenticator"),
               threading.Thread(target=run, args=(sta_side, Role.SUPPLICANT), name="supplicant")]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if crashes:
        raise crashes[0]
    failure = errors.get(Role.AUTHENTICATOR) or errors.get(Role.SUPPLICANT)
    return HandshakeResult(final[Role.AUTHENTICATOR], final[Role.SUPPLICANT], transcript,
                           link.clock_s - start, failure)


def run_handshake_scenario(sc: Scenario, link=None, tamper: Optional[Tamper] = None) -> HandshakeResult:
    """Like :func:`run_handshake` but raises on failure, with ``exc.result`` attached."""
    result = run_handshake(sc, link, tamper)
    if result.failure is not None:
        result.failure.result = result
        raise result.failure
    return result


@dataclass
class DataStats:
    sent: int = 0
    delivered: int = 0
    auth_failures: int = 0
    replays: int = 0
    lost: int = 0
    bit_errors: int = 0
    bits: int = 0
    corrupted_plaintext: int = 0

    @property
    def link_ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else 0.0

    def as_dict(self):
        return dict(asdict(self), link_ber=self.link_ber)


def run_data_phase(sc: Scenario, hs: HandshakeResult, link=None, n_records: Optional[int] = None):
    """Send protected records supplicant to authenticator; returns (stats, ap, sta)."""
    link = link if link is not None else ModemLink.from_scenario(sc)
    rng = noise_rng(sc.seeds.data)
    ap, sta = hs.authenticator, hs.supplicant
    stats = DataStats()
    for _ in range(sc.data_phase.n_records if n_records is None else n_records):
        msg = rng.bytes(8 * sc.data_phase.l_m)
        ad = rng.bytes(8 * sc.data_phase.l_ad)
        sta, rec = protect(sta, ad, msg)
        wire = rec.to_bytes()
        stats.sent += 1
        try:
            got = link.deliver(wire)
        except DecodeFailure:
            stats.lost += 1
            continue
        stats.bits += 8 * len(wire)
        stats.bit_errors += bit_errors(wire, got)
        try:
            ap, plain = unprotect(ap, ProtectedRecord.from_bytes(got))
        except ReplayDetected:
            stats.replays += 1
            continue
        except (AuthFailure, MalformedFrame):
            stats.auth_failures += 1
            continue
        if plain == msg:
            stats.delivered += 1
        else:
            stats.corrupted_plaintext += 1
    return stats, ap, sta


# --- BER sweep ---------------------------------------------------------------

MIN_SWEEP_BITS = 100_000
SWEEP_THRESHOLD = 0.5
SWEEP_GAIN = 0.02
SWEEP_GUARD = 200


def ebn0_to_snr_db(ebn0_db: float, modulation) -> float:
    """Per-sample SNR for a given Eb/N0: data power sits on 52 of 64 bins."""
    k = Modulation(modulation).bits_per_symbol
    return ebn0_db + 10 * math.log10(k * 52 / 64)


@dataclass(frozen=True)
class BerPoint:
    ebn0_db: float
    snr_db: float
    frames: int
    bits: int
    bit_errors: int
    missed: int
    theory_ber: float

    @property
    def sim_ber(self) -> float:
        return self.bit_errors / self.bits

    @property
    def trials(self) -> int:
        return self.bits

    def as_dict(self):
        return dict(asdict(self), sim_ber=self.sim_ber, trials=self.trials)


def _sweep_point(args) -> BerPoint:
    modulation, ebn0_db, n_frames, seed, index, threshold = args
    modulation = Modulation(modulation)
    snr_db = ebn0_to_snr_db(ebn0_db, modulation)
    data_rng = noise_rng(burst_seed(seed, 2 * index))
    pad = np.zeros(SWEEP_GUARD, dtype=np.complex64)
    errors = missed = 0
    for f in range(n_frames):
        payload = data_rng.bytes(96)
        tx = transmit_frame(TaggedPayload(payload, f % 4096), modulation, gain=SWEEP_GAIN)
        burst = IqBuffer(np.concatenate([pad, tx.samples, pad]))
        rx = awgn(burst, snr_db, burst_seed(seed, (index << 32) | (f + 1)))
        try:
            got = demodulate_frame(rx, modulation, threshold=threshold).payload
        except DecodeFailure:
            missed += 1
            errors += 96 * 8 // 2
            continue
        errors += bit_errors(payload, got)
    m = 2 ** modulation.bits_per_symbol
    return BerPoint(ebn0_db, snr_db, n_frames, n_frames * 96 * 8, errors, missed,
                    theoretical_ber_mpsk(m, ebn0_db))


def run_ber_sweep(modulation, ebn0_list, bits_per_point: int = MIN_SWEEP_BITS, seed: int = 0,
                  threshold: float = SWEEP_THRESHOLD, workers: int = 1) -> list[BerPoint]:
    """Monte-Carlo BER of the full TX/RX chain over AWGN.

    Missed frames count as half their payload bits in error. Results depend only
    on ``seed``, not on ``workers``.
    """
    if bits_per_point < MIN_SWEEP_BITS:
        raise ValueError(f"need at least {MIN_SWEEP_BITS} bits per point")
    n_frames = -(-int(bits_per_point) // (96 * 8))
    jobs = [(Modulation(modulation).value, float(e), n_frames, seed, i, threshold)
            for i, e in enumerate(ebn0_list)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_point, jobs))
    return [_sweep_point(j) for j in jobs]


__all__ = [
    "BerPoint", "DataStats", "DirectLink", "HandshakeResult", "ModemLink", "bit_flip_tamper",
    "ebn0_to_snr_db", "flip_bit", "make_parties", "run_ber_sweep", "run_data_phase",
    "run_handshake", "run_handshake_scenario",
]
