"""Byte pipes used by the harness.

``ModemLink`` sends bytes through the full OFDM transmitter, the channel model and
the receiver, one 96-byte tagged payload per burst. ``DirectLink`` skips the
modem; it is what protocol-only tests use.
"""

from __future__ import annotations

import threading

import numpy as np

from .carriers import DEFAULT_PLAN
from .channel import ChannelConfig, apply_channel
from .ofdm_rx import DEFAULT_THRESHOLD, bit_errors, receive_frame
from .ofdm_tx import IqBuffer, Modulation, tag_stream, transmit_frame
from .perf import FRAME_AIR_BYTES, USRP_RATE_BPS, simulated_tx_time


def burst_seed(seed: int, counter: int) -> int:
    """Independent 64-bit noise seed for the ``counter``-th burst of a run."""
    return int(np.random.SeedSequence([int(seed), int(counter)]).generate_state(1, np.uint64)[0])


class DirectLink:
    """Lossless link that still keeps the simulated airtime clock."""

    def __init__(self, frame_rate_bps=USRP_RATE_BPS):
        self.frame_rate_bps = frame_rate_bps
        self.clock_s = 0.0
        self.frames_sent = 0
        self.lock = threading.RLock()

    def _tick(self, n_frames):
        self.frames_sent += n_frames
        self.clock_s += n_frames * simulated_tx_time(FRAME_AIR_BYTES, self.frame_rate_bps)

    def transmit(self, data: bytes):
        with self.lock:
            frames = tag_stream(data)
            self._tick(len(frames))
            return [f.bytes for f in frames]

    def receive(self, bursts) -> bytes:
        return b"".join(bursts)

    def deliver(self, data: bytes) -> bytes:
        return self.receive(self.transmit(data))[:len(data)]

    def wait(self, seconds: float):
        with self.lock:
            self.clock_s += seconds


class ModemLink(DirectLink):
    def __init__(self, modulation=Modulation.QPSK, channel: ChannelConfig = ChannelConfig(),
                 gain=0.02, guard=200, threshold=DEFAULT_THRESHOLD,
                 frame_rate_bps=USRP_RATE_BPS, plan=DEFAULT_PLAN, record_iq=False):
        super().__init__(frame_rate_bps)
        self.modulation = Modulation(modulation)
        self.channel = channel
        self.gain = gain
        self.guard = guard
        self.threshold = threshold
        self.plan = plan
        self.record_iq = record_iq
        self.tx_iq: list[IqBuffer] = []
        self.bursts = 0
        self.link_bits = 0
        self.link_bit_errors = 0
        self._sent: dict = {}

    @classmethod
    def from_scenario(cls, sc, record_iq=False):
        return cls(sc.modulation, sc.channel, sc.gain, sc.guard_samples, sc.threshold,
                   sc.frame_rate_bps, record_iq=record_iq)

    def transmit(self, data: bytes) -> list[IqBuffer]:
        """Modulate, pad with silence, and pass each frame through the channel."""
        pad = np.zeros(self.guard, dtype=np.complex64)
        out = []
        with self.lock:
            for frame in tag_stream(data):
                tx = transmit_frame(frame, self.modulation, self.plan, self.gain)
                burst = IqBuffer(np.concatenate([pad, tx.samples, pad]), tx.sample_rate_hz)
                if self.record_iq:
                    self.tx_iq.append(burst)
                out.append(apply_channel(burst, self.channel, burst_seed(self.channel.seed, self.bursts)))
                self._sent[id(out[-1])] = frame.bytes
                self.bursts += 1
                self._tick(1)
        return out

    def receive(self, bursts) -> bytes:
        """Strict decode: a header CRC failure in any burst loses the whole message.

        Decoded bursts are compared with what was sent to keep a running link BER.
        """
        parts = []
        for b in bursts:
            sent = self._sent.pop(id(b), None)
            got = receive_frame(b, self.modulation, self.plan, self.threshold, strict=True)[0]
            if sent is not None:
                with self.lock:
                    self.link_bits += 8 * len(sent)
                    self.link_bit_errors += bit_errors(sent, got[:len(sent)].ljust(len(sent), b"\0"))
            parts.append(got)
        return b"".join(parts)

    def recorded_iq(self) -> IqBuffer:
        if not self.tx_iq:
            return IqBuffer(np.zeros(0, dtype=np.complex64))
        return IqBuffer(np.concatenate([b.samples for b in self.tx_iq]))

