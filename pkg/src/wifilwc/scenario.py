"""Scenario files: flat ``key = value`` text grouped under section headers.

Example::

    [scenario]
    scheme = SPIX
    modulation = QPSK
    pmk = 000102030405060708090a0b0c0d0e0f

    [channel]
    snr_db = 25
    taps = 0:1, 10:0.5

    [seeds]
    master = 7
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .channel import ChannelConfig
from .errors import ConfigError
from .ofdm_rx import DEFAULT_THRESHOLD
from .ofdm_tx import Modulation
from .sponge import SCHEMES


def derive_seed(master: int, label: str, width: int = 8) -> bytes:
    return hashlib.sha256(f"wifilwc:{master}:{label}".encode()).digest()[:width]


def derive_int(master: int, label: str) -> int:
    return int.from_bytes(derive_seed(master, label), "big")


@dataclass(frozen=True)
class Seeds:
    authenticator: int = 1
    supplicant: int = 2
    channel: int = 3
    data: int = 4

    @classmethod
    def from_master(cls, master: int) -> "Seeds":
        return cls(*(derive_int(master, k) for k in ("authenticator", "supplicant", "channel", "data")))

    def nonce_seed(self, role: str, session: int = 0) -> bytes:
        """256-bit seed for a party's nonce generator."""
        base = self.authenticator if role == "authenticator" else self.supplicant
        return hashlib.sha256(f"nonce:{role}:{base}:{session}".encode()).digest()


@dataclass(frozen=True)
class DataPhase:
    l_ad: int = 0
    l_m: int = 16
    n_records: int = 10


@dataclass(frozen=True)
class Scenario:
    scheme: str = "SPIX"
    modulation: Modulation = Modulation.QPSK
    channel: ChannelConfig = field(default_factory=lambda: ChannelConfig(seed=Seeds().channel))
    pmk: bytes = bytes(range(16))
    ap_mac: bytes = bytes.fromhex("020000000001")
    sta_mac: bytes = bytes.fromhex("020000000002")
    seeds: Seeds = field(default_factory=Seeds)
    data_phase: DataPhase = field(default_factory=DataPhase)
    gain: float = 0.02
    timeout_s: float = 0.5
    threshold: float = DEFAULT_THRESHOLD
    guard_samples: int = 200
    frame_rate_bps: float = 16.82e3
    tamper_frame: int = 0
    tamper_bit: int = 0
    transcript: Optional[str] = None
    timing_report: Optional[str] = None
    iq_out: Optional[str] = None
    ber_report: Optional[str] = None

    def validate(self) -> "Scenario":
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {sorted(SCHEMES)}")
        if len(self.pmk) != 16:
            raise ConfigError("pmk must be 32 hex digits")
        if len(self.ap_mac) != 6 or len(self.sta_mac) != 6:
            raise ConfigError("MAC addresses must be 6 bytes")
        if self.data_phase.l_ad not in (0, 2) or self.data_phase.l_m != 16:
            raise ConfigError("data phase supports l_ad in {0, 2} and l_m = 16")
        if self.data_phase.n_records < 0:
            raise ConfigError("n_records must be non-negative")
        if not 0 <= self.tamper_frame <= 4:
            raise ConfigError("tamper_frame is 0 (off) or a message number 1..4")
        if not 0 <= self.tamper_bit < 96 * 8:
            raise ConfigError("tamper_bit must address a bit of the 96-byte frame")
        if self.gain <= 0 or self.timeout_s < 0:
            raise ConfigError("gain must be positive and timeout non-negative")
        return self

    def with_master_seed(self, master: int) -> "Scenario":
        seeds = Seeds.from_master(master)
        return replace(self, seeds=seeds, channel=replace(self.channel, seed=seeds.channel))


def parse_taps(text: str) -> tuple:
    taps = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        delay, _, gain = item.partition(":")
        try:
            taps.append((int(delay), complex(gain.replace(" ", "")) if gain else 1 + 0j))
        except ValueError:
            raise ConfigError(f"bad tap {item!r}; use delay:gain, e.g. 10:0.5+0.2j") from None
    if not taps:
        raise ConfigError("channel needs at least one tap")
    return tuple(taps)


def _hex(value, name):
    try:
        return bytes.fromhex(value.replace(":", "").replace(" ", ""))
    except ValueError:
        raise ConfigError(f"{name} is not valid hex") from None


def load_scenario(path) -> Scenario:
    text = Path(path).read_text()
    return parse_scenario(text)


def parse_scenario(text: str) -> Scenario:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None

    def get(section, key, conv=str, default=None):
        if not cp.has_option(section, key):
            return default
        raw = cp.get(section, key).strip()
        try:
            return conv(raw)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from None

    base = Scenario()
    kw = {}
    if cp.has_section("scenario"):
        kw.update(
            scheme=get("scenario", "scheme", str, base.scheme),
            modulation=get("scenario", "modulation", lambda v: Modulation(v.upper()), base.modulation),
            pmk=get("scenario", "pmk", lambda v: _hex(v, "pmk"), base.pmk),
            ap_mac=get("scenario", "ap_mac", lambda v: _hex(v, "ap_mac"), base.ap_mac),
            sta_mac=get("scenario", "sta_mac", lambda v: _hex(v, "sta_mac"), base.sta_mac),
            gain=get("scenario", "gain", float, base.gain),
            timeout_s=get("scenario", "timeout_s", float, base.timeout_s),
            threshold=get("scenario", "detection_threshold", float, base.threshold),
            guard_samples=get("scenario", "guard_samples", int, base.guard_samples),
            frame_rate_bps=get("scenario", "frame_rate_bps", float, base.frame_rate_bps),
        )
    seeds = base.seeds
    master = get("seeds", "master", int)
    if master is not None:
        seeds = Seeds.from_master(master)
    seeds = Seeds(
        authenticator=get("seeds", "authenticator", int, seeds.authenticator),
        supplicant=get("seeds", "supplicant", int, seeds.supplicant),
        channel=get("seeds", "channel", int, seeds.channel),
        data=get("seeds", "data", int, seeds.data),
    )
    kw["seeds"] = seeds
    kw["channel"] = ChannelConfig(
        snr_db=get("channel", "snr_db", float, math.inf),
        cfo_fraction=get("channel", "cfo_fraction", float, 0.0),
        taps=get("channel", "taps", parse_taps, ((0, 1 + 0j),)),
        seed=get("channel", "seed", int, seeds.channel),
    )
    kw["data_phase"] = DataPhase(
        l_ad=get("data", "l_ad", int, 0),
        l_m=get("data", "l_m", int, 16),
        n_records=get("data", "n_records", int, 10),
    )
    kw["tamper_frame"] = get("attack", "tamper_frame", int, 0)
    kw["tamper_bit"] = get("attack", "tamper_bit", int, 0)
    for key, attr in (("transcript", "transcript"), ("timing", "timing_report"),
                      ("iq_out", "iq_out"), ("ber_report", "ber_report")):
        kw[attr] = get("reports", key, str, None)
    return Scenario(**kw).validate()
