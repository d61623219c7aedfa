"""Timing arithmetic over checked-in cycle counts.

Throughput is ``|m| / (C / f)``, generation time ``1000 C / f`` ms, and the
handshake authentication time ``1000 T_tx + 2 T_KDF + 3 T_MIC`` ms. Cycle counts
are fixture data; nothing here measures hardware.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Optional

from .errors import MissingEntry, NonPositiveInput

CLOCK_HZ = 16e6
USRP_RATE_BPS = 16.82e3
WIFI_RATE_BPS = 50e6
TOLERANCE = 0.05

PAYLOAD_BYTES = 96
HEADER_BYTES = 48
# sync words and cyclic prefix: 880 transmitted samples carry 432 symbols
SYNC_CP_EXPANSION = 880 / 432
# Frozen once so that the 4-frame handshake costs 1472 byte-times (0.70 s at 16.82 Kbps).
AIR_CALIBRATION = 69 / 55
FRAME_AIR_BYTES = (PAYLOAD_BYTES + HEADER_BYTES) * SYNC_CP_EXPANSION * AIR_CALIBRATION

FIXTURE_COLUMNS = ("scheme", "platform", "function", "cycles", "sram", "flash", "m_bits",
                   "golden_throughput_kbps", "golden_gentime_ms")

# Handshake rows: (scheme, platform) -> (observed 4-way Tx time [s], printed Auth-Time [ms])
HANDSHAKE_GOLDEN = {
    ("SPIX", "ATmega128"): (0.70, 956.40),
    ("SPIX", "MSP430F2013"): (0.69, 794.09),
    ("SPIX", "LM3S9D96"): (0.70, 721.50),
    ("ACE", "MSP430F2013"): (0.71, 895.03),
    ("ACE", "LM3S9D96"): (0.73, 764.50),
    ("WAGE", "ATmega128"): (0.71, 756.78),
    ("WAGE", "MSP430F2370"): (0.72, 776.01),
    ("WAGE", "LM3S9D96"): (0.69, 725.91),
}


def _positive(**values):
    for name, v in values.items():
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
            raise NonPositiveInput(f"{name} must be positive and finite, got {v!r}")


def throughput_kbps(m_bits, cycles, f_hz=CLOCK_HZ) -> float:
    _positive(m_bits=m_bits, cycles=cycles, f_hz=f_hz)
    return m_bits / (cycles / f_hz) / 1000


def gen_time_ms(cycles, f_hz=CLOCK_HZ) -> float:
    _positive(cycles=cycles, f_hz=f_hz)
    return 1000 * cycles / f_hz


def auth_time_ms(t_4way_tx_s, t_kdf_ms, t_mic_ms) -> float:
    _positive(t_4way_tx_s=t_4way_tx_s, t_kdf_ms=t_kdf_ms, t_mic_ms=t_mic_ms)
    return 1000 * t_4way_tx_s + 2 * t_kdf_ms + 3 * t_mic_ms


def scale_tx_time(t_s, measured_rate_bps, target_rate_bps) -> float:
    """Transmission time rescaled from the measured link rate to a target rate.

    Seconds in, seconds out; 0.7 s at 16.82 Kbps becomes 0.235 ms at 50 Mbps.
    """
    _positive(t_s=t_s, measured_rate_bps=measured_rate_bps, target_rate_bps=target_rate_bps)
    return t_s * measured_rate_bps / target_rate_bps


def simulated_tx_time(n_bytes, frame_rate_bps=USRP_RATE_BPS) -> float:
    _positive(n_bytes=n_bytes, frame_rate_bps=frame_rate_bps)
    return 8 * n_bytes / frame_rate_bps


def air_bytes(n_frames: int) -> float:
    """Byte-times on air for ``n_frames`` 96-byte payload frames."""
    return n_frames * FRAME_AIR_BYTES


@dataclass(frozen=True)
class CycleCostEntry:
    scheme: str
    platform: str
    function: str
    cycles: int
    sram_bytes: int
    flash_bytes: int
    m_bits: int
    golden_throughput_kbps: Optional[float] = None
    golden_gentime_ms: Optional[float] = None
    f_hz: float = CLOCK_HZ

    def __post_init__(self):
        if self.cycles <= 0:
            raise NonPositiveInput("cycle counts must be positive")

    @property
    def key(self):
        return (self.scheme, self.platform, self.function)


class CycleCostTable:
    def __init__(self, entries):
        self._entries = {}
        for e in entries:
            if e.key in self._entries:
                raise ValueError(f"duplicate fixture row {e.key}")
            self._entries[e.key] = e

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries.values())

    def get(self, scheme, platform, function) -> CycleCostEntry:
        try:
            return self._entries[(scheme, platform, function)]
        except KeyError:
            raise MissingEntry(f"no fixture row for {scheme}/{platform}/{function}") from None

    def without(self, scheme, platform, function) -> "CycleCostTable":
        return CycleCostTable(e for e in self if e.key != (scheme, platform, function))

    @classmethod
    def from_csv(cls, text: str) -> "CycleCostTable":
        reader = csv.DictReader(io.StringIO(text))
        missing = set(FIXTURE_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"fixture lacks columns {sorted(missing)}")

        def opt(v):
            return float(v) if v not in ("", None) else None

        return cls(
            CycleCostEntry(
                scheme=row["scheme"], platform=row["platform"], function=row["function"],
                cycles=int(row["cycles"]), sram_bytes=int(row["sram"]), flash_bytes=int(row["flash"]),
                m_bits=int(row["m_bits"]), golden_throughput_kbps=opt(row["golden_throughput_kbps"]),
                golden_gentime_ms=opt(row["golden_gentime_ms"]),
            )
            for row in reader
        )

    @classmethod
    def load(cls, path=None) -> "CycleCostTable":
        if path is None:
            text = resources.files("wifilwc").joinpath("data/cycle_costs.csv").read_text()
        else:
            with open(path, newline="") as fh:
                text = fh.read()
        return cls.from_csv(text)


@dataclass(frozen=True)
class TimingScenario:
    frame_rate_bps: float = USRP_RATE_BPS
    target_rate_bps: float = WIFI_RATE_BPS
    n_frames: int = 4
    measured_tx_s: Optional[float] = None  # e.g. the simulated link clock of a run


@dataclass
class TimingReport:
    rows: list = field(default_factory=list)
    handshake: list = field(default_factory=list)
    mismatches: list = field(default_factory=list)
    t_4way_tx_s: float = 0.0
    simulated: list = field(default_factory=list)

    @property
    def gen_time_ms(self):
        return {(r["scheme"], r["platform"], r["function"]): r["gen_time_ms"] for r in self.rows}

    @property
    def throughput_kbps(self):
        return {(r["scheme"], r["platform"], r["function"]): r["throughput_kbps"] for r in self.rows}

    @property
    def t_auth_ms(self):
        return {(h["scheme"], h["platform"]): h["auth_ms"] for h in self.handshake}

    @property
    def scaled_auth_ms(self):
        return {(h["scheme"], h["platform"]): h["scaled_auth_ms"] for h in self.handshake}

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _delta(value, golden):
    return None if golden is None else value - golden


def build_report(table: CycleCostTable, scenario: Optional[TimingScenario] = None) -> TimingReport:
    """Recompute every derived column from cycles and compare with the printed values."""
    scenario = scenario or TimingScenario()
    report = TimingReport()
    for e in table:
        gt = gen_time_ms(e.cycles, e.f_hz)
        thr = throughput_kbps(e.m_bits, e.cycles, e.f_hz)
        row = dict(scheme=e.scheme, platform=e.platform, function=e.function, cycles=e.cycles,
                   sram=e.sram_bytes, flash=e.flash_bytes, m_bits=e.m_bits,
                   gen_time_ms=gt, throughput_kbps=thr,
                   golden_gen_time_ms=e.golden_gentime_ms,
                   golden_throughput_kbps=e.golden_throughput_kbps,
                   d_gen_time_ms=_delta(gt, e.golden_gentime_ms),
                   d_throughput_kbps=_delta(thr, e.golden_throughput_kbps))
        report.rows.append(row)
        for col in ("d_gen_time_ms", "d_throughput_kbps"):
            if row[col] is not None and abs(row[col]) > TOLERANCE:
                report.mismatches.append(f"{e.scheme}/{e.platform}/{e.function} {col}={row[col]:+.3f}")

    sim_tx = scenario.measured_tx_s
    if sim_tx is None:
        sim_tx = simulated_tx_time(air_bytes(scenario.n_frames), scenario.frame_rate_bps)
    report.t_4way_tx_s = sim_tx

    for (scheme, platform), (tx_s, golden_auth) in HANDSHAKE_GOLDEN.items():
        t_kdf = gen_time_ms(table.get(scheme, platform, "KDF").cycles)
        t_mic = gen_time_ms(table.get(scheme, platform, "MIC").cycles)
        auth = auth_time_ms(tx_s, t_kdf, t_mic)
        scaled_tx_ms = 1000 * scale_tx_time(tx_s, scenario.frame_rate_bps, scenario.target_rate_bps)
        report.handshake.append(dict(
            scheme=scheme, platform=platform, kdf_ms=t_kdf, mic_ms=t_mic, tx_s=tx_s,
            auth_ms=auth, golden_auth_ms=golden_auth, d_auth_ms=auth - golden_auth,
            scaled_tx_ms=scaled_tx_ms, scaled_auth_ms=scaled_tx_ms + 2 * t_kdf + 3 * t_mic,
        ))
        if abs(auth - golden_auth) > TOLERANCE:
            report.mismatches.append(f"{scheme}/{platform} auth_ms={auth - golden_auth:+.3f}")
        report.simulated.append(dict(
            scheme=scheme, platform=platform, tx_s=sim_tx,
            auth_ms=auth_time_ms(sim_tx, t_kdf, t_mic),
        ))
    return report


def render_timing_table(report: TimingReport) -> str:
    """Aligned text table laid out like the handshake performance table."""
    rows = {(r["scheme"], r["platform"], r["function"]): r for r in report.rows}
    head = (f"{'Scheme':<6} {'Platform':<12} {'Func':<4} {'SRAM':>5} {'Flash':>6} {'Cycles':>8} "
            f"{'Kbps':>8} {'Gen[ms]':>8} {'Tx[s]':>6} {'Auth[ms]':>9} {'Golden':>8} {'@50Mbps':>9}")
    lines = [head, "-" * len(head)]
    for h in report.handshake:
        for i, func in enumerate(("KDF", "MIC")):
            r = rows[(h["scheme"], h["platform"], func)]
            tail = (f"{h['tx_s']:>6.2f} {h['auth_ms']:>9.2f} {h['golden_auth_ms']:>8.2f} "
                    f"{h['scaled_auth_ms']:>9.2f}") if i == 0 else ""
            lines.append(
                f"{h['scheme'] if i == 0 else '':<6} {h['platform'] if i == 0 else '':<12} {func:<4} "
                f"{r['sram']:>5} {r['flash']:>6} {r['cycles']:>8} {r['throughput_kbps']:>8.2f} "
                f"{r['gen_time_ms']:>8.2f} {tail}".rstrip()
            )
    lines.append("")
    lines.append(f"simulated 4-way Tx time: {report.t_4way_tx_s:.3f} s")
    lines.append("mismatches: " + (", ".join(report.mismatches) if report.mismatches else "none"))
    return "\n".join(lines)
