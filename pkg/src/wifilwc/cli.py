"""Command line front end.

Exit codes: 0 success, 1 known-answer mismatch, 2 handshake failure,
3 decode failure, 4 configuration error or unwritable output.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .channel import noise_rng
from .errors import ConfigError, DecodeFailure, HandshakeFailed, MissingEntry
from .harness import run_ber_sweep, run_data_phase, run_handshake_scenario
from .kat import check_record, make_record, read_kat, write_kat
from .link import ModemLink
from .ofdm_rx import bit_errors, decode_stream
from .ofdm_tx import GAIN_RANGE, IqBuffer, Modulation
from .perf import CycleCostTable, TimingScenario, build_report, render_timing_table
from .plots import ber_curve, figure_path, timing_chart
from .scenario import Scenario, load_scenario

log = logging.getLogger("wifilwc")

EXIT_OK, EXIT_KAT, EXIT_HANDSHAKE, EXIT_DECODE, EXIT_CONFIG = 0, 1, 2, 3, 4


def _common(p):
    p.add_argument("--scenario", help="scenario file")
    p.add_argument("--seed", type=int, help="master seed; overrides the scenario's seeds")
    p.add_argument("--iq-out", help="write transmitted IQ (little-endian complex64)")
    p.add_argument("--ber-report", help="write snr_db,trials,bit_errors,ber CSV")
    p.add_argument("--timing-fixture", help="cycle-count CSV (default: bundled)")
    p.add_argument("--threshold", type=float, help="frame detection threshold on the |P|/R metric")
    p.add_argument("--json", action="store_true", help="machine-readable summary on stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wifilwc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    hs = sub.add_parser("handshake", help="4-way handshake over the simulated modem link")
    _common(hs)
    hs.add_argument("--transcript", help="JSON-lines transcript path")
    hs.add_argument("--timing-report", help="timing report JSON path (figure written alongside)")

    data = sub.add_parser("data", help="handshake followed by protected data records")
    _common(data)
    data.add_argument("--transcript")
    data.add_argument("--records", type=int, help="number of records (default from scenario)")

    sweep = sub.add_parser("ber-sweep", help="Monte-Carlo BER against theory")
    _common(sweep)
    sweep.add_argument("--modulation", default="BPSK", choices=[m.value for m in Modulation])
    sweep.add_argument("--ebn0", default="0,2,4,6,8", help="comma-separated Eb/N0 points in dB")
    sweep.add_argument("--bits", type=int, default=100_000, help="bits per point")
    sweep.add_argument("--workers", type=int, default=1)
    sweep.add_argument("--out", default="ber_sweep.csv", help="sweep CSV (figure written alongside)")

    tr = sub.add_parser("timing-report", help="recompute the handshake timing table")
    _common(tr)
    tr.add_argument("--out", help="report JSON (figure written alongside)")

    kat = sub.add_parser("aead-kat", help="check or generate AEAD known-answer vectors")
    _common(kat)
    kat.add_argument("--aead-kat", required=True, dest="kat_file", help="KAT file")
    kat.add_argument("--generate", type=int, metavar="N", help="write N fresh vectors instead")
    kat.add_argument("--scheme", default="Reference")

    lb = sub.add_parser("loopback", help="random payloads through TX, channel and RX")
    _common(lb)
    lb.add_argument("--frames", type=int, default=10)

    dec = sub.add_parser("decode", help="decode every frame in a recorded IQ file")
    _common(dec)
    dec.add_argument("--iq-in", required=True, help="complex64 IQ file, e.g. from --iq-out")
    dec.add_argument("--modulation", choices=[m.value for m in Modulation],
                     help="default: the scenario's modulation")
    dec.add_argument("--payload-out", help="write the concatenated payload bytes here")
    return parser


def _scenario(args) -> Scenario:
    if args.scenario:
        try:
            sc = load_scenario(args.scenario)
        except OSError as exc:
            raise ConfigError(f"cannot read scenario: {exc}") from None
    else:
        sc = Scenario()
    if args.seed is not None:
        sc = sc.with_master_seed(args.seed)
    if args.iq_out:
        sc = replace(sc, iq_out=args.iq_out)
    if args.ber_report:
        sc = replace(sc, ber_report=args.ber_report)
    if args.threshold is not None:
        if not 0.0 < args.threshold <= 1.0:
            raise ConfigError("threshold must be in (0, 1]")
        sc = replace(sc, threshold=args.threshold)
    lo, hi = GAIN_RANGE
    if not lo <= sc.gain <= hi:
        log.warning("gain %.3f outside the recommended range [%.2f, %.2f]", sc.gain, lo, hi)
    return sc


def _fixture(args) -> CycleCostTable:
    try:
        return CycleCostTable.load(args.timing_fixture)
    except OSError as exc:
        raise ConfigError(f"cannot read timing fixture: {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def _write_ber_report(path, rows):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["snr_db", "trials", "bit_errors", "ber"])
        for snr, trials, errors in rows:
            w.writerow([f"{snr:.4f}", trials, errors, f"{errors / trials:.6e}" if trials else "nan"])


def _emit(args, summary: dict, text: str):
    if args.json:
        print(json.dumps(summary, sort_keys=True, default=str))
    else:
        print(text)


def _timing(args, table, sc, elapsed_s, out):
    report = build_report(table, TimingScenario(frame_rate_bps=sc.frame_rate_bps, measured_tx_s=elapsed_s))
    written = []
    if out:
        written.append(_write(out, report.to_json()))
        written.append(timing_chart(report, figure_path(out)))
    return report, written


def cmd_handshake(args) -> int:
    sc = _scenario(args)
    table = _fixture(args)
    link = ModemLink.from_scenario(sc, record_iq=bool(sc.iq_out))
    transcript = args.transcript or sc.transcript
    try:
        result = run_handshake_scenario(sc, link)
    except (HandshakeFailed, DecodeFailure) as exc:
        if transcript and hasattr(exc, "result"):
            _write(transcript, exc.result.transcript_jsonl())
        _emit(args, {"ok": False, "error": str(exc), "kind": type(exc).__name__}, f"FAILED: {exc}")
        return EXIT_HANDSHAKE if isinstance(exc, HandshakeFailed) else EXIT_DECODE
    written = []
    if transcript:
        written.append(_write(transcript, result.transcript_jsonl()))
    report, files = _timing(args, table, sc, result.elapsed_s, args.timing_report or sc.timing_report)
    written += files
    if sc.iq_out:
        link.recorded_iq().write(sc.iq_out)
        written.append(Path(sc.iq_out))
    if sc.ber_report:
        _write_ber_report(sc.ber_report, [(sc.channel.snr_db, link.link_bits, link.link_bit_errors)])
        written.append(Path(sc.ber_report))
    summary = {"ok": True, "scheme": sc.scheme, "modulation": sc.modulation.value,
               "frames": len(result.transcript), "tx_time_s": result.elapsed_s,
               "written": [str(p) for p in written],
               "auth_ms": [dict(scheme=h["scheme"], platform=h["platform"], auth_ms=h["auth_ms"])
                           for h in report.simulated]}
    text = (f"handshake OK ({sc.scheme}, {sc.modulation.value}): {len(result.transcript)} frames, "
            f"{result.elapsed_s:.3f} s simulated airtime")
    _emit(args, summary, text)
    return EXIT_OK


def cmd_data(args) -> int:
    sc = _scenario(args)
    link = ModemLink.from_scenario(sc, record_iq=bool(sc.iq_out))
    try:
        hs = run_handshake_scenario(sc, link)
    except HandshakeFailed as exc:
        _emit(args, {"ok": False, "error": str(exc)}, f"FAILED: {exc}")
        return EXIT_HANDSHAKE
    except DecodeFailure as exc:
        _emit(args, {"ok": False, "error": str(exc)}, f"FAILED: {exc}")
        return EXIT_DECODE
    if args.transcript or sc.transcript:
        _write(args.transcript or sc.transcript, hs.transcript_jsonl())
    stats, _, _ = run_data_phase(sc, hs, link, args.records)
    if sc.iq_out:
        link.recorded_iq().write(sc.iq_out)
    if sc.ber_report:
        _write_ber_report(sc.ber_report, [(sc.channel.snr_db, stats.bits, stats.bit_errors)])
    _emit(args, stats.as_dict(),
          f"records: sent {stats.sent}, delivered {stats.delivered}, rejected "
          f"{stats.auth_failures + stats.replays}, lost {stats.lost}, link BER {stats.link_ber:.2e}")
    return EXIT_OK


def cmd_ber_sweep(args) -> int:
    try:
        points_db = [float(x) for x in args.ebn0.split(",") if x.strip()]
    except ValueError:
        raise ConfigError("--ebn0 takes comma-separated numbers") from None
    seed = args.seed if args.seed is not None else 0
    try:
        points = run_ber_sweep(args.modulation, points_db, args.bits, seed, workers=args.workers)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["snr_db", "ebn0_db", "sim_ber", "theory_ber", "bits", "bit_errors", "missed"])
        for p in points:
            w.writerow([f"{p.snr_db:.4f}", f"{p.ebn0_db:.2f}", f"{p.sim_ber:.6e}",
                        f"{p.theory_ber:.6e}", p.bits, p.bit_errors, p.missed])
    fig = ber_curve(points, figure_path(out), args.modulation)
    if args.ber_report:
        _write_ber_report(args.ber_report, [(p.snr_db, p.trials, p.bit_errors) for p in points])
    lines = [f"{'Eb/N0':>6} {'SNR':>7} {'sim BER':>10} {'theory':>10} {'missed':>6}"]
    lines += [f"{p.ebn0_db:>6.1f} {p.snr_db:>7.2f} {p.sim_ber:>10.3e} {p.theory_ber:>10.3e} {p.missed:>6}"
              for p in points]
    lines.append(f"wrote {out} and {fig}")
    _emit(args, {"points": [p.as_dict() for p in points], "csv": str(out), "figure": str(fig)},
          "\n".join(lines))
    return EXIT_OK


def cmd_timing_report(args) -> int:
    sc = _scenario(args)
    report, written = _timing(args, _fixture(args), sc, None, args.out)
    if args.json:
        print(report.to_json())
    else:
        print(render_timing_table(report))
        for p in written:
            print(f"wrote {p}")
    return EXIT_OK


def cmd_aead_kat(args) -> int:
    path = Path(args.kat_file)
    if args.generate:
        rng = noise_rng(args.seed or 0)
        recs = []
        for i in range(args.generate):
            n_ad, n_msg = int(rng.integers(0, 33)), int(rng.integers(0, 65))
            recs.append(make_record(args.scheme, rng.bytes(16), rng.bytes(16), rng.bytes(n_ad), rng.bytes(n_msg)))
        write_kat(path, recs)
        _emit(args, {"written": str(path), "records": len(recs)}, f"wrote {len(recs)} vectors to {path}")
        return EXIT_OK
    try:
        records = read_kat(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read KAT file: {exc}") from None
    failures = [(i, p) for i, rec in enumerate(records) for p in check_record(rec)]
    _emit(args, {"records": len(records), "failures": [f"{i}: {p}" for i, p in failures]},
          "\n".join([f"vector {i}: {p}" for i, p in failures]
                    + [f"{len(records) - len({i for i, _ in failures})}/{len(records)} vectors pass"]))
    return EXIT_KAT if failures else EXIT_OK


def cmd_loopback(args) -> int:
    sc = _scenario(args)
    link = ModemLink.from_scenario(sc, record_iq=bool(sc.iq_out))
    rng = noise_rng(sc.seeds.data)
    errors = bits = lost = 0
    for _ in range(args.frames):
        payload = rng.bytes(96)
        try:
            got = link.deliver(payload)
        except DecodeFailure:
            lost += 1
            continue
        bits += 8 * len(payload)
        errors += bit_errors(payload, got)
    if sc.iq_out:
        link.recorded_iq().write(sc.iq_out)
    if sc.ber_report:
        _write_ber_report(sc.ber_report, [(sc.channel.snr_db, bits, errors)])
    ber = errors / bits if bits else float("nan")
    _emit(args, {"frames": args.frames, "lost": lost, "bits": bits, "bit_errors": errors, "ber": ber},
          f"{args.frames} frames, {lost} lost, BER {ber:.3e}")
    return EXIT_OK


def cmd_decode(args) -> int:
    sc = _scenario(args)
    modulation = Modulation(args.modulation) if args.modulation else sc.modulation
    try:
        iq = IqBuffer.read(args.iq_in)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read IQ file: {exc}") from None
    frames = decode_stream(iq, modulation, threshold=sc.threshold)
    if args.payload_out:
        Path(args.payload_out).write_bytes(b"".join(f.payload for f in frames))
    summary = {"samples": len(iq), "frames": [
        {"index": f.frame_index, "length": len(f.payload), "header_ok": f.header_ok,
         "payload": f.payload.hex()} for f in frames]}
    lines = [f"{len(frames)} frames in {len(iq)} samples"]
    lines += [f"  #{f.frame_index:3d} len {len(f.payload):2d} header {'ok' if f.header_ok else 'BAD'} "
              f"{f.payload.hex()}" for f in frames]
    _emit(args, summary, "\n".join(lines))
    return EXIT_OK if frames else EXIT_DECODE


COMMANDS = {
    "handshake": cmd_handshake, "data": cmd_data, "ber-sweep": cmd_ber_sweep,
    "timing-report": cmd_timing_report, "aead-kat": cmd_aead_kat, "loopback": cmd_loopback,
    "decode": cmd_decode,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, MissingEntry) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
