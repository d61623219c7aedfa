import csv
import json

import numpy as np
import pytest

from wifilwc.cli import main
from wifilwc.ofdm_tx import IqBuffer


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_handshake_writes_reports(tmp_path, capsys):
    t, tr, iq = tmp_path / "t.jsonl", tmp_path / "timing.json", tmp_path / "hs.iq"
    code, out = run(capsys, "handshake", "--seed", "3", "--transcript", str(t),
                    "--timing-report", str(tr), "--iq-out", str(iq))
    assert code == 0, out.err
    assert len(t.read_text().splitlines()) == 4
    assert json.loads(tr.read_text())["mismatches"] == []
    assert (tmp_path / "timing.png").stat().st_size > 1000
    assert len(IqBuffer.read(iq)) == 4 * (880 + 400)


def test_handshake_json_summary(capsys):
    code, out = run(capsys, "handshake", "--json")
    summary = json.loads(out.out)
    assert code == 0 and summary["ok"] and summary["frames"] == 4


def test_handshake_tamper_exit_code(tmp_path, capsys):
    sc = tmp_path / "s.ini"
    sc.write_text("[attack]\ntamper_frame = 2\ntamper_bit = 150\n")
    code, out = run(capsys, "handshake", "--scenario", str(sc))
    assert code == 2 and "msg2" in out.out


def test_decode_failure_exit_code(tmp_path, capsys):
    sc = tmp_path / "s.ini"
    sc.write_text("[channel]\nsnr_db = -10\n")
    t = tmp_path / "t.jsonl"
    code, _ = run(capsys, "handshake", "--scenario", str(sc), "--transcript", str(t))
    assert code == 3
    assert [json.loads(x)["delivered"] for x in t.read_text().splitlines()] == [False, False]


@pytest.mark.parametrize("argv", [
    ["handshake", "--scenario", "/nonexistent.ini"],
    ["timing-report", "--timing-fixture", "/nonexistent.csv"],
    ["ber-sweep", "--ebn0", "x"],
    ["ber-sweep", "--bits", "10"],
])
def test_config_errors(argv, capsys):
    assert main(argv) == 4


def test_missing_fixture_row(tmp_path, capsys):
    from importlib import resources
    text = resources.files("wifilwc").joinpath("data/cycle_costs.csv").read_text()
    lines = [ln for ln in text.splitlines() if not ln.startswith("ACE,LM3S9D96,MIC")]
    bad = tmp_path / "fixture.csv"
    bad.write_text("\n".join(lines) + "\n")
    assert main(["timing-report", "--timing-fixture", str(bad)]) == 4


def test_gain_warning(tmp_path, capsys, caplog):
    sc = tmp_path / "s.ini"
    sc.write_text("[scenario]\ngain = 0.1\n")
    code, _ = run(capsys, "loopback", "--scenario", str(sc), "--frames", "2")
    assert code == 0 and "outside the recommended range" in caplog.text


def test_loopback_ber_report(tmp_path, capsys):
    rep = tmp_path / "ber.csv"
    code, out = run(capsys, "loopback", "--frames", "3", "--ber-report", str(rep), "--json")
    assert code == 0 and json.loads(out.out)["bit_errors"] == 0
    rows = list(csv.reader(rep.open()))
    assert rows[0] == ["snr_db", "trials", "bit_errors", "ber"]
    assert rows[1][1:] == ["2304", "0", "0.000000e+00"]


def test_ber_sweep_outputs(tmp_path, capsys):
    out_csv, rep = tmp_path / "sweep.csv", tmp_path / "ber.csv"
    code, _ = run(capsys, "ber-sweep", "--ebn0", "4,8", "--out", str(out_csv), "--ber-report", str(rep),
                  "--seed", "1")
    assert code == 0
    rows = list(csv.DictReader(out_csv.open()))
    assert len(rows) == 2 and float(rows[0]["sim_ber"]) > float(rows[1]["sim_ber"])
    assert (tmp_path / "sweep.png").stat().st_size > 1000
    assert list(csv.reader(rep.open()))[0] == ["snr_db", "trials", "bit_errors", "ber"]


def test_timing_report_text(tmp_path, capsys):
    code, out = run(capsys, "timing-report", "--out", str(tmp_path / "r.json"))
    assert code == 0 and "mismatches: none" in out.out
    assert (tmp_path / "r.png").exists()


def test_aead_kat(tmp_path, capsys):
    from importlib import resources
    golden = resources.files("wifilwc").joinpath("data/aead_kat.txt")
    assert main(["aead-kat", "--aead-kat", str(golden)]) == 0
    lines = golden.read_text().splitlines()
    lines[1] = lines[1][:-2] + ("00" if not lines[1].endswith("00") else "11")
    bad = tmp_path / "bad.txt"
    bad.write_text("\n".join(lines) + "\n")
    assert main(["aead-kat", "--aead-kat", str(bad)]) == 1
    gen = tmp_path / "gen.txt"
    assert main(["aead-kat", "--aead-kat", str(gen), "--generate", "4", "--scheme", "SPIX"]) == 0
    assert main(["aead-kat", "--aead-kat", str(gen)]) == 0


def test_data_command(tmp_path, capsys):
    sc = tmp_path / "s.ini"
    sc.write_text("[data]\nl_ad = 2\nn_records = 4\n[channel]\nsnr_db = 25\n")
    code, out = run(capsys, "data", "--scenario", str(sc), "--json")
    stats = json.loads(out.out)
    assert code == 0 and stats["delivered"] == 4 and stats["corrupted_plaintext"] == 0


def test_iq_output_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.iq", tmp_path / "b.iq"
    for p in (a, b):
        assert main(["handshake", "--seed", "8", "--iq-out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert np.frombuffer(a.read_bytes(), "<c8").size > 0


def test_decode_reads_recorded_iq(tmp_path, capsys):
    iq, t, pay = tmp_path / "hs.iq", tmp_path / "t.jsonl", tmp_path / "p.bin"
    assert run(capsys, "handshake", "--iq-out", str(iq), "--transcript", str(t))[0] == 0
    code, out = run(capsys, "decode", "--iq-in", str(iq), "--payload-out", str(pay), "--json")
    assert code == 0
    frames = json.loads(out.out)["frames"]
    sent = [json.loads(line)["frame"] for line in t.read_text().splitlines()]
    assert [f["payload"] for f in frames] == sent
    assert pay.read_bytes() == bytes.fromhex("".join(sent))


def test_decode_empty_and_missing(tmp_path, capsys):
    silent = tmp_path / "z.iq"
    IqBuffer(np.zeros(3000, np.complex64)).write(silent)
    assert run(capsys, "decode", "--iq-in", str(silent))[0] == 3
    assert run(capsys, "decode", "--iq-in", str(tmp_path / "none.iq"))[0] == 4


def test_threshold_flag(capsys):
    assert run(capsys, "loopback", "--frames", "2", "--threshold", "0.6")[0] == 0
    assert run(capsys, "loopback", "--threshold", "1.5")[0] == 4


def test_unwritable_report_is_nonzero(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    code, out = run(capsys, "handshake", "--transcript", str(blocker / "t.jsonl"))
    assert code != 0 and "cannot write" in out.err


def test_handshake_ber_report(tmp_path, capsys):
    rep = tmp_path / "hs_ber.csv"
    assert run(capsys, "handshake", "--ber-report", str(rep))[0] == 0
    rows = list(csv.DictReader(rep.open()))
    assert len(rows) == 1
    assert int(rows[0]["trials"]) == 4 * 96 * 8 and int(rows[0]["bit_errors"]) == 0
