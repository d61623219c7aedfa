import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from wifilwc.errors import MissingEntry, NonPositiveInput
from wifilwc.perf import (FRAME_AIR_BYTES, HANDSHAKE_GOLDEN, CycleCostEntry, CycleCostTable,
                          TimingScenario, air_bytes, auth_time_ms, build_report, gen_time_ms,
                          render_timing_table, scale_tx_time, simulated_tx_time, throughput_kbps)


@pytest.fixture(scope="module")
def table():
    return CycleCostTable.load()


def test_formulas_by_hand():
    # 16e6 cycles at 16 MHz is one second
    assert gen_time_ms(16e6) == 1000
    assert throughput_kbps(1024, 16e6) == pytest.approx(1.024)
    assert auth_time_ms(0.7, 10, 20) == pytest.approx(700 + 20 + 60)


@given(st.floats(1e-3, 10), st.floats(1e3, 1e9))
def test_equal_rates_scale_to_identity(t, rate):
    assert scale_tx_time(t, rate, rate) == pytest.approx(t)


def test_scale_to_wifi_rate():
    assert scale_tx_time(0.7, 16.82e3, 50e6) * 1000 == pytest.approx(0.2355, abs=5e-4)


@pytest.mark.parametrize("bad", [0, -1, math.nan, math.inf])
def test_non_positive_inputs(bad):
    with pytest.raises(NonPositiveInput):
        gen_time_ms(bad)
    with pytest.raises(NonPositiveInput):
        throughput_kbps(1024, bad)
    with pytest.raises(NonPositiveInput):
        scale_tx_time(0.7, bad, 50e6)


def test_fixture_shape(table):
    assert len(table) == 44
    funcs = {e.function for e in table}
    assert {"KDF", "MIC", "Perm", "AE(0,16)", "AE(2,16)"} <= funcs
    for scheme, platform in HANDSHAKE_GOLDEN:
        assert table.get(scheme, platform, "KDF").cycles > 0
    with pytest.raises(MissingEntry):
        table.get("SPIX", "Z80", "KDF")
    with pytest.raises(NonPositiveInput):
        CycleCostEntry("x", "y", "z", 0, 0, 0, 8)


def test_every_derived_cell_within_tolerance(table):
    rep = build_report(table)
    assert rep.mismatches == []
    for r in rep.rows:
        if r["golden_gen_time_ms"] is not None:
            assert abs(r["d_gen_time_ms"]) <= 0.05
        if r["golden_throughput_kbps"] is not None:
            assert abs(r["d_throughput_kbps"]) <= 0.05


def test_airtime_model():
    assert air_bytes(4) == pytest.approx(1472)
    assert simulated_tx_time(air_bytes(4)) == pytest.approx(0.70, abs=0.005)
    assert FRAME_AIR_BYTES > 144


def test_report_missing_row_propagates(table):
    with pytest.raises(MissingEntry):
        build_report(table.without("WAGE", "LM3S9D96", "MIC"))


def test_report_uses_measured_time(table):
    rep = build_report(table, TimingScenario(measured_tx_s=1.0))
    assert rep.t_4way_tx_s == 1.0
    kdf = table.get("SPIX", "ATmega128", "KDF").cycles / 16e3
    mic = table.get("SPIX", "ATmega128", "MIC").cycles / 16e3
    assert rep.simulated[0]["auth_ms"] == pytest.approx(1000 + 2 * kdf + 3 * mic)


def test_report_serialization_and_table(table):
    rep = build_report(table)
    data = json.loads(rep.to_json())
    assert len(data["handshake"]) == 8
    text = render_timing_table(rep)
    assert "mismatches: none" in text
    assert text.count("\n") >= 17


def test_csv_rejects_missing_columns():
    with pytest.raises(ValueError):
        CycleCostTable.from_csv("scheme,platform\nA,B\n")
