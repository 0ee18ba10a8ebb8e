import csv
import io
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from greenbench import Device, load_device, load_scenario, run_scenario
from greenbench.errors import MetricAbsentEverywhere, ValidationError
from greenbench.metrics import MeasurementSet, MetricKind, MetricResult, compute_ecr
from greenbench.orchestrator import RETURN_TO_FULL_VIOLATION
from greenbench.reporting import (
    ABSENT,
    ComparisonTable,
    DeviceReport,
    canonical_json,
    export,
    format_sig,
    parse_json,
    render_comparison,
    report_filename,
    standard_metrics,
)

TABLE1 = (("t640", "2002", 14.0), ("t1600", "2007", 9.7), ("t4000", "2011", 3.54), ("ptx", "2012", 1.54))


@pytest.fixture(scope="module")
def table1_reports():
    return [run_scenario(load_scenario(f"scenario_table1_{n}.json")).report for n, _, _ in TABLE1]


@pytest.fixture(scope="module")
def cheater_outcome():
    return run_scenario(load_scenario("scenario_cheater_vl.json"))


def test_table1_row(table1_reports):
    table = render_comparison(table1_reports, MetricKind.ECR)
    assert [r.label for r in table.rows] == [lbl for _, lbl, _ in TABLE1]
    for row, (_, _, ecr) in zip(table.rows, TABLE1):
        assert float(f"{row.value:.3g}") == ecr
    assert table.leader() == 3  # lowest ECR wins


def test_table1_text_and_units(table1_reports):
    text = render_comparison(table1_reports, MetricKind.ECR).render_text()
    lines = text.splitlines()
    assert "ECR (W/Gbps)" in lines[0]
    assert [ln.split()[2] for ln in lines[1:]] == ["14.00", "9.700", "3.540", "1.540"]


def test_table1_csv_has_five_lines(table1_reports):
    data = export(render_comparison(table1_reports, MetricKind.ECR), "csv")
    assert data.count(b"\r\n") == 5
    rows = list(csv.reader(io.StringIO(data.decode("utf-8"))))
    assert rows[0][2] == "ECR (W/Gbps)"
    assert float(rows[1][2]) == pytest.approx(14.0, rel=1e-12)


def test_empty_table_is_header_only_csv():
    data = export(ComparisonTable(MetricKind.EER_VL), "csv")
    assert data == b"device,label,EER_VL (Gbps/W),leader,note\r\n"


def test_single_report_single_row(table1_reports):
    table = render_comparison(table1_reports[:1], MetricKind.ECR)
    assert len(table.rows) == 1 and table.leader() == 0


def test_invalid_set_never_reaches_a_cell(cheater_outcome, table1_reports):
    rep = cheater_outcome.report
    assert rep.metric(MetricKind.EER_VL) is None
    assert rep.validity[0]["reason"] == RETURN_TO_FULL_VIOLATION
    compliant = run_scenario(load_scenario("scenario_table2_vl.json")).report
    table = render_comparison([compliant, rep], MetricKind.EER_VL)
    assert table.rows[1].value is None
    assert RETURN_TO_FULL_VIOLATION in table.rows[1].note
    assert ABSENT in table.render_text().splitlines()[2]


def test_add_set_drops_metrics_from_invalid_set():
    mset = MeasurementSet("variable_load", 100.0)
    mset.invalidate("nope")
    rep = DeviceReport("x")
    rep.add_set(mset, [compute_ecr(800.0, 100.0)])
    assert rep.metrics == [] and not rep.all_valid
    assert standard_metrics(mset) == []


def test_absent_everywhere(table1_reports):
    with pytest.raises(MetricAbsentEverywhere):
        render_comparison(table1_reports, MetricKind.EER_EX)


def test_leader_direction():
    t = ComparisonTable(MetricKind.EER_VL)
    t.rows = render_comparison(
        [DeviceReport("a", metrics=[MetricResult(MetricKind.EER_VL, 0.04, {})]),
         DeviceReport("b", metrics=[MetricResult(MetricKind.EER_VL, 0.05, {})])],
        MetricKind.EER_VL,
    ).rows
    assert t.leader() == 1


@pytest.mark.parametrize(
    "value, text",
    [(14.0, "14.00"), (9.7, "9.700"), (0.049489638, "0.04949"), (-0.9089940781, "-0.9090"),
     (9.99996, "10.00"), (863.0, "863.0"), (12345.6, "12350"), (0.0, "0.000")],
)
def test_format_sig(value, text):
    assert format_sig(value) == text


def test_rendering_is_deterministic(table1_reports):
    a = render_comparison(table1_reports, MetricKind.ECR)
    b = render_comparison(table1_reports, MetricKind.ECR)
    assert export(a, "csv") == export(b, "csv")
    assert export(a, "json") == export(b, "json")
    assert a.render_text() == b.render_text()


def test_report_json_round_trip(table1_reports, cheater_outcome):
    for rep in [*table1_reports, cheater_outcome.report]:
        data = export(rep, "json")
        assert data.endswith(b"\n")
        again = parse_json(data, DeviceReport)
        assert again == rep
        assert export(again, "json") == data


def test_table_json_round_trip(table1_reports):
    table = render_comparison(table1_reports, MetricKind.ECR)
    data = export(table, "json")
    assert export(parse_json(data, ComparisonTable), "json") == data


def test_table_units_must_match_kind():
    d = ComparisonTable(MetricKind.ECR).to_dict()
    d["units"] = "Gbps/W"
    with pytest.raises(ValidationError):
        ComparisonTable.from_dict(d)


def test_measurement_csv_full_precision(cheater_outcome):
    mset = cheater_outcome.sets[0]
    rows = list(csv.reader(io.StringIO(export(mset, "csv").decode("utf-8"))))
    n = sum(len(v) for v in mset.phases.values())
    assert len(rows) == n + 1
    flat = [s for v in mset.phases.values() for s in v]
    assert [float(r[4]) for r in rows[1:]] == [s.power for s in flat]


def test_csv_quoting():
    rep = DeviceReport('odd, "name"', metrics=[compute_ecr(863.0, 100.0)])
    data = export(rep, "csv").decode("utf-8")
    assert '"odd, ""name"""' in data
    assert list(csv.reader(io.StringIO(data)))[1][0] == 'odd, "name"'


def test_unknown_format():
    with pytest.raises(ValidationError):
        export(DeviceReport("x"), "xml")


def test_report_filename():
    assert report_filename("Juniper PTX/5000", "peak", "abc123") == "Juniper-PTX-5000_peak_abc123.json"


@given(st.dictionaries(st.text(), st.floats(allow_nan=False) | st.text() | st.integers(), max_size=5))
def test_canonical_json_stable(d):
    data = canonical_json(d)
    assert canonical_json(json.loads(data)) == data


def test_device_round_trip_via_export():
    model = load_device("three_state")
    data = canonical_json(model)
    assert canonical_json(type(model).from_dict(json.loads(data))) == data
    assert Device(model).model == model
