import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from mpmath import mp, mpf, log10

from greenbench.errors import (
    InvalidMeasurementSet,
    MissingPacketSize,
    NonPositivePower,
    ReducedExceedsFull,
    StateOrderViolation,
    UnknownInterfaceClass,
    ValidationError,
    ZeroThroughput,
)
from greenbench.metrics import (
    AllowanceTable,
    MeasurementSample,
    MeasurementSet,
    MetricKind,
    MetricResult,
    PacketSizeWeights,
    WeightProfile,
    allowance_budget,
    compute_ecr,
    compute_eer_ex,
    compute_eer_vl,
    compute_teeer,
    compute_teer_atis,
    metric_from_set,
    parse_kind,
    weighted_peak_throughput,
)

# table2_router fixture: idle, 10, 30, 50, 80, 100 % load
E_IDLE, E_10, E_30, E_HALF, E_80, E_FULL = 768.0, 790.0, 801.0, 816.0, 842.0, 863.0


def hp(expr):
    """Evaluate a callable under 40-digit mpmath precision."""
    with mp.workdps(40):
        return float(expr())


# -- ECR -----------------------------------------------------------------------


@pytest.mark.parametrize(
    "energy, throughput, expected",
    [(1400.0, 100.0, 14.0), (0.0, 50.0, 0.0), (863.0, 100.0, 8.63)],
)
def test_ecr_examples(energy, throughput, expected):
    r = compute_ecr(energy, throughput)
    assert r.kind is MetricKind.ECR
    assert r.units == "W/Gbps"
    assert r.value == pytest.approx(expected, rel=1e-15)


def test_ecr_zero_throughput():
    with pytest.raises(ZeroThroughput):
        compute_ecr(100.0, 0.0)


@given(
    st.floats(min_value=0.0, max_value=1e6, allow_nan=False),
    st.floats(min_value=1e-3, max_value=1e5, allow_nan=False),
)
def test_ecr_round_trip(e, t):
    assert compute_ecr(e, t).value * t == pytest.approx(e, rel=1e-12, abs=1e-300)


# -- TEEER / ATIS TEER --------------------------------------------------------


def test_teeer_table2_verizon(verizon):
    oracle = hp(lambda: -log10((mpf("0.35") * 768 + mpf("0.4") * 816 + mpf("0.25") * 863) / 100))
    r = compute_teeer(E_IDLE, E_HALF, E_FULL, 100.0, verizon)
    assert r.inputs["weighted_power_w"] == pytest.approx(810.95, rel=1e-15)
    assert r.value == pytest.approx(oracle, rel=1e-14)
    assert r.value == pytest.approx(-0.9089940781402512, abs=1e-15)
    assert r.units == "dimensionless"


def test_teeer_trivial_points(verizon):
    assert compute_teeer(50.0, 50.0, 50.0, 50.0, verizon).value == 0.0
    assert compute_teeer(10.0, 10.0, 10.0, 100.0, verizon).value == pytest.approx(1.0, rel=1e-15)


def test_teeer_errors(verizon):
    with pytest.raises(ZeroThroughput):
        compute_teeer(1.0, 1.0, 1.0, 0.0, verizon)
    with pytest.raises(NonPositivePower):
        compute_teeer(0.0, 0.0, 0.0, 1.0, verizon)


def test_teer_atis_table2_inflation(verizon):
    r = compute_teer_atis(E_IDLE, E_HALF, E_FULL, 100.0, verizon)
    assert r.value == pytest.approx(hp(lambda: mpf(100) / mpf("810.95")), rel=1e-14)
    assert r.value == pytest.approx(0.12331, abs=5e-6)
    inv_ecr = 1.0 / compute_ecr(E_FULL, 100.0).value
    assert inv_ecr == pytest.approx(hp(lambda: mpf(100) / 863), rel=1e-14)
    assert inv_ecr == pytest.approx(0.11588, abs=1e-5)
    assert r.value > inv_ecr


def test_teer_atis_degenerate_profiles():
    full_only = WeightProfile(0.0, 0.0, 1.0)
    assert compute_teer_atis(E_IDLE, E_HALF, E_FULL, 100.0, full_only).value == pytest.approx(
        1.0 / compute_ecr(E_FULL, 100.0).value, rel=1e-15
    )
    for w in (WeightProfile(0.35, 0.4, 0.25), WeightProfile(0.2, 0.2, 0.6)):
        assert compute_teer_atis(500.0, 500.0, 500.0, 100.0, w).value == pytest.approx(0.2, rel=1e-15)


def test_teer_atis_nonpositive(verizon):
    with pytest.raises(NonPositivePower):
        compute_teer_atis(0.0, 0.0, 0.0, 100.0, verizon)


powers = st.floats(min_value=1.0, max_value=1e5, allow_nan=False)
throughputs = st.floats(min_value=1e-2, max_value=1e5, allow_nan=False)


@given(powers, powers, powers, throughputs, st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_teeer_ranking_matches_weighted_power(a, b, c, t, s1, s2):
    w = WeightProfile(0.35, 0.4, 0.25)
    dev1 = (a, b, c)
    dev2 = (a * s1, b * s2, c)
    r1 = compute_teeer(*dev1, t, w)
    r2 = compute_teeer(*dev2, t, w)
    p1, p2 = r1.inputs["weighted_power_w"], r2.inputs["weighted_power_w"]
    if p1 < p2:
        assert r1.value > r2.value
    elif p1 > p2:
        assert r1.value < r2.value


@given(powers, powers, powers, throughputs, st.floats(1.001, 10.0))
def test_teeer_monotone(a, b, c, t, k):
    w = WeightProfile(0.35, 0.4, 0.25)
    base = compute_teeer(a, b, c, t, w).value
    assert compute_teeer(a * k, b, c, t, w).value < base
    assert compute_teeer(a, b * k, c, t, w).value < base
    assert compute_teeer(a, b, c * k, t, w).value < base
    assert compute_teeer(a, b, c, t * k, w).value > base


# -- EER-VL ---------------------------------------------------------------------


def test_eer_vl_table2_example():
    w = WeightProfile(0.25, 0.5, 0.25)
    r = compute_eer_vl(100.0, 30.0, E_FULL, E_30, E_IDLE, w)
    assert r.value == pytest.approx(hp(lambda: mpf(40) / mpf("808.25")), rel=1e-14)
    assert r.value == pytest.approx(0.04949, abs=5e-6)
    assert r.units == "Gbps/W"


def test_eer_vl_proportional_device_equals_peak():
    w = WeightProfile(1 / 3, 1 / 3, 1 - 2 / 3)
    r = compute_eer_vl(100.0, 50.0, 800.0, 400.0, 0.0, w)
    assert r.value == pytest.approx(0.125, rel=1e-12)


def test_eer_vl_full_only_profile():
    r = compute_eer_vl(100.0, 30.0, E_FULL, E_30, E_IDLE, WeightProfile(1.0, 0.0, 0.0))
    assert r.value == pytest.approx(1.0 / 8.63, rel=1e-15)


def test_eer_vl_errors():
    w = WeightProfile(0.25, 0.5, 0.25)
    with pytest.raises(ReducedExceedsFull):
        compute_eer_vl(30.0, 100.0, 1.0, 1.0, 1.0, w)
    with pytest.raises(NonPositivePower):
        compute_eer_vl(100.0, 30.0, 0.0, 0.0, 0.0, w)


weights3 = st.tuples(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0)).filter(
    lambda t: sum(t) > 1e-3
)


def _profile(raw):
    total = sum(raw)
    a, b = raw[0] / total, raw[1] / total
    return WeightProfile(a, b, max(0.0, 1.0 - a - b))


# subnormal ratios would round the precondition itself away
ratios = st.just(0.0) | st.floats(1e-6, 1.0)


@given(weights3, throughputs, ratios, powers, st.floats(1.0, 3.0), st.floats(0.0, 1e5))
@settings(max_examples=300)
def test_eer_vl_bounded_by_peak(raw, t_f, r, e_100, extra, e_i):
    w = _profile(raw)
    t_r = r * t_f
    # E_r * T_f >= E_100 * T_r
    e_r = e_100 * r * extra
    assume(w.alpha * e_100 + w.beta * e_r + w.epsilon * e_i > 0)
    assert e_r * t_f >= e_100 * t_r * (1 - 1e-15)
    vl = compute_eer_vl(t_f, t_r, e_100, e_r, e_i, w).value
    assert vl <= (t_f / e_100) * (1 + 1e-12)


@given(weights3, throughputs, st.floats(0.0, 1.0), powers, powers, powers)
def test_atis_dominates_eer_vl(raw, t_f, r, e_100, e_r, e_i):
    # same per-phase weights: ATIS binds its first weight to idle, last to full
    w = _profile(raw)
    t_r = r * t_f
    atis = compute_teer_atis(e_i, e_r, e_100, t_f, WeightProfile(w.epsilon, w.beta, w.alpha)).value
    vl = compute_eer_vl(t_f, t_r, e_100, e_r, e_i, w).value
    assert atis >= vl * (1 - 1e-12)


def test_atis_equals_eer_vl_only_without_idle():
    w = WeightProfile(0.5, 0.5, 0.0)
    swapped = WeightProfile(0.0, 0.5, 0.5)
    vl = compute_eer_vl(100.0, 100.0, 863.0, 816.0, 768.0, w).value
    atis = compute_teer_atis(768.0, 816.0, 863.0, 100.0, swapped).value
    assert atis == pytest.approx(vl, rel=1e-15)


# -- EER-EX ---------------------------------------------------------------------


def test_eer_ex_example():
    w = WeightProfile(1 / 3, 1 / 3, 1 - 2 / 3)
    r = compute_eer_ex(100.0, 50.0, 10.0, 863.0, 700.0, 500.0, w)
    assert r.value == pytest.approx(hp(lambda: mpf(160) / 2063), rel=1e-12)
    assert r.value == pytest.approx(0.07756, abs=5e-6)


def test_eer_ex_degenerate():
    w = WeightProfile(1 / 3, 1 / 3, 1 - 2 / 3)
    assert compute_eer_ex(100.0, 100.0, 100.0, 863.0, 863.0, 863.0, w).value == pytest.approx(
        1 / 8.63, rel=1e-14
    )
    full = WeightProfile(1.0, 0.0, 0.0)
    assert compute_eer_ex(100.0, 50.0, 10.0, 863.0, 700.0, 500.0, full).value == pytest.approx(
        100 / 863, rel=1e-15
    )


def test_eer_ex_errors():
    w = WeightProfile(0.4, 0.3, 0.3)
    with pytest.raises(StateOrderViolation):
        compute_eer_ex(100.0, 10.0, 50.0, 1.0, 1.0, 1.0, w)
    with pytest.raises(NonPositivePower):
        compute_eer_ex(100.0, 50.0, 10.0, 0.0, 0.0, 0.0, w)


@given(weights3, throughputs, st.floats(0.0, 1.0), powers, powers, powers)
def test_eer_ex_collapses_to_eer_vl(raw, t_f, r, e_f, e_r, e_i):
    w = _profile(raw)
    t_r = r * t_f
    ex = compute_eer_ex(t_f, t_r, 0.0, e_f, e_r, e_i, w).value
    vl = compute_eer_vl(t_f, t_r, e_f, e_r, e_i, w).value
    assert ex == vl


# -- allowances and weighted peak -----------------------------------------------


def test_allowance_budget():
    table = AllowanceTable({"WAN": 10.0, "LAN": 2.0})
    ceiling, ok = allowance_budget({"WAN": 1, "LAN": 4}, table, 15.0)
    assert (ceiling.value, ok) == (18.0, True)
    assert ceiling.units == "W"
    assert allowance_budget({}, table, 0.0)[0].value == 0.0
    assert allowance_budget({}, table, 0.0)[1] is True
    assert allowance_budget({"WAN": 1, "LAN": 4}, table, 18.1)[1] is False
    with pytest.raises(UnknownInterfaceClass):
        allowance_budget({"DSL": 1}, table, 1.0)
    with pytest.raises(ValidationError):
        AllowanceTable({"WAN": 0.0})


def test_weighted_peak_throughput():
    w = PacketSizeWeights(((64, 0.5), (1518, 0.5)))
    assert weighted_peak_throughput({64: 40.0, 1518: 100.0}, w).value == 70.0
    assert weighted_peak_throughput({64: 40.0}, PacketSizeWeights(((64, 1.0),))).value == 40.0
    with pytest.raises(MissingPacketSize):
        weighted_peak_throughput({64: 40.0}, w)


@given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=6), st.floats(0.1, 400.0))
def test_weighted_peak_of_constant(raw, x):
    total = sum(raw)
    ws = [r / total for r in raw]
    ws[-1] = 1.0 - sum(ws[:-1])
    entries = tuple((64 * (i + 1), max(0.0, w)) for i, w in enumerate(ws))
    r = weighted_peak_throughput({s: x for s, _ in entries}, PacketSizeWeights(entries))
    assert r.value == pytest.approx(x, rel=1e-12)


# -- value types ----------------------------------------------------------------


def test_weight_profile_invariants():
    with pytest.raises(ValidationError):
        WeightProfile(0.5, 0.3, 0.1)
    with pytest.raises(ValidationError):
        WeightProfile(1.2, -0.1, -0.1)
    with pytest.raises(ValidationError):
        WeightProfile(0.5, 0.25, 0.25, reduced_load_fraction=1.0)
    WeightProfile(0.5, 0.25, 0.25 + 5e-10)


def test_packet_size_weights_invariants():
    with pytest.raises(ValidationError):
        PacketSizeWeights(((1518, 0.5), (64, 0.5)))
    with pytest.raises(ValidationError):
        PacketSizeWeights(((64, 0.5), (1518, 0.4)))


def test_sample_invariants():
    with pytest.raises(ValidationError):
        MeasurementSample(0.5, 10.0, 11.0, 100.0, 1.0, 64)
    with pytest.raises(ValidationError):
        MeasurementSample(1.5, 10.0, 10.0, 100.0, 1.0, 64)


def test_measurement_set_validity_rules():
    with pytest.raises(ValidationError):
        MeasurementSet("peak", 1.0, valid=True, invalidation_reason="x")
    mset = MeasurementSet("peak", 100.0)
    mset.add("full", MeasurementSample(1.0, 100.0, 100.0, 863.0, 60.0, 1518))
    assert metric_from_set(mset, MetricKind.ECR).value == pytest.approx(8.63)
    mset.invalidate("return-to-full-capacity violation")
    with pytest.raises(InvalidMeasurementSet, match="refusing to compute metrics"):
        metric_from_set(mset, MetricKind.ECR)


def test_metric_result_units_bound_to_kind():
    for kind in MetricKind:
        r = MetricResult(kind, 1.0)
        assert MetricResult.from_dict(r.to_dict()) == r
    bad = MetricResult(MetricKind.ECR, 1.0).to_dict() | {"units": "Gbps/W"}
    with pytest.raises(ValidationError):
        MetricResult.from_dict(bad)


@pytest.mark.parametrize(
    "text, kind",
    [("ecr", MetricKind.ECR), ("eer_vl", MetricKind.EER_VL), ("EER-EX", MetricKind.EER_EX),
     ("teer", MetricKind.TEER_ATIS), ("teeer", MetricKind.TEEER)],
)
def test_parse_kind(text, kind):
    assert parse_kind(text) is kind


def test_purity(verizon):
    a = compute_teeer(E_IDLE, E_HALF, E_FULL, 100.0, verizon).value
    b = compute_teeer(E_IDLE, E_HALF, E_FULL, 100.0, verizon).value
    assert math.copysign(1, a) == math.copysign(1, b) and a.hex() == b.hex()
