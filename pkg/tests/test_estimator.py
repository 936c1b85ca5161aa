from __future__ import annotations

import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuseplace.errors import InvalidPlanError, MissingProfileError
from fuseplace.estimator import (
    Mode,
    Plan,
    Span,
    billed_duration,
    estimate,
    plan_from_dict,
    plan_latency,
    plan_price,
    plan_to_dict,
    plan_transitions,
    span_cost,
    transmission_time,
    validate_plan,
)
from fuseplace.model import FunctionProfile, NetworkConfig, PricingConfig
from fuseplace.normalize import FnSeq

from .conftest import C128, C512, EDGE, cloud, edge, parallel, uniform_profiles

# Values frozen from an exact rational re-evaluation of the pricing formula.
FIG1_COMPUTE = 31.881375
FIG1_TOTAL = 181.881375
WR_CLOUD_PRICE = 160.627125
WR_CLOUD_LATENCY = 4431.0
WR_EDGE_PRICE = 58.743375
WR_EDGE_LATENCY = 7082.0


@pytest.mark.parametrize("ms, q, expected", [(720, 100, 800), (893, 100, 900), (500, 0, 500), (800, 100, 800), (0, 100, 0)])
def test_billed_duration(ms, q, expected):
    assert billed_duration(ms, q) == expected


@given(st.integers(0, 10**6), st.sampled_from([0, 1, 7, 100, 1000]))
def test_billed_duration_bounds(ms, q):
    b = billed_duration(ms, q)
    assert b >= ms
    assert (b == ms) == (q == 0 or ms % q == 0)


def test_transmission_time():
    bw = NetworkConfig(bandwidth_bytes_per_sec=1_194_690)
    assert transmission_time(1_350_000, bw) == pytest.approx(1130, abs=0.5)
    assert transmission_time(0, bw) == 0.0
    assert transmission_time(2_000_000, NetworkConfig(bandwidth_bytes_per_sec=1_000_000)) == 2000.0
    assert transmission_time(5, NetworkConfig(fixed_upload_ms=1130)) == 1130.0


def test_face_detection_price(image_wf):
    plan = Plan((cloud(0, 1, 512),))
    seq = FnSeq(order=("detect",))
    assert plan_price(plan, seq, image_wf.profiles, image_wf.pricing) - 2 * 25.0 == pytest.approx(16.67, abs=1e-9)


def test_figure1_totals(image_wf):
    est = estimate(image_wf.plan, image_wf.fnseq, image_wf.profiles, image_wf.pricing, image_wf.network)
    assert est.transitions_per_execution == 6
    assert est.transition_usd == pytest.approx(150.0)
    assert est.compute_usd == pytest.approx(FIG1_COMPUTE, abs=1e-9)
    assert est.price_usd == pytest.approx(FIG1_TOTAL, abs=1e-9)
    assert est.edge_usd == 0.0


def test_fused_pair_versus_separate(image_wf):
    seq = FnSeq(order=("detect", "dup"))
    fused = span_cost(cloud(0, 2, 512), seq, image_wf.profiles, image_wf.pricing)[0]
    assert fused == pytest.approx(58.345, abs=1e-9)
    separate = Plan((cloud(0, 1, 512), cloud(1, 2, 128)))
    # separate price minus start and end transitions leaves the pair plus one transition
    assert plan_price(separate, seq, image_wf.profiles, image_wf.pricing) - 50.0 == pytest.approx(52.08875, abs=1e-9)


def test_parallel_span_delay(wildrydes):
    w = wildrydes
    price, delay = span_cost(parallel(2, 4, (128, 128)), w.fnseq, w.profiles, w.pricing)
    assert delay == 2235.0
    assert price > 0


def test_edge_span_cost(wildrydes):
    w = wildrydes
    assert span_cost(edge(0, 1), w.fnseq, w.profiles, w.pricing) == (0.0, 1870.0)


def test_single_function_latency(wildrydes):
    w = wildrydes
    seq = FnSeq(order=("f5",))
    assert plan_latency(Plan((cloud(0, 1, 128),)), seq, w.profiles, w.network) == 220.0


def test_wildrydes_baselines(wildrydes):
    w = wildrydes
    base = Plan((cloud(0, 1, 128), cloud(1, 2, 128), parallel(2, 4, (128, 128)), cloud(4, 5, 128)))
    assert plan_price(base, w.fnseq, w.profiles, w.pricing) == pytest.approx(WR_CLOUD_PRICE, abs=1e-9)
    assert plan_latency(base, w.fnseq, w.profiles, w.network) == WR_CLOUD_LATENCY
    best = Plan((edge(0, 1), cloud(1, 5, 128)))
    assert plan_price(best, w.fnseq, w.profiles, w.pricing) == pytest.approx(WR_EDGE_PRICE, abs=1e-9)
    assert plan_latency(best, w.fnseq, w.profiles, w.network) == WR_EDGE_LATENCY
    assert plan_transitions(best) == 2


def test_all_edge_has_no_upload():
    seq = FnSeq(order=("a", "b"))
    profiles = uniform_profiles(seq.order, [EDGE, C128], exec_ms=700)
    net = NetworkConfig(fixed_upload_ms=5000)
    assert plan_latency(Plan((edge(0, 2),)), seq, profiles, net) == 1400.0
    est = estimate(Plan((edge(0, 2),)), seq, profiles, PricingConfig(), net)
    assert est.price_usd == pytest.approx(25.0 + 0.20)


def test_edge_fee_only_when_edge_used():
    seq = FnSeq(order=("a", "b"))
    profiles = uniform_profiles(seq.order, [EDGE, C128])
    pricing = PricingConfig(memory_tiers_mb=(128,))
    net = NetworkConfig(fixed_upload_ms=10)
    cloud_only = estimate(Plan((cloud(0, 2, 128),)), seq, profiles, pricing, net)
    with_edge = estimate(Plan((edge(0, 1), cloud(1, 2, 128))), seq, profiles, pricing, net)
    assert cloud_only.edge_usd == 0.0
    assert with_edge.edge_usd == pytest.approx(0.20)


@settings(max_examples=200)
@given(
    st.integers(1, 5000),
    st.integers(1, 5000),
    st.integers(0, 300),
    st.integers(0, 300),
    st.sampled_from([128, 256, 512]),
)
def test_equal_tier_fusion_saves_one_transition(e1, e2, s1, s2, mb):
    seq = FnSeq(order=("a", "b"))
    target = C512.cloud(mb)
    profiles = {
        "a": FunctionProfile("a", {target: e1}, s1, 100, 0),
        "b": FunctionProfile("b", {target: e2}, s2, 100, 0),
    }
    pricing = PricingConfig(billing_quantum_ms=0, memory_tiers_mb=(128, 256, 512))
    net = NetworkConfig(fixed_upload_ms=1)
    split = Plan((cloud(0, 1, mb), cloud(1, 2, mb)))
    fused = Plan((cloud(0, 2, mb),))
    saving = plan_price(split, seq, profiles, pricing) - plan_price(fused, seq, profiles, pricing)
    assert math.isclose(saving, pricing.executions_per_month * pricing.transition_usd, rel_tol=1e-9)
    assert plan_latency(split, seq, profiles, net) - plan_latency(fused, seq, profiles, net) == s2


def test_price_linear_in_volume(image_wf):
    one = plan_price(image_wf.plan, image_wf.fnseq, image_wf.profiles, image_wf.pricing)
    triple = plan_price(image_wf.plan, image_wf.fnseq, image_wf.profiles, image_wf.pricing.replace(executions_per_month=3_000_000))
    assert triple == pytest.approx(3 * one, rel=1e-12)


def test_latency_ignores_pricing_and_price_ignores_network(wildrydes):
    w = wildrydes
    plan = Plan((edge(0, 1), cloud(1, 5, 128)))
    a = plan_price(plan, w.fnseq, w.profiles, w.pricing)
    b = plan_price(plan, w.fnseq, w.profiles, w.pricing)
    assert a == b
    fast = NetworkConfig(fixed_upload_ms=1)
    assert plan_latency(plan, w.fnseq, w.profiles, fast) == WR_EDGE_LATENCY - 1129


@pytest.mark.parametrize(
    "spans, match",
    [
        ((cloud(0, 3, 128), cloud(3, 5, 128)), "parallel group"),
        ((edge(0, 2), cloud(2, 5, 128)), "barrier"),
        ((cloud(0, 1, 128), edge(1, 5)), "edge"),
        ((cloud(0, 1, 128), cloud(1, 4, 128)), "covers"),
        ((cloud(0, 1, 128), Span(1, 3, Mode.PARALLEL, C128), cloud(3, 5, 128)), "parallel"),
    ],
)
def test_invalid_plans(wildrydes, spans, match):
    with pytest.raises(InvalidPlanError, match=match):
        validate_plan(Plan(spans), wildrydes.fnseq)


def test_plan_below_min_tier(wildrydes):
    w = wildrydes
    plan = Plan((cloud(0, 1, 128), cloud(1, 2, 128), parallel(2, 4, (128, 128)), cloud(4, 5, 128)))
    validate_plan(plan, w.fnseq, w.profiles, (128, 256))
    with pytest.raises(InvalidPlanError, match="needs at least 256"):
        validate_plan(plan, w.fnseq, w.profiles, (64, 256))


def test_missing_profile(wildrydes):
    w = wildrydes
    with pytest.raises(MissingProfileError):
        plan_price(Plan((edge(0, 2),)), FnSeq(order=("f1", "f2")), w.profiles, w.pricing)


def test_plan_dict_round_trip(wildrydes):
    w = wildrydes
    plan = Plan((cloud(0, 1, 256), cloud(1, 2, 128), parallel(2, 4, (256, 128)), cloud(4, 5, 128)))
    doc = json.loads(json.dumps(plan_to_dict(plan, w.fnseq)))
    assert doc[2] == {
        "functions": ["f3", "f4"],
        "target": "cloud_256",
        "mode": "parallel",
        "member_targets": ["cloud_256", "cloud_128"],
    }
    assert plan_from_dict(doc, w.fnseq) == plan


def test_plan_from_dict_rejects_gaps(wildrydes):
    with pytest.raises(InvalidPlanError):
        plan_from_dict([{"functions": ["f1", "f3"], "target": "cloud_128"}], wildrydes.fnseq)
    with pytest.raises(InvalidPlanError):
        plan_from_dict([{"functions": ["f1"]}], wildrydes.fnseq)


@given(st.integers(0, 10**5), st.sampled_from([128, 256, 3008]), st.sampled_from([0, 1, 100]))
def test_outputs_nonnegative_and_deterministic(ms, mb, q):
    seq = FnSeq(order=("x",))
    target = C128.cloud(mb)
    profiles = {"x": FunctionProfile("x", {target: max(ms, 1)}, 0, 1, 0)}
    pricing = PricingConfig(billing_quantum_ms=q)
    net = NetworkConfig(fixed_upload_ms=1)
    plan = Plan((cloud(0, 1, mb),))
    a = estimate(plan, seq, profiles, pricing, net)
    assert a == estimate(plan, seq, profiles, pricing, net)
    assert a.price_usd >= 0 and a.latency_ms >= 0
