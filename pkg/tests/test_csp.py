from __future__ import annotations

import math
import random

import pytest

from fuseplace.costgraph import build_cost_graph
from fuseplace.csp import (
    larac,
    min_delay_path,
    min_price_path,
    pareto_frontier,
    shortest_path_aggregated,
    sweep_frontier,
)
from fuseplace.estimator import Mode, Plan
from fuseplace.model import FunctionProfile, NetworkConfig, PricingConfig
from fuseplace.normalize import FnSeq
from fuseplace.oracle import evaluate_solutions, select_optimal

from .conftest import C128, C256, EDGE, cloud, edge, random_instance

NET = NetworkConfig(bandwidth_bytes_per_sec=1_194_690)
PRICING = PricingConfig(memory_tiers_mb=(128, 256))
TARGETS = [EDGE, C128, C256]


@pytest.fixture(scope="module")
def wr_graph(wildrydes):
    w = wildrydes
    return build_cost_graph(w.fnseq, w.profiles, w.pricing, w.network)


def _is_unfused_cloud(plan: Plan) -> bool:
    return all(s.target.is_cloud and (s.size == 1 or s.mode is Mode.PARALLEL) for s in plan.spans)


def test_lambda_extremes(wr_graph):
    assert shortest_path_aggregated(wr_graph, 0.0, 1.0, 1.0).price_usd == min_price_path(wr_graph).price_usd
    assert shortest_path_aggregated(wr_graph, math.inf, 1.0, 1.0).latency_ms == min_delay_path(wr_graph).latency_ms


def test_aggregated_rejects_bad_arguments(wr_graph):
    with pytest.raises(ValueError):
        shortest_path_aggregated(wr_graph, -1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        shortest_path_aggregated(wr_graph, 1.0, 0.0, 1.0)


def test_wildrydes_cheapest(wr_graph):
    expected = Plan((edge(0, 1), cloud(1, 5, 128)))
    assert wr_graph.path_to_plan(min_price_path(wr_graph).nodes) == expected
    res = larac(wr_graph)
    assert res.feasible
    assert res.plan == expected


def test_wildrydes_fastest_is_unfused_cloud(wr_graph):
    fastest = min_delay_path(wr_graph)
    res = larac(wr_graph, fastest.latency_ms)
    assert res.feasible
    assert res.latency_ms == fastest.latency_ms
    assert _is_unfused_cloud(res.plan)
    assert any(s.mode is Mode.PARALLEL for s in res.plan.spans)


def test_threshold_below_fastest(wr_graph):
    fastest = min_delay_path(wr_graph).latency_ms
    res = larac(wr_graph, fastest - 1)
    assert not res.feasible
    assert res.latency_ms == fastest


def test_threshold_must_be_positive(wr_graph):
    with pytest.raises(ValueError):
        larac(wr_graph, 0)


def _corpus(count=40, seed=3):
    rng = random.Random(seed)
    for _ in range(count):
        yield random_instance(rng, rng.randint(1, 7))


def test_larac_matches_brute_force():
    for fnseq, profiles in _corpus():
        graph = build_cost_graph(fnseq, profiles, PRICING, NET, TARGETS)
        sols = evaluate_solutions(fnseq, profiles, PRICING, NET, TARGETS)
        lo = min(s.latency_ms for s in sols)
        hi = max(s.latency_ms for s in sols)
        for k in range(12):
            t = 0.95 * lo + (1.05 * hi - 0.95 * lo) * k / 11
            bf = select_optimal(sols, t)
            res = larac(graph, t)
            plain = larac(graph, t, close_gap=False)
            assert res.feasible == bf.feasible == plain.feasible
            if res.feasible:
                assert res.latency_ms <= t and plain.latency_ms <= t
                assert res.price_usd == pytest.approx(bf.price_usd, rel=1e-12)
                assert plain.price_usd >= bf.price_usd * (1 - 1e-12)
                assert res.exact
                # every recorded Lagrangian bound is a valid lower bound
                assert all(b <= bf.price_usd * (1 + 1e-9) for b in res.lower_bounds)
            else:
                assert res.latency_ms == bf.latency_ms


def test_lagrangian_iterates_move_monotonically():
    for fnseq, profiles in _corpus(30, seed=8):
        graph = build_cost_graph(fnseq, profiles, PRICING, NET, TARGETS)
        fast = min_delay_path(graph).latency_ms
        slow = min_price_path(graph).latency_ms
        res = larac(graph, (fast + slow) / 2)
        assert all(lam >= 0 for lam in res.lambdas)
        bounds = res.lower_bounds
        assert all(b2 >= b1 - 1e-9 * max(1.0, abs(b1)) for b1, b2 in zip(bounds, bounds[1:]))


@pytest.mark.parametrize("factor", [1e-3, 0.5, 3.0, 1e4])
def test_plan_invariant_under_price_scaling(factor):
    for fnseq, profiles in _corpus(15, seed=21):
        graph = build_cost_graph(fnseq, profiles, PRICING, NET, TARGETS)
        t = (min_delay_path(graph).latency_ms + min_price_path(graph).latency_ms) / 2
        base = larac(graph, t)
        scaled = larac(graph.with_scaled_prices(factor), t)
        assert scaled.plan == base.plan
        assert scaled.price_usd == pytest.approx(factor * base.price_usd, rel=1e-9)


def test_deterministic(wr_graph):
    t = 5000.0
    runs = {larac(wr_graph, t).plan for _ in range(5)}
    assert len(runs) == 1


def test_frontier_single_function():
    seq = FnSeq.chain(1)
    profiles = {"f1": FunctionProfile("f1", {EDGE: 3000, C128: 1000}, 100, 64, 0)}
    graph = build_cost_graph(seq, profiles, PricingConfig(memory_tiers_mb=(128,)), NET)
    pts = pareto_frontier(graph)
    assert len(pts) == 2
    assert pts[0].latency_ms < pts[1].latency_ms and pts[0].price_usd > pts[1].price_usd


def test_frontier_wildrydes_endpoints(wr_graph):
    pts = pareto_frontier(wr_graph)
    assert _is_unfused_cloud(pts[0].plan)
    assert pts[-1].plan == Plan((edge(0, 1), cloud(1, 5, 128)))
    assert pts[0].latency_ms == min_delay_path(wr_graph).latency_ms


def _non_dominated(pairs):
    out = set()
    for p, d in pairs:
        if not any((q <= p and e <= d) and (q, e) != (p, d) for q, e in pairs):
            out.add((p, d))
    return out


def test_frontier_matches_enumeration():
    rng = random.Random(4)
    for _ in range(25):
        fnseq, profiles = random_instance(rng, rng.randint(1, 6))
        graph = build_cost_graph(fnseq, profiles, PRICING, NET, TARGETS)
        pts = pareto_frontier(graph)
        sols = evaluate_solutions(fnseq, profiles, PRICING, NET, TARGETS)
        assert {(p.price_usd, p.latency_ms) for p in pts} == _non_dominated({(s.price_usd, s.latency_ms) for s in sols})
        assert len(pts) <= sum(1 for _ in graph.iter_paths())
        lat = [p.latency_ms for p in pts]
        assert lat == sorted(lat)


def test_sweep_is_subset_of_exact(wr_graph):
    exact = {(p.price_usd, p.latency_ms) for p in pareto_frontier(wr_graph)}
    approx = {(p.price_usd, p.latency_ms) for p in sweep_frontier(wr_graph, 15)}
    assert approx <= exact
    with pytest.raises(ValueError):
        sweep_frontier(wr_graph, 1)
