"""Exhaustive enumeration of fusion and placement plans.

This is the ground truth the graph solver is checked against, so it shares
no enumeration code with :mod:`fuseplace.costgraph`: compositions are built
from cut points and placements are filtered here directly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

from .csp import OptimizeResult
from .errors import TooLargeError
from .estimator import Mode, Plan, Profiles, Span, plan_latency, plan_price
from .model import NetworkConfig, PlacementTarget, PricingConfig
from .normalize import FnSeq

DEFAULT_CAP = 14


@dataclass(frozen=True)
class Solution:
    plan: Plan
    price_usd: float
    latency_ms: float
    encoding: str


def _compositions(fnseq: FnSeq) -> Iterator[list[tuple[int, int]]]:
    n = len(fnseq)
    forced = sorted(fnseq.barriers)
    optional = [b for b in range(1, n) if b not in fnseq.barriers and fnseq.can_cut(b)]
    for choice in itertools.product((False, True), repeat=len(optional)):
        cuts = sorted(forced + [b for b, on in zip(optional, choice) if on])
        bounds = [0, *cuts, n]
        yield list(zip(bounds, bounds[1:]))


def _piece_options(
    fnseq: FnSeq,
    start: int,
    stop: int,
    edge: bool,
    tiers: list[int],
    profiles: Profiles | None,
) -> list[Span]:
    names = fnseq.order[start:stop]
    profs = [profiles[n] for n in names] if profiles is not None else None

    def tier_ok(name_idx: int, tier: int) -> bool:
        if profs is None:
            return True
        p = profs[name_idx]
        return tier >= p.max_mem_mb and PlacementTarget.cloud(tier) in p.exec_ms

    options = []
    if edge and start == 0 and (profs is None or all(PlacementTarget.edge() in p.exec_ms for p in profs)):
        options.append(Span(start, stop, Mode.SERIALIZED, PlacementTarget.edge()))
    for tier in tiers:
        if all(tier_ok(i, tier) for i in range(len(names))):
            options.append(Span(start, stop, Mode.SERIALIZED, PlacementTarget.cloud(tier)))
    if (start, stop) in fnseq.parallel_groups:
        per_member = [[t for t in tiers if tier_ok(i, t)] for i in range(len(names))]
        for combo in itertools.product(*per_member):
            top = max(combo)
            options.append(Span(start, stop, Mode.PARALLEL, PlacementTarget.cloud(top), tuple(combo)))
    return options


def enumerate_solutions(
    fnseq: FnSeq,
    targets: Sequence[PlacementTarget],
    *,
    profiles: Profiles | None = None,
) -> Iterator[Plan]:
    """Yield every feasible plan exactly once.

    Without ``profiles`` every target is assumed to fit every function.
    """
    edge = PlacementTarget.edge() in targets
    tiers = sorted({t.memory_mb for t in targets if t.is_cloud})
    for pieces in _compositions(fnseq):
        options = [_piece_options(fnseq, a, b, edge, tiers, profiles) for a, b in pieces]
        for spans in itertools.product(*options):
            yield Plan(spans)


def count_solutions(n: int, cloud_tiers: int) -> int:
    """Closed-form plan count for a chain without groups or barriers."""
    c = cloud_tiers
    return sum(math.comb(n - 1, k - 1) * (c + 1) * c ** (k - 1) for k in range(1, n + 1))


def evaluate_solutions(
    fnseq: FnSeq,
    profiles: Profiles,
    pricing: PricingConfig,
    network: NetworkConfig,
    targets: Sequence[PlacementTarget],
    cap: int = DEFAULT_CAP,
) -> list[Solution]:
    if len(fnseq) > cap:
        raise TooLargeError(f"brute force refused for {len(fnseq)} functions (cap is {cap})")
    out = []
    for plan in enumerate_solutions(fnseq, targets, profiles=profiles):
        out.append(
            Solution(
                plan,
                plan_price(plan, fnseq, profiles, pricing),
                plan_latency(plan, fnseq, profiles, network),
                plan.encode(fnseq),
            )
        )
    return out


def select_optimal(solutions: Sequence[Solution], t_thresh_ms: float = math.inf) -> OptimizeResult:
    """Cheapest solution within the threshold; the fastest one if none qualifies."""
    if not solutions:
        raise ValueError("no solutions to select from")
    feasible = [s for s in solutions if s.latency_ms <= t_thresh_ms]
    if feasible:
        best = min(feasible, key=lambda s: (s.price_usd, s.latency_ms, s.encoding))
    else:
        best = min(solutions, key=lambda s: (s.latency_ms, s.price_usd, s.encoding))
    return OptimizeResult(best.plan, best.price_usd, best.latency_ms, bool(feasible))


def brute_force_optimize(
    fnseq: FnSeq,
    profiles: Profiles,
    pricing: PricingConfig,
    network: NetworkConfig,
    targets: Sequence[PlacementTarget] | None = None,
    t_thresh_ms: float = math.inf,
    cap: int = DEFAULT_CAP,
) -> OptimizeResult:
    if targets is None:
        targets = [PlacementTarget.edge(), *pricing.cloud_targets]
    solutions = evaluate_solutions(fnseq, profiles, pricing, network, targets, cap)
    return select_optimal(solutions, t_thresh_ms)


def memory_search(
    fnseq: FnSeq,
    profiles: Profiles,
    pricing: PricingConfig,
    network: NetworkConfig,
    tiers: Sequence[int],
) -> list[Solution]:
    """All-cloud, unfused plans over every per-function memory assignment,
    sorted by (price, latency)."""
    targets = [PlacementTarget.cloud(t) for t in tiers]
    out = []
    for plan in enumerate_solutions(fnseq, targets, profiles=profiles):
        if all(s.size == 1 or s.mode is Mode.PARALLEL for s in plan.spans):
            out.append(
                Solution(
                    plan,
                    plan_price(plan, fnseq, profiles, pricing),
                    plan_latency(plan, fnseq, profiles, network),
                    plan.encode(fnseq),
                )
            )
    out.sort(key=lambda s: (s.price_usd, s.latency_ms, s.encoding))
    return out


def _unfused_spans(fnseq: FnSeq, start: int, profiles: Profiles, tiers: Sequence[int]) -> list[Span]:
    spans = []
    i = start
    while i < len(fnseq):
        group = fnseq.group_of(i)
        stop = group[1] if group else i + 1
        need = [min(t for t in tiers if t >= profiles[n].max_mem_mb) for n in fnseq.order[i:stop]]
        mode = Mode.PARALLEL if group else Mode.SERIALIZED
        spans.append(Span(i, stop, mode, PlacementTarget.cloud(max(need)), tuple(need) if group else None))
        i = stop
    return spans


def cloud_no_fusion_plan(fnseq: FnSeq, profiles: Profiles, tiers: Sequence[int]) -> Plan:
    """Baseline: original workflow, every function on its smallest fitting tier."""
    return Plan(tuple(_unfused_spans(fnseq, 0, profiles, tiers)))


def edge_no_fusion_plan(fnseq: FnSeq, profiles: Profiles, tiers: Sequence[int]) -> Plan:
    """Baseline: no fusion, the leading function on the edge when it can run there."""
    first = profiles[fnseq.order[0]]
    if fnseq.group_of(0) is not None or PlacementTarget.edge() not in first.exec_ms:
        return cloud_no_fusion_plan(fnseq, profiles, tiers)
    head = Span(0, 1, Mode.SERIALIZED, PlacementTarget.edge())
    return Plan((head, *_unfused_spans(fnseq, 1, profiles, tiers)))
