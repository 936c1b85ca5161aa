"""Constrained shortest path over a cost graph.

``larac`` minimizes total price subject to total delay <= threshold using
Lagrangian relaxation: it repeatedly solves a single-criterion shortest path
on ``price / c* + lambda * delay / d*`` and moves lambda between a cheapest
infeasible path and a feasible one until the aggregated costs meet.

The relaxation alone can stop short of the constrained optimum when that
optimum is not on the lower convex hull of (delay, price) points. By default
the remaining gap is closed exactly: paths are enumerated best-first in
aggregated cost at the final lambda and pruned by the Lagrangian bound, the
cheapest possible completion and the fastest possible completion.

``pareto_frontier`` computes the exact price/latency trade-off curve.
"""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .costgraph import CostGraph
from .errors import NoPathError
from .estimator import Plan

log = logging.getLogger(__name__)

# Floor for the normalizers so an all-zero price or delay never divides by zero.
_TINY = 1e-12
# Relative tolerance for "aggregated costs are equal" in the LARAC stopping rule.
_AGG_RTOL = 1e-12


@dataclass(frozen=True)
class Path:
    nodes: tuple[int, ...]
    links: tuple[int, ...]
    price_usd: float
    latency_ms: float


@dataclass(frozen=True)
class OptimizeResult:
    plan: Plan
    price_usd: float
    latency_ms: float
    feasible: bool
    lambda_final: float = 0.0
    iterations: int = 0
    lambdas: tuple[float, ...] = ()
    # Lagrangian lower bounds on the constrained optimum, one per iteration
    lower_bounds: tuple[float, ...] = ()
    # True when the result is proven optimal (always, unless close_gap=False or the search cap hit)
    exact: bool = True
    path: Path | None = field(default=None, compare=False, repr=False)


def _solve(graph: CostGraph, primary: np.ndarray, secondary: np.ndarray) -> Path:
    """Lexicographic (primary, secondary, predecessor id) shortest path on the DAG."""
    n = graph.num_nodes
    dp = np.full(n, np.inf)
    ds = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.int64)
    dp[graph.start] = 0.0
    ds[graph.start] = 0.0
    for lo, hi in graph.blocks:
        if hi == lo:
            continue
        src = graph.src[lo:hi]
        dst = graph.dst[lo:hi]
        cp = dp[src] + primary[lo:hi]
        cs = ds[src] + secondary[lo:hi]
        order = np.lexsort((src, cs, cp, dst))
        dsorted = dst[order]
        first = np.ones(order.size, dtype=bool)
        first[1:] = dsorted[1:] != dsorted[:-1]
        best = order[first]
        ok = np.isfinite(cp[best])
        best = best[ok]
        targets = dst[best]
        dp[targets] = cp[best]
        ds[targets] = cs[best]
        pred[targets] = lo + best
    if not np.isfinite(dp[graph.end]):
        raise NoPathError("no path from Start to End")

    links = []
    node = graph.end
    while node != graph.start:
        li = int(pred[node])
        links.append(li)
        node = int(graph.src[li])
    links.reverse()
    price, delay = graph.path_weights(links)
    return Path(graph.link_path_nodes(links), tuple(links), price, delay)


def min_price_path(graph: CostGraph) -> Path:
    return _solve(graph, graph.price, graph.delay)


def min_delay_path(graph: CostGraph) -> Path:
    return _solve(graph, graph.delay, graph.price)


def shortest_path_aggregated(graph: CostGraph, lam: float, c_star: float, d_star: float) -> Path:
    """Path minimizing ``sum(price / c_star + lam * delay / d_star)``.

    Ties go to the smaller total delay, then to the smaller predecessor id.
    ``lam = math.inf`` minimizes delay alone (ties by price).
    """
    if not (c_star > 0 and d_star > 0):
        raise ValueError("normalizers must be positive")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if math.isinf(lam):
        return min_delay_path(graph)
    weights = graph.price / c_star + lam * (graph.delay / d_star)
    return _solve(graph, weights, graph.delay)


def _result(graph: CostGraph, path: Path, feasible: bool, **extra) -> OptimizeResult:
    return OptimizeResult(
        plan=graph.path_to_plan(path.nodes),
        price_usd=path.price_usd,
        latency_ms=path.latency_ms,
        feasible=feasible,
        path=path,
        **extra,
    )


def larac(
    graph: CostGraph,
    t_thresh_ms: float = math.inf,
    *,
    close_gap: bool = True,
    max_iter: int = 200,
    max_expansions: int = 2_000_000,
) -> OptimizeResult:
    """Cheapest plan whose latency does not exceed ``t_thresh_ms``.

    When no plan meets the threshold the fastest plan is returned with
    ``feasible=False``. With ``close_gap=False`` the plain Lagrangian
    iteration result is returned, which may cost more than the optimum.
    """
    if not t_thresh_ms > 0:
        raise ValueError("threshold must be positive")
    p_c = min_price_path(graph)
    if p_c.latency_ms <= t_thresh_ms:
        return _result(graph, p_c, True)
    p_d = min_delay_path(graph)
    if p_d.latency_ms > t_thresh_ms:
        return _result(graph, p_d, False, lambda_final=math.inf)

    c_star = max(p_d.price_usd, _TINY)
    d_star = max(p_c.latency_ms, _TINY)

    def agg(p: Path, lam: float) -> float:
        return p.price_usd / c_star + lam * p.latency_ms / d_star

    best = p_d
    lambdas: list[float] = []
    bounds: list[float] = []
    lam = 0.0
    it = 0
    for it in range(1, max_iter + 1):
        lam = ((p_c.price_usd - p_d.price_usd) / c_star) / ((p_d.latency_ms - p_c.latency_ms) / d_star)
        r = shortest_path_aggregated(graph, lam, c_star, d_star)
        lambdas.append(lam)
        bounds.append((agg(r, lam) - lam * t_thresh_ms / d_star) * c_star)
        level = agg(p_c, lam)
        if agg(r, lam) >= level - _AGG_RTOL * max(1.0, abs(level)):
            break
        if r.latency_ms <= t_thresh_ms:
            p_d = r
            if (r.price_usd, r.latency_ms) < (best.price_usd, best.latency_ms):
                best = r
        else:
            p_c = r
    else:
        log.warning("LARAC stopped after %d iterations without converging", max_iter)

    exact = False
    if close_gap:
        lower = max(bounds) if bounds else -math.inf
        if best.price_usd > lower:
            best, exact = _close_gap(graph, best, lam, c_star, d_star, t_thresh_ms, max_expansions)
        else:
            exact = True

    return _result(
        graph,
        best,
        True,
        lambda_final=lam,
        iterations=it,
        lambdas=tuple(lambdas),
        lower_bounds=tuple(bounds),
        exact=exact,
    )


def _cost_to_go(graph: CostGraph, weights: np.ndarray) -> np.ndarray:
    h = np.full(graph.num_nodes, np.inf)
    h[graph.end] = 0.0
    for lo, hi in reversed(graph.blocks):
        np.minimum.at(h, graph.src[lo:hi], weights[lo:hi] + h[graph.dst[lo:hi]])
    return h


def _close_gap(
    graph: CostGraph,
    incumbent: Path,
    lam: float,
    c_star: float,
    d_star: float,
    t_thresh_ms: float,
    max_expansions: int,
) -> tuple[Path, bool]:
    """Exact search for a feasible path cheaper than ``incumbent``.

    Best-first over partial paths keyed by aggregated cost plus the exact
    aggregated cost-to-go. A feasible path ``y`` satisfies
    ``price(y) >= c_star * (agg(y) - lam * T / d_star)``, so once the smallest
    open key falls past the incumbent price no cheaper feasible path remains.
    """
    agg_w = graph.price / c_star + lam * (graph.delay / d_star)
    h_agg = _cost_to_go(graph, agg_w)
    h_price = _cost_to_go(graph, graph.price)
    h_delay = _cost_to_go(graph, graph.delay)
    slack = lam * t_thresh_ms / d_star

    best = incumbent
    ub = incumbent.price_usd
    # entry: (key, tiebreak, price, delay, node, parent_entry_index, via_link)
    trail: list[tuple[int, int]] = []
    heap: list[tuple[float, float, int, float, float, int, int]] = []
    counter = 0
    heapq.heappush(heap, (float(h_agg[graph.start]), 0.0, counter, 0.0, 0.0, graph.start, -1))
    trail.append((-1, -1))
    expansions = 0
    while heap:
        key, _, idx, price, delay, node, _ = heapq.heappop(heap)
        if (key - slack) * c_star >= ub:
            return best, True
        if node == graph.end:
            if delay <= t_thresh_ms and price < ub:
                links = []
                k = idx
                while trail[k][1] != -1:
                    links.append(trail[k][1])
                    k = trail[k][0]
                links.reverse()
                p, d = graph.path_weights(links)
                best = Path(graph.link_path_nodes(links), tuple(links), p, d)
                ub = p
            continue
        expansions += 1
        if expansions > max_expansions:
            log.warning("gap closing hit the expansion cap (%d); result may be suboptimal", max_expansions)
            return best, False
        for li in graph.out_links(node):
            v = int(graph.dst[li])
            np_ = price + float(graph.price[li])
            nd = delay + float(graph.delay[li])
            if nd + h_delay[v] > t_thresh_ms or np_ + h_price[v] >= ub:
                continue
            g = np_ / c_star + lam * nd / d_star
            counter += 1
            trail.append((idx, int(li)))
            heapq.heappush(heap, (g + float(h_agg[v]), nd, counter, np_, nd, v, int(li)))
    return best, True


@dataclass(frozen=True)
class FrontierPoint:
    price_usd: float
    latency_ms: float
    plan: Plan


def pareto_frontier(graph: CostGraph) -> list[FrontierPoint]:
    """Exact non-dominated (price, latency) plans, sorted by latency.

    Multi-label search over the DAG: every node keeps its non-dominated
    labels, extended block by block. Equal points keep the first label in
    (price, delay, predecessor) order.
    """
    # label = (price, delay, pred_node, pred_label_index)
    labels: list[list[tuple[float, float, int, int]]] = [[] for _ in range(graph.num_nodes)]
    labels[graph.start] = [(0.0, 0.0, -1, -1)]
    for lo, hi in graph.blocks:
        incoming: dict[int, list[tuple[float, float, int, int]]] = {}
        for li in range(lo, hi):
            u = int(graph.src[li])
            if not labels[u]:
                continue
            v = int(graph.dst[li])
            w_p = float(graph.price[li])
            w_d = float(graph.delay[li])
            bucket = incoming.setdefault(v, [])
            for k, (p, d, _, _) in enumerate(labels[u]):
                bucket.append((p + w_p, d + w_d, u, k))
        for v, cands in incoming.items():
            labels[v] = _non_dominated(cands)
    if not labels[graph.end]:
        raise NoPathError("no path from Start to End")

    points = []
    for p, d, u, k in labels[graph.end]:
        nodes = [graph.end]
        while u != -1:
            nodes.append(u)
            _, _, u, k = labels[u][k]
        nodes.reverse()
        points.append(FrontierPoint(p, d, graph.path_to_plan(nodes)))
    points.sort(key=lambda pt: (pt.latency_ms, pt.price_usd))
    return points


def _non_dominated(cands: list[tuple[float, float, int, int]]) -> list[tuple[float, float, int, int]]:
    cands.sort()
    kept = []
    best_delay = math.inf
    for c in cands:
        if c[1] < best_delay:
            kept.append(c)
            best_delay = c[1]
    return kept


def sweep_frontier(graph: CostGraph, steps: int = 20) -> list[FrontierPoint]:
    """Approximate frontier from LARAC runs at evenly spaced thresholds."""
    if steps < 2:
        raise ValueError("steps must be >= 2")
    fast = min_delay_path(graph).latency_ms
    slow = min_price_path(graph).latency_ms
    found: dict[tuple[float, float], FrontierPoint] = {}
    for i in range(steps):
        t = fast + (slow - fast) * i / (steps - 1)
        res = larac(graph, max(t, _TINY))
        if res.feasible:
            found.setdefault((res.price_usd, res.latency_ms), FrontierPoint(res.price_usd, res.latency_ms, res.plan))
    pts = sorted(found.values(), key=lambda pt: (pt.latency_ms, pt.price_usd))
    out = []
    best_price = math.inf
    for pt in pts:
        if pt.price_usd < best_price:
            out.append(pt)
            best_price = pt.price_usd
    return out
