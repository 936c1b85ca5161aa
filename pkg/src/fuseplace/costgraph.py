"""Cost graph: every Start-to-End path is one feasible fusion and placement plan.

Nodes are placed spans; a link ``u -> v`` joins a span ending at index ``i``
to a span starting at ``i + 1``. Each link carries two independent weights,
price and delay, taken from the estimator for the span the link leaves.

Links are stored as flat numpy arrays and grouped into *blocks*: block ``k``
holds every link entering the spans that start at index ``k`` (the last block
enters End). All sources of a block are settled before the block is visited,
which is what the shortest-path solvers rely on.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Iterator, Mapping, Sequence

import numpy as np

from .errors import EmptyGraphError
from .estimator import (
    Mode,
    Plan,
    Profiles,
    Span,
    SpanTemplate,
    span_link_weights,
    start_link_price,
    upload_delay,
)
from .model import NetworkConfig, PlacementTarget, PricingConfig
from .normalize import FnSeq

START = "start"
END = "end"
SPAN = "span"


@dataclass(frozen=True)
class CostGraphNode:
    id: int
    kind: str
    span: Span | None = None


@dataclass(frozen=True)
class CostGraphLink:
    src: int
    dst: int
    price_usd: float
    delay_ms: float


def enumerate_spans(fnseq: FnSeq) -> list[SpanTemplate]:
    """All contiguous ranges that may be fused, with their execution modes."""
    n = len(fnseq)
    out = []
    for start in range(n):
        for stop in range(start + 1, n + 1):
            if not fnseq.admits_range(start, stop):
                continue
            out.append(SpanTemplate(start, stop, Mode.SERIALIZED))
            if fnseq.is_group(start, stop):
                out.append(SpanTemplate(start, stop, Mode.PARALLEL))
    return out


def placement_set(
    template: SpanTemplate,
    targets: Sequence[PlacementTarget],
    *,
    fnseq: FnSeq | None = None,
    profiles: Profiles | None = None,
) -> list[Span]:
    """Placements of one span template.

    Only spans starting at index 0 may run on the edge, and only when every
    member has an edge profile. Cloud tiers must hold every member's peak
    memory and have a profiled execution time. Without ``profiles`` every
    target qualifies.
    """
    members = None
    if profiles is not None:
        if fnseq is None:
            raise ValueError("fnseq is required together with profiles")
        members = [profiles[n] for n in fnseq.order[template.start : template.stop]]

    def fits(tier: int, group: list) -> bool:
        target = PlacementTarget.cloud(tier)
        return all(p.max_mem_mb <= tier and p.exec_on(target) is not None for p in group)

    tiers = sorted(t.memory_mb for t in targets if t.is_cloud)
    out: list[Span] = []
    if template.mode is Mode.PARALLEL:
        if members is None:
            per_member = [tiers] * template.size
        else:
            per_member = [[t for t in tiers if fits(t, [p])] for p in members]
        for combo in itertools.product(*per_member):
            out.append(_parallel_span(template, combo))
        return out

    edge = PlacementTarget.edge()
    if template.start == 0 and edge in targets:
        if members is None or all(p.has_edge for p in members):
            out.append(Span(template.start, template.stop, Mode.SERIALIZED, edge))
    for tier in tiers:
        if members is None or fits(tier, members):
            out.append(Span(template.start, template.stop, Mode.SERIALIZED, PlacementTarget.cloud(tier)))
    return out


def _parallel_span(template: SpanTemplate, tiers: Sequence[int]) -> Span:
    top = max(tiers)
    member_tiers = None if all(t == top for t in tiers) else tuple(tiers)
    return Span(template.start, template.stop, Mode.PARALLEL, PlacementTarget.cloud(top), member_tiers)


class CostGraph:
    """Immutable dual-weighted DAG over placed spans."""

    def __init__(
        self,
        fnseq: FnSeq,
        nodes: Sequence[CostGraphNode],
        src: np.ndarray,
        dst: np.ndarray,
        price: np.ndarray,
        delay: np.ndarray,
        blocks: Sequence[tuple[int, int]],
    ):
        self.fnseq = fnseq
        self.nodes = tuple(nodes)
        self.src = src
        self.dst = dst
        self.price = price
        self.delay = delay
        self.blocks = tuple(blocks)
        for arr in (src, dst, price, delay):
            arr.setflags(write=False)
        self._out: list[np.ndarray] | None = None

    @property
    def start(self) -> int:
        return 0

    @property
    def end(self) -> int:
        return len(self.nodes) - 1

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_links(self) -> int:
        return int(self.src.size)

    def link(self, index: int) -> CostGraphLink:
        return CostGraphLink(int(self.src[index]), int(self.dst[index]), float(self.price[index]), float(self.delay[index]))

    def links(self) -> Iterator[CostGraphLink]:
        for i in range(self.num_links):
            yield self.link(i)

    def out_links(self, node: int) -> np.ndarray:
        """Indices of links leaving ``node``."""
        if self._out is None:
            order = np.argsort(self.src, kind="stable")
            bounds = np.searchsorted(self.src[order], np.arange(self.num_nodes + 1))
            self._out = [order[bounds[i] : bounds[i + 1]] for i in range(self.num_nodes)]
        return self._out[node]

    def path_weights(self, links: Sequence[int]) -> tuple[float, float]:
        """Summed (price, delay) along a path, accumulated in path order."""
        price = 0.0
        delay = 0.0
        for i in links:
            price += float(self.price[i])
            delay += float(self.delay[i])
        return price, delay

    def path_to_plan(self, nodes: Sequence[int]) -> Plan:
        spans = tuple(self.nodes[i].span for i in nodes if self.nodes[i].kind == SPAN)
        return Plan(spans)

    def iter_paths(self) -> Iterator[tuple[int, ...]]:
        """Every Start-to-End path as a tuple of link indices (small graphs only)."""
        stack: list[tuple[int, tuple[int, ...]]] = [(self.start, ())]
        while stack:
            node, path = stack.pop()
            if node == self.end:
                yield path
                continue
            for li in self.out_links(node)[::-1]:
                stack.append((int(self.dst[li]), path + (int(li),)))

    def link_path_nodes(self, links: Sequence[int]) -> tuple[int, ...]:
        if not links:
            return (self.start,)
        return (int(self.src[links[0]]),) + tuple(int(self.dst[i]) for i in links)

    def with_scaled_prices(self, factor: float) -> CostGraph:
        if not factor > 0:
            raise ValueError("price scale factor must be positive")
        return CostGraph(self.fnseq, self.nodes, self.src, self.dst, self.price * factor, self.delay, self.blocks)

    def to_dict(self) -> dict[str, Any]:
        nodes = []
        for node in self.nodes:
            entry: dict[str, Any] = {"id": node.id, "kind": node.kind}
            if node.span is not None:
                entry["label"] = node.span.encode(self.fnseq)
                entry["functions"] = list(node.span.members(self.fnseq))
                entry["target"] = node.span.target.label
                entry["mode"] = node.span.mode.value
            nodes.append(entry)
        links = [
            {"from": int(s), "to": int(d), "price_usd": float(p), "delay_ms": float(t)}
            for s, d, p, t in zip(self.src, self.dst, self.price, self.delay)
        ]
        return {"fnseq": self.fnseq.to_dict(), "nodes": nodes, "links": links}


def build_cost_graph(
    fnseq: FnSeq,
    profiles: Profiles,
    pricing: PricingConfig,
    network: NetworkConfig,
    targets: Sequence[PlacementTarget] | None = None,
) -> CostGraph:
    """Assemble the cost graph for ``fnseq``.

    ``targets`` defaults to the edge device plus every configured memory tier.
    Raises EmptyGraphError when no Start-to-End path exists.
    """
    if targets is None:
        targets = [PlacementTarget.edge(), *pricing.cloud_targets]
    n = len(fnseq)
    missing = [name for name in fnseq.order if name not in profiles]
    if missing:
        raise EmptyGraphError(f"no profile for function(s) {missing}")

    spans: list[Span] = []
    for template in enumerate_spans(fnseq):
        spans.extend(placement_set(template, targets, fnseq=fnseq, profiles=profiles))
    spans.sort(key=Span.sort_key)

    nodes = [CostGraphNode(0, START)]
    nodes += [CostGraphNode(i + 1, SPAN, s) for i, s in enumerate(spans)]
    end_id = len(nodes)
    nodes.append(CostGraphNode(end_id, END))

    out_price = np.zeros(len(nodes))
    out_delay = np.zeros(len(nodes))
    is_edge = np.zeros(len(nodes), dtype=bool)
    handoff = np.zeros(len(nodes))
    by_start: list[list[int]] = [[] for _ in range(n + 1)]
    by_stop: list[list[int]] = [[] for _ in range(n + 1)]
    for node in nodes[1:-1]:
        span = node.span
        out_price[node.id], out_delay[node.id] = span_link_weights(span, fnseq, profiles, pricing)
        if span.target.is_edge:
            is_edge[node.id] = True
            if span.stop < n:
                # every successor of an edge span runs on the cloud
                handoff[node.id] = upload_delay(span, fnseq, profiles, network)
        by_start[span.start].append(node.id)
        by_stop[span.stop].append(node.id)

    src_parts: list[np.ndarray] = []
    dst_parts: list[np.ndarray] = []
    price_parts: list[np.ndarray] = []
    delay_parts: list[np.ndarray] = []
    blocks: list[tuple[int, int]] = []
    offset = 0

    def add_block(src: np.ndarray, dst: np.ndarray, price: np.ndarray, delay: np.ndarray) -> None:
        nonlocal offset
        src_parts.append(src)
        dst_parts.append(dst)
        price_parts.append(price)
        delay_parts.append(delay)
        blocks.append((offset, offset + src.size))
        offset += src.size

    first = np.array(by_start[0], dtype=np.int64)
    add_block(
        np.zeros(first.size, dtype=np.int64),
        first,
        np.array([start_link_price(nodes[i].span, pricing) for i in first], dtype=float),
        np.zeros(first.size),
    )
    for k in range(1, n):
        u = np.array(by_stop[k], dtype=np.int64)
        v = np.array(by_start[k], dtype=np.int64)
        if u.size == 0 or v.size == 0:
            continue
        src = np.repeat(u, v.size)
        dst = np.tile(v, u.size)
        # delay of the leaving span plus the edge-to-cloud upload, summed per link
        link_delay = out_delay[src] + np.where(is_edge[src], handoff[src], 0.0)
        add_block(src, dst, out_price[src], link_delay)
    last = np.array(by_stop[n], dtype=np.int64)
    add_block(last, np.full(last.size, end_id, dtype=np.int64), out_price[last], out_delay[last])

    graph = CostGraph(
        fnseq,
        nodes,
        np.concatenate(src_parts),
        np.concatenate(dst_parts),
        np.concatenate(price_parts),
        np.concatenate(delay_parts),
        blocks,
    )
    if not _connected(graph):
        raise EmptyGraphError("no feasible plan: some function has no admissible placement")
    return graph


def _connected(graph: CostGraph) -> bool:
    reached = np.zeros(graph.num_nodes, dtype=bool)
    reached[graph.start] = True
    for lo, hi in graph.blocks:
        src = graph.src[lo:hi]
        ok = reached[src]
        reached[graph.dst[lo:hi][ok]] = True
    return bool(reached[graph.end])


def vertex_bound(n: int, m: int) -> int:
    """Unpruned vertex count: every contiguous range on every target, plus Start and End."""
    return sum((n - k + 1) * m for k in range(1, n + 1)) + 2


def link_bound(n: int, m: int) -> int:
    """Closed-form link count bound ``m^2 (n-1) sum_k (n-k+1)``."""
    return m * m * (n - 1) * sum(n - k + 1 for k in range(1, n + 1))


def graph_summary(graph: CostGraph) -> Mapping[str, int]:
    return {"nodes": graph.num_nodes, "links": graph.num_links}
