"""Monthly price and per-request latency of a concrete deployment plan.

A plan partitions the function sequence into contiguous spans. Each span is
one deployed unit: a fused function on the edge device or on a cloud memory
tier, or a parallel group kept parallel (one invocation per member).

Price and latency are accumulated span by span in plan order, which is the
same order the cost graph sums its link weights in. Path sums over the graph
therefore reproduce :func:`plan_price` and :func:`plan_latency` bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping, Sequence

from .errors import InvalidPlanError, MissingProfileError
from .model import FunctionProfile, NetworkConfig, PlacementTarget, PricingConfig, min_tier
from .normalize import FnSeq

Profiles = Mapping[str, FunctionProfile]


class Mode(str, Enum):
    SERIALIZED = "serialized"
    PARALLEL = "parallel"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, order=True)
class SpanTemplate:
    """A contiguous index range ``[start, stop)`` plus its execution mode."""

    start: int
    stop: int
    mode: Mode = Mode.SERIALIZED

    @property
    def size(self) -> int:
        return self.stop - self.start


@dataclass(frozen=True)
class Span:
    """One deployed unit of a plan.

    For a parallel-retained cloud span each member may run on its own tier;
    ``member_tiers`` lists them in sequence order and ``target`` carries the
    largest. When ``member_tiers`` is None every member uses ``target``.
    """

    start: int
    stop: int
    mode: Mode
    target: PlacementTarget
    member_tiers: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.member_tiers is not None:
            tiers = tuple(int(t) for t in self.member_tiers)
            uniform = all(t == self.target.memory_mb for t in tiers)
            object.__setattr__(self, "member_tiers", None if uniform else tiers)

    @property
    def template(self) -> SpanTemplate:
        return SpanTemplate(self.start, self.stop, self.mode)

    @property
    def size(self) -> int:
        return self.stop - self.start

    def tiers(self) -> tuple[int, ...]:
        if self.member_tiers is not None:
            return self.member_tiers
        return (self.target.memory_mb,) * self.size

    def members(self, fnseq: FnSeq) -> tuple[str, ...]:
        return fnseq.order[self.start : self.stop]

    def sort_key(self) -> tuple:
        mode_rank = 0 if self.mode is Mode.SERIALIZED else 1
        return (self.start, self.stop, mode_rank, self.target.sort_key(), self.tiers() if self.target.is_cloud else ())

    def encode(self, fnseq: FnSeq) -> str:
        names = self.members(fnseq)
        if self.mode is Mode.PARALLEL:
            inner = "|".join(f"{n}@cloud_{t}" for n, t in zip(names, self.tiers()))
            return "{" + inner + "}"
        return "(" + "+".join(names) + ")@" + self.target.label


@dataclass(frozen=True)
class Plan:
    spans: tuple[Span, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "spans", tuple(self.spans))

    def encode(self, fnseq: FnSeq) -> str:
        """Canonical text form, used for set comparisons and tie-breaking."""
        return " ".join(s.encode(fnseq) for s in self.spans)

    @property
    def uses_edge(self) -> bool:
        return any(s.target.is_edge for s in self.spans)


@dataclass(frozen=True)
class Estimate:
    price_usd: float
    latency_ms: float
    transitions_per_execution: int
    compute_usd: float
    transition_usd: float
    edge_usd: float


def transmission_time(nbytes: int, network: NetworkConfig) -> float:
    """Edge to cloud transfer time in milliseconds."""
    if network.fixed_upload_ms is not None:
        return float(network.fixed_upload_ms)
    if nbytes == 0:
        return 0.0
    return nbytes * 1000.0 / network.bandwidth_bytes_per_sec


def billed_duration(exec_ms: int | float, quantum_ms: int) -> int | float:
    """Round an execution time up to the billing quantum (0 disables rounding)."""
    if quantum_ms == 0:
        return exec_ms
    if isinstance(exec_ms, int):
        return -(-exec_ms // quantum_ms) * quantum_ms
    return math.ceil(exec_ms / quantum_ms) * quantum_ms


def gb_second_price(exec_ms: int | float, memory_mb: int, pricing: PricingConfig) -> float:
    """Monthly price of one cloud invocation per request, times the request volume."""
    billed = billed_duration(exec_ms, pricing.billing_quantum_ms)
    return pricing.executions_per_month * (billed / 1000.0) * (memory_mb / 1024.0) * pricing.gb_second_usd


def _profile(profiles: Profiles, name: str) -> FunctionProfile:
    try:
        return profiles[name]
    except KeyError:
        raise MissingProfileError(f"no profile for function {name!r}") from None


def _exec(profile: FunctionProfile, target: PlacementTarget) -> int:
    ms = profile.exec_on(target)
    if ms is None:
        raise MissingProfileError(f"function {profile.name!r} has no profile for {target.label}")
    return ms


def span_delay(span: Span, fnseq: FnSeq, profiles: Profiles) -> float:
    """Milliseconds from the span's invocation to its last member finishing."""
    members = [_profile(profiles, n) for n in span.members(fnseq)]
    if span.target.is_edge:
        return float(sum(_exec(p, span.target) for p in members))
    if span.mode is Mode.PARALLEL:
        return float(max(p.sched_ms + _exec(p, PlacementTarget.cloud(t)) for p, t in zip(members, span.tiers())))
    # fused members share one scheduling delay
    return float(members[0].sched_ms + sum(_exec(p, span.target) for p in members))


def span_price(span: Span, fnseq: FnSeq, profiles: Profiles, pricing: PricingConfig) -> float:
    """Monthly compute price of a span. Edge spans are covered by the device fee."""
    if span.target.is_edge:
        return 0.0
    members = [_profile(profiles, n) for n in span.members(fnseq)]
    if span.mode is Mode.PARALLEL:
        price = 0.0
        for p, tier in zip(members, span.tiers()):
            price += gb_second_price(_exec(p, PlacementTarget.cloud(tier)), tier, pricing)
        return price
    total = sum(_exec(p, span.target) for p in members)
    return gb_second_price(total, span.target.memory_mb, pricing)


def span_cost(
    span: Span,
    fnseq: FnSeq,
    profiles: Profiles,
    pricing: PricingConfig,
    network: NetworkConfig | None = None,
) -> tuple[float, float]:
    """``(price_usd, delay_ms)`` of one span, excluding transitions and transfers."""
    return span_price(span, fnseq, profiles, pricing), span_delay(span, fnseq, profiles)


def span_transitions(span: Span) -> int:
    """State transitions leaving a span: one per member if kept parallel, else one."""
    return span.size if span.mode is Mode.PARALLEL else 1


def start_transitions(first: Span) -> int:
    # an edge-first plan is triggered on the device, not by a state transition
    return 0 if first.target.is_edge else 1


def start_link_price(first: Span, pricing: PricingConfig) -> float:
    return start_transitions(first) * pricing.executions_per_month * pricing.transition_usd


def span_link_weights(
    span: Span,
    fnseq: FnSeq,
    profiles: Profiles,
    pricing: PricingConfig,
) -> tuple[float, float]:
    """Price and delay on every link leaving ``span``, before any transfer delay."""
    price, delay = span_cost(span, fnseq, profiles, pricing)
    price += span_transitions(span) * pricing.executions_per_month * pricing.transition_usd
    if span.target.is_edge:
        price += pricing.edge_device_usd_month
    return price, delay


def upload_delay(span: Span, fnseq: FnSeq, profiles: Profiles, network: NetworkConfig) -> float:
    """Time to ship the output of an edge span's last function to the cloud."""
    last = _profile(profiles, fnseq.order[span.stop - 1])
    return transmission_time(last.output_bytes, network)


def handoff_delay(span: Span, nxt: Span | None, fnseq: FnSeq, profiles: Profiles, network: NetworkConfig) -> float:
    """Transfer delay between two consecutive spans (only edge to cloud costs time)."""
    if nxt is None or not span.target.is_edge or nxt.target.is_edge:
        return 0.0
    return upload_delay(span, fnseq, profiles, network)


def validate_span(span: Span, fnseq: FnSeq) -> None:
    n = len(fnseq)
    if not (0 <= span.start < span.stop <= n):
        raise InvalidPlanError(f"span [{span.start}, {span.stop}) outside a sequence of {n} functions")
    if not fnseq.admits_range(span.start, span.stop):
        raise InvalidPlanError(
            f"span {fnseq.order[span.start:span.stop]} splits a parallel group or crosses a fusion barrier"
        )
    if span.mode is Mode.PARALLEL:
        if not fnseq.is_group(span.start, span.stop):
            raise InvalidPlanError("a parallel-retained span must cover exactly one parallel group")
        if span.target.is_edge:
            raise InvalidPlanError("edge spans always run serialized")
        if span.member_tiers is not None:
            if len(span.member_tiers) != span.size:
                raise InvalidPlanError("member_tiers length differs from the span size")
            if max(span.member_tiers) != span.target.memory_mb:
                raise InvalidPlanError("target of a parallel span must carry its largest member tier")
    elif span.member_tiers is not None:
        raise InvalidPlanError("member_tiers only apply to parallel-retained spans")


def validate_plan(
    plan: Plan,
    fnseq: FnSeq,
    profiles: Profiles | None = None,
    tiers: Sequence[int] | None = None,
) -> None:
    if not plan.spans:
        raise InvalidPlanError("plan has no spans")
    expected = 0
    for i, span in enumerate(plan.spans):
        validate_span(span, fnseq)
        if span.start != expected:
            raise InvalidPlanError(f"spans must be contiguous; span {i} starts at {span.start}, expected {expected}")
        if span.target.is_edge and i > 0:
            raise InvalidPlanError("only the first span may run on the edge")
        expected = span.stop
    if expected != len(fnseq):
        raise InvalidPlanError(f"plan covers {expected} of {len(fnseq)} functions")
    if profiles is None or tiers is None:
        return
    for span in plan.spans:
        if span.target.is_edge:
            continue
        for name, tier in zip(span.members(fnseq), span.tiers()):
            need = min_tier(_profile(profiles, name), tiers)
            if span.mode is Mode.SERIALIZED:
                tier = span.target.memory_mb
            if tier < need:
                raise InvalidPlanError(f"{name} needs at least {need} MB, plan gives {tier} MB")


def plan_transitions(plan: Plan) -> int:
    return start_transitions(plan.spans[0]) + sum(span_transitions(s) for s in plan.spans)


def plan_price(plan: Plan, fnseq: FnSeq, profiles: Profiles, pricing: PricingConfig) -> float:
    total = 0.0
    total += start_link_price(plan.spans[0], pricing)
    for span in plan.spans:
        total += span_link_weights(span, fnseq, profiles, pricing)[0]
    return total


def plan_latency(plan: Plan, fnseq: FnSeq, profiles: Profiles, network: NetworkConfig) -> float:
    total = 0.0
    spans = plan.spans
    for i, span in enumerate(spans):
        nxt = spans[i + 1] if i + 1 < len(spans) else None
        total += span_delay(span, fnseq, profiles) + handoff_delay(span, nxt, fnseq, profiles, network)
    return total


def estimate(
    plan: Plan,
    fnseq: FnSeq,
    profiles: Profiles,
    pricing: PricingConfig,
    network: NetworkConfig,
) -> Estimate:
    """Price, latency and a price breakdown for ``plan``."""
    compute = sum(span_price(s, fnseq, profiles, pricing) for s in plan.spans)
    transitions = plan_transitions(plan)
    return Estimate(
        price_usd=plan_price(plan, fnseq, profiles, pricing),
        latency_ms=plan_latency(plan, fnseq, profiles, network),
        transitions_per_execution=transitions,
        compute_usd=compute,
        transition_usd=transitions * pricing.executions_per_month * pricing.transition_usd,
        edge_usd=pricing.edge_device_usd_month if plan.uses_edge else 0.0,
    )


# -- plan documents -----------------------------------------------------------


def plan_to_dict(plan: Plan, fnseq: FnSeq) -> list[dict[str, Any]]:
    out = []
    for span in plan.spans:
        entry: dict[str, Any] = {
            "functions": list(span.members(fnseq)),
            "target": span.target.label,
            "mode": span.mode.value,
        }
        if span.member_tiers is not None:
            entry["member_targets"] = [f"cloud_{t}" for t in span.member_tiers]
        out.append(entry)
    return out


def plan_from_dict(entries: Sequence[Mapping[str, Any]], fnseq: FnSeq) -> Plan:
    index = {name: i for i, name in enumerate(fnseq.order)}
    spans = []
    for entry in entries:
        try:
            names = entry["functions"]
            target = PlacementTarget.parse(entry["target"])
            mode = Mode(entry.get("mode", Mode.SERIALIZED.value))
        except KeyError as exc:
            raise InvalidPlanError(f"plan entry missing {exc.args[0]!r}") from None
        except ValueError as exc:
            raise InvalidPlanError(f"plan entry: {exc}") from None
        if not names or any(n not in index for n in names):
            raise InvalidPlanError(f"plan entry names unknown functions: {names}")
        start = index[names[0]]
        if [index[n] for n in names] != list(range(start, start + len(names))):
            raise InvalidPlanError(f"plan entry functions {names} are not contiguous in the sequence")
        member_tiers = None
        if "member_targets" in entry:
            member_tiers = tuple(PlacementTarget.parse(t).memory_mb for t in entry["member_targets"])
        spans.append(Span(start, start + len(names), mode, target, member_tiers))
    plan = Plan(tuple(spans))
    validate_plan(plan, fnseq)
    return plan
