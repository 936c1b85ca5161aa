"""Synthetic workflows and the solver-vs-brute-force timing harness."""

from __future__ import annotations

import csv
import logging
import math
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import IO, Iterable

from .costgraph import build_cost_graph
from .csp import larac, min_delay_path, min_price_path
from .errors import TooLargeError
from .model import FunctionProfile, NetworkConfig, PlacementTarget, PricingConfig
from .normalize import WorkflowSpec, to_fnseq
from .oracle import DEFAULT_CAP, brute_force_optimize

log = logging.getLogger(__name__)

Range = tuple[int, int]


@dataclass(frozen=True)
class SynthSpec:
    """Parameters for one random sequential workflow.

    Cloud times are drawn for the smallest tier; each larger tier scales the
    previous time by a factor drawn from ``speedup``.
    """

    n_functions: int
    seed: int = 0
    cloud_exec_ms: Range = (500, 2000)
    edge_exec_ms: Range = (1000, 5000)
    sched_ms: Range = (50, 300)
    output_bytes: Range = (10_000, 2_000_000)
    max_mem_mb: Range = (32, 200)
    memory_tiers_mb: tuple[int, ...] = (128, 256)
    speedup: tuple[float, float] = (0.5, 1.0)

    def __post_init__(self) -> None:
        if self.n_functions < 1:
            raise ValueError("n_functions must be positive")
        for name in ("cloud_exec_ms", "edge_exec_ms", "sched_ms", "output_bytes", "max_mem_mb", "speedup"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name}: empty range {lo}..{hi}")
        if self.max_mem_mb[1] > max(self.memory_tiers_mb):
            raise ValueError("max_mem_mb range must fit the largest memory tier")


def synth_workflow(spec: SynthSpec) -> tuple[WorkflowSpec, dict[str, FunctionProfile]]:
    rng = random.Random(spec.seed)
    names = [f"f{i + 1}" for i in range(spec.n_functions)]
    tiers = sorted(spec.memory_tiers_mb)
    profiles = {}
    for name in names:
        exec_ms: dict[PlacementTarget, int] = {PlacementTarget.edge(): rng.randint(*spec.edge_exec_ms)}
        ms = rng.randint(*spec.cloud_exec_ms)
        for tier in tiers:
            exec_ms[PlacementTarget.cloud(tier)] = ms
            ms = max(1, round(ms * rng.uniform(*spec.speedup)))
        profiles[name] = FunctionProfile(
            name=name,
            exec_ms=exec_ms,
            sched_ms=rng.randint(*spec.sched_ms),
            max_mem_mb=rng.randint(*spec.max_mem_mb),
            output_bytes=rng.randint(*spec.output_bytes),
        )
    return WorkflowSpec.chain(names), profiles


def _threshold(graph, frac: float | None) -> float:
    # frac of the way from the fastest plan's latency to the cheapest plan's
    if frac is None:
        return math.inf
    fast = min_delay_path(graph).latency_ms
    slow = min_price_path(graph).latency_ms
    return fast + frac * (slow - fast)


def _run_one(args: tuple[int, int, int, PricingConfig, NetworkConfig, int, float | None]) -> list[dict]:
    n, seed, rep, pricing, network, cap, frac = args
    tiers = pricing.memory_tiers_mb
    spec = SynthSpec(n, seed, max_mem_mb=(min(32, tiers[-1]), min(200, tiers[-1])), memory_tiers_mb=tiers)
    workflow, profiles = synth_workflow(spec)
    fnseq = to_fnseq(workflow)
    rows = []

    t0 = time.perf_counter()
    graph = build_cost_graph(fnseq, profiles, pricing, network)
    t_thresh = _threshold(graph, frac)
    res = larac(graph, t_thresh)
    rows.append({"n": n, "method": "larac", "wall_ms": (time.perf_counter() - t0) * 1000, "price_usd": res.price_usd})

    if n <= cap:
        t0 = time.perf_counter()
        bf = brute_force_optimize(fnseq, profiles, pricing, network, t_thresh_ms=t_thresh, cap=cap)
        rows.append(
            {"n": n, "method": "bruteforce", "wall_ms": (time.perf_counter() - t0) * 1000, "price_usd": bf.price_usd}
        )
    elif rep == 0:
        log.warning("brute force refused for n=%d (cap %d)", n, cap)
    return rows


def run_bench(
    sizes: Iterable[int],
    seed: int = 0,
    repeat: int = 1,
    pricing: PricingConfig | None = None,
    network: NetworkConfig | None = None,
    cap: int = DEFAULT_CAP,
    jobs: int = 1,
    threshold_frac: float | None = 0.5,
) -> list[dict]:
    """Time graph build + LARAC (and brute force up to ``cap``) per size.

    The latency threshold sits ``threshold_frac`` of the way from the fastest
    to the cheapest plan (None: unconstrained); finding it is part of the
    timed solve. Returns rows with keys ``n, method, wall_ms, price_usd``.
    """
    if pricing is None:
        pricing = PricingConfig(memory_tiers_mb=(128, 256))
    if network is None:
        network = NetworkConfig(bandwidth_bytes_per_sec=1_194_690)
    if cap > 20:
        raise TooLargeError("brute-force cap above 20 is not supported")
    if threshold_frac is not None and not 0.0 <= threshold_frac <= 1.0:
        raise ValueError("threshold_frac must lie in [0, 1]")
    tasks = [(n, seed, rep, pricing, network, cap, threshold_frac) for n in sizes for rep in range(repeat)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]
    return [row for rows in results for row in rows]


def write_csv(rows: list[dict], fh: IO[str]) -> None:
    writer = csv.DictWriter(fh, fieldnames=["n", "method", "wall_ms", "price_usd"], lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({**row, "wall_ms": f"{row['wall_ms']:.3f}", "price_usd": f"{row['price_usd']:.4f}"})
