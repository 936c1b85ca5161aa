from __future__ import annotations

from pathlib import Path

import pytest

from fuseplace.estimator import Mode, Plan, Span
from fuseplace.model import (
    FunctionProfile,
    NetworkConfig,
    PlacementTarget,
    PricingConfig,
    load_network,
    load_pricing,
    load_profiles,
)
from fuseplace.normalize import FnSeq, load_workflow, to_fnseq

DATA = Path(__file__).resolve().parent.parent / "data"

EDGE = PlacementTarget.edge()
C128 = PlacementTarget.cloud(128)
C256 = PlacementTarget.cloud(256)
C512 = PlacementTarget.cloud(512)


def cloud(start: int, stop: int, mb: int) -> Span:
    return Span(start, stop, Mode.SERIALIZED, PlacementTarget.cloud(mb))


def edge(start: int, stop: int) -> Span:
    return Span(start, stop, Mode.SERIALIZED, EDGE)


def parallel(start: int, stop: int, tiers: tuple[int, ...]) -> Span:
    return Span(start, stop, Mode.PARALLEL, PlacementTarget.cloud(max(tiers)), tiers)


class WildRydes:
    def __init__(self) -> None:
        self.workflow = load_workflow(DATA / "wildrydes.json")
        self.fnseq = to_fnseq(self.workflow)
        self.profiles = load_profiles(DATA / "wildrydes_profiles.json")
        self.pricing = load_pricing(DATA / "aws.json")
        self.network = load_network(DATA / "fixed1130.json")


@pytest.fixture(scope="session")
def wildrydes() -> WildRydes:
    return WildRydes()


class ImageWorkflow:
    """Five-function image workflow: 512 MB/2 s, 128 MB/5 s, parallel
    {128 MB/1.5 s, 256 MB/0.3 s}, 128 MB/0.2 s. Priced with quantum 0."""

    def __init__(self) -> None:
        self.fnseq = FnSeq(order=("detect", "dup", "a", "b", "index"), parallel_groups=((2, 4),))
        spec = {
            "detect": (512, 2000, 400),
            "dup": (128, 5000, 100),
            "a": (128, 1500, 100),
            "b": (256, 300, 200),
            "index": (128, 200, 100),
        }
        self.profiles = {
            # durations do not change with memory in this example
            name: FunctionProfile(
                name,
                {PlacementTarget.cloud(t): ms for t in (128, 256, 512) if t >= mb},
                sched_ms=0,
                max_mem_mb=need,
                output_bytes=0,
            )
            for name, (mb, ms, need) in spec.items()
        }
        self.pricing = PricingConfig(billing_quantum_ms=0, memory_tiers_mb=(128, 256, 512))
        self.network = NetworkConfig(bandwidth_bytes_per_sec=1_000_000)
        self.plan = Plan((cloud(0, 1, 512), cloud(1, 2, 128), parallel(2, 4, (128, 256)), cloud(4, 5, 128)))


@pytest.fixture(scope="session")
def image_wf() -> ImageWorkflow:
    return ImageWorkflow()


def uniform_profiles(names, targets, exec_ms=1000, sched_ms=100, max_mem_mb=64, output_bytes=100_000):
    return {
        n: FunctionProfile(n, {t: exec_ms for t in targets}, sched_ms, max_mem_mb, output_bytes) for n in names
    }


def random_instance(rng, n: int, tiers=(128, 256), edge_prob=0.8):
    """Random FnSeq with occasional parallel pairs and barriers, plus profiles."""
    order = tuple(f"g{i}" for i in range(n))
    groups = []
    i = 0
    while i < n - 1:
        if rng.random() < 0.25:
            size = 2 if i + 3 > n or rng.random() < 0.7 else 3
            groups.append((i, i + size))
            i += size
        else:
            i += 1
    grouped = {b for a, z in groups for b in range(a + 1, z)}
    barriers = frozenset(b for b in range(1, n) if b not in grouped and rng.random() < 0.15)
    fnseq = FnSeq(order=order, parallel_groups=tuple(groups), barriers=barriers)
    profiles = {}
    for name in order:
        exec_ms = {}
        if rng.random() < edge_prob:
            exec_ms[EDGE] = rng.randint(1000, 5000)
        ms = rng.randint(500, 2000)
        for t in tiers:
            exec_ms[PlacementTarget.cloud(t)] = ms
            ms = max(1, round(ms * rng.uniform(0.5, 1.0)))
        profiles[name] = FunctionProfile(
            name, exec_ms, rng.randint(50, 300), rng.randint(16, tiers[-1]), rng.randint(0, 2_000_000)
        )
    return fnseq, profiles


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    lines = test_acceptance.summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
