"""Command-line entry point: ``fuseplace <command> ...``.

Exit codes: 0 success, 1 input or validation error, 2 no plan meets the
latency threshold.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Sequence

from .bench import run_bench, write_csv
from .costgraph import CostGraph, build_cost_graph
from .csp import OptimizeResult, larac, pareto_frontier, sweep_frontier
from .errors import FusePlaceError
from .estimator import estimate, plan_from_dict, plan_to_dict
from .model import (
    FunctionProfile,
    NetworkConfig,
    PlacementTarget,
    PricingConfig,
    load_network,
    load_pricing,
    load_profiles,
    validate_profiles,
)
from .normalize import FnSeq, load_workflow, to_fnseq
from .oracle import DEFAULT_CAP, evaluate_solutions, select_optimal

log = logging.getLogger("fuseplace")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2


class InputError(Exception):
    """A user-facing, single-line problem with one of the input files."""


class Inputs:
    def __init__(
        self,
        fnseq: FnSeq,
        profiles: dict[str, FunctionProfile],
        pricing: PricingConfig,
        network: NetworkConfig,
    ):
        self.fnseq = fnseq
        self.profiles = profiles
        self.pricing = pricing
        self.network = network

    def graph(self) -> CostGraph:
        return build_cost_graph(self.fnseq, self.profiles, self.pricing, self.network)


def _load(kind: str, path: str, loader):
    try:
        return loader(path)
    except OSError as exc:
        raise InputError(f"{path}: cannot read {kind} file ({exc.strerror})") from None
    except (FusePlaceError, ValueError, KeyError, TypeError) as exc:
        msg = str(exc)
        if not msg.startswith(str(path)):
            msg = f"{path}: {msg}"
        raise InputError(msg) from None


def load_inputs(args: argparse.Namespace) -> Inputs:
    workflow = _load("workflow", args.workflow, load_workflow)
    try:
        fnseq = to_fnseq(workflow)
    except FusePlaceError as exc:
        raise InputError(f"{args.workflow}: {exc}") from None
    profiles = _load("profiles", args.profiles, load_profiles)
    pricing = _load("pricing", args.pricing, load_pricing) if args.pricing else PricingConfig()
    if args.quantum_ms is not None:
        try:
            pricing = pricing.replace(billing_quantum_ms=args.quantum_ms)
        except FusePlaceError as exc:
            raise InputError(f"--quantum-ms: {exc}") from None
    network = _load("network", args.network, load_network)

    missing = [name for name in fnseq.order if name not in profiles]
    if missing:
        raise InputError(f"{args.profiles}: no profile for function(s) {', '.join(missing)}")
    try:
        validate_profiles([profiles[n] for n in fnseq.order], pricing)
    except FusePlaceError as exc:
        raise InputError(f"{args.profiles}: {exc}") from None
    return Inputs(fnseq, profiles, pricing, network)


def _write_text(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _dump_json(obj: Any) -> str:
    return json.dumps(obj, indent=2) + "\n"


def plan_document(result: OptimizeResult, inputs: Inputs, solver: str) -> dict[str, Any]:
    """JSON-ready plan with full-precision totals so ``estimate`` can reproduce them."""
    est = estimate(result.plan, inputs.fnseq, inputs.profiles, inputs.pricing, inputs.network)
    return {
        "plan": plan_to_dict(result.plan, inputs.fnseq),
        "price_usd": result.price_usd,
        "latency_ms": result.latency_ms,
        "transitions_per_execution": est.transitions_per_execution,
        "solver": solver,
        "feasible": result.feasible,
    }


def _threshold(args: argparse.Namespace) -> float:
    if args.threshold_ms is None:
        return math.inf
    if not args.threshold_ms > 0:
        raise InputError("--threshold-ms must be positive")
    return args.threshold_ms


def _summary(doc: dict[str, Any]) -> str:
    spans = " ".join(f"[{' '.join(s['functions'])}@{s['target']}]" for s in doc["plan"])
    return f"price_usd={doc['price_usd']:.4f} latency_ms={doc['latency_ms']:.1f} plan={spans}"


def _emit_plan(doc: dict[str, Any], args: argparse.Namespace, threshold: float) -> int:
    if args.out:
        Path(args.out).write_text(_dump_json(doc))
        print(_summary(doc))
    else:
        sys.stdout.write(_dump_json(doc))
    if not doc["feasible"]:
        print(
            f"infeasible: no plan meets {threshold:g} ms; minimum achievable latency is {doc['latency_ms']:.1f} ms",
            file=sys.stderr,
        )
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_optimize(args: argparse.Namespace) -> int:
    inputs = load_inputs(args)
    threshold = _threshold(args)
    graph = inputs.graph()
    if args.dump_graph:
        Path(args.dump_graph).write_text(_dump_json(graph.to_dict()))
    result = larac(graph, threshold)
    return _emit_plan(plan_document(result, inputs, "larac"), args, threshold)


def cmd_oracle(args: argparse.Namespace) -> int:
    inputs = load_inputs(args)
    threshold = _threshold(args)
    targets = [PlacementTarget.edge(), *inputs.pricing.cloud_targets]
    solutions = evaluate_solutions(inputs.fnseq, inputs.profiles, inputs.pricing, inputs.network, targets, args.cap)
    if args.all:
        with open(args.all, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["price_usd", "latency_ms", "plan"])
            for s in sorted(solutions, key=lambda s: (s.price_usd, s.latency_ms, s.encoding)):
                writer.writerow([f"{s.price_usd:.4f}", f"{s.latency_ms:.1f}", s.encoding])
    result = select_optimal(solutions, threshold)
    return _emit_plan(plan_document(result, inputs, "bruteforce"), args, threshold)


def cmd_estimate(args: argparse.Namespace) -> int:
    inputs = load_inputs(args)
    try:
        data = json.loads(Path(args.plan).read_text())
    except OSError as exc:
        raise InputError(f"{args.plan}: cannot read plan file ({exc.strerror})") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.plan}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    entries = data["plan"] if isinstance(data, dict) and "plan" in data else data
    try:
        plan = plan_from_dict(entries, inputs.fnseq)
        est = estimate(plan, inputs.fnseq, inputs.profiles, inputs.pricing, inputs.network)
    except (FusePlaceError, TypeError) as exc:
        raise InputError(f"{args.plan}: {exc}") from None
    out = {
        "price_usd": est.price_usd,
        "latency_ms": est.latency_ms,
        "transitions_per_execution": est.transitions_per_execution,
    }
    _write_text(_dump_json(out), args.out)
    return EXIT_OK


def cmd_frontier(args: argparse.Namespace) -> int:
    inputs = load_inputs(args)
    graph = inputs.graph()
    if args.dump_graph:
        Path(args.dump_graph).write_text(_dump_json(graph.to_dict()))
    points = sweep_frontier(graph, args.sweep) if args.sweep else pareto_frontier(graph)

    rows = ["latency_ms,price_usd,plan_id"]
    plans = {}
    for i, pt in enumerate(points):
        rows.append(f"{pt.latency_ms:.1f},{pt.price_usd:.4f},{i}")
        plans[str(i)] = {
            "plan": plan_to_dict(pt.plan, inputs.fnseq),
            "price_usd": pt.price_usd,
            "latency_ms": pt.latency_ms,
        }
    _write_text("\n".join(rows) + "\n", args.out)
    if args.out and args.out != "-":
        Path(args.out).with_suffix(".plans.json").write_text(_dump_json(plans))
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    inputs = load_inputs(args)
    fnseq = inputs.fnseq
    graph = inputs.graph()
    if args.dump_graph:
        Path(args.dump_graph).write_text(_dump_json(graph.to_dict()))
    groups = ", ".join("{" + " ".join(fnseq.order[a:b]) + "}" for a, b in fnseq.parallel_groups) or "none"
    barriers = ", ".join(f"{fnseq.order[b - 1]}|{fnseq.order[b]}" for b in sorted(fnseq.barriers)) or "none"
    print(f"sequence: {' -> '.join(fnseq.order)}")
    print(f"parallel groups: {groups}")
    print(f"barriers: {barriers}")
    print(f"nodes={graph.num_nodes} links={graph.num_links}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    pricing = _load("pricing", args.pricing, load_pricing) if args.pricing else None
    network = _load("network", args.network, load_network) if args.network else None
    if any(n < 1 for n in args.functions):
        raise InputError("--functions values must be positive")
    if args.repeat < 1:
        raise InputError("--repeat must be >= 1")
    if not 0.0 <= args.threshold_frac <= 1.0:
        raise InputError("--threshold-frac must lie in [0, 1]")
    frac = None if args.unconstrained else args.threshold_frac
    rows = run_bench(args.functions, args.seed, args.repeat, pricing, network, args.cap, args.jobs, frac)
    if args.out and args.out != "-":
        with open(args.out, "w", newline="") as fh:
            write_csv(rows, fh)
    else:
        write_csv(rows, sys.stdout)
    return EXIT_OK


def _add_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--workflow", required=True, help="state-machine JSON")
    p.add_argument("--profiles", required=True, help="function profiles JSON")
    p.add_argument("--pricing", help="pricing JSON (defaults to public Lambda rates)")
    p.add_argument("--network", required=True, help="edge-to-cloud network JSON")
    p.add_argument("--quantum-ms", type=int, help="override the billing quantum; 0 disables rounding")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fuseplace", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, helptext in (
        ("optimize", cmd_optimize, "cheapest plan under a latency threshold (LARAC)"),
        ("oracle", cmd_oracle, "same as optimize, by exhaustive enumeration"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_inputs(p)
        p.add_argument("--threshold-ms", type=float, help="latency limit; omit for unconstrained")
        p.add_argument("--out", help="write the plan JSON here instead of stdout")
        if name == "optimize":
            p.add_argument("--dump-graph", help="write the cost graph as JSON")
        else:
            p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="refuse sequences longer than this")
            p.add_argument("--all", help="write every (price, latency) pair to this CSV")
        p.set_defaults(func=fn)

    p = sub.add_parser("estimate", help="price and latency of a given plan")
    _add_inputs(p)
    p.add_argument("--plan", required=True, help="plan JSON (as written by optimize)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("frontier", help="Pareto frontier of price against latency as CSV")
    _add_inputs(p)
    p.add_argument("--out", help="CSV path; plans go to a .plans.json next to it")
    p.add_argument("--sweep", type=int, metavar="K", help="approximate with LARAC at K thresholds")
    p.add_argument("--dump-graph")
    p.set_defaults(func=cmd_frontier)

    p = sub.add_parser("validate", help="check inputs and report the cost graph size")
    _add_inputs(p)
    p.add_argument("--dump-graph")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bench", help="time the solver on synthetic chains")
    p.add_argument("--functions", type=int, nargs="+", required=True, metavar="N")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeat", type=int, default=1)
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument(
        "--threshold-frac",
        type=float,
        default=0.5,
        help="threshold position between the fastest (0) and cheapest (1) plan latency",
    )
    p.add_argument("--unconstrained", action="store_true", help="solve without a latency threshold")
    p.add_argument("--pricing")
    p.add_argument("--network")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FusePlaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
