"""Linearize a workflow (sequential, parallel and choice states) into an
ordered function sequence with parallel-group and fusion-barrier annotations.

The accepted JSON is a small subset of the Amazon States Language::

    {"StartAt": "f1",
     "States": {
        "f1": {"Type": "Task", "Next": "p"},
        "p":  {"Type": "Parallel", "Branches": [["f2"], ["f3"]], "Next": "f4"},
        "f4": {"Type": "Task", "End": true}}}

A ``Choice`` state names its main branch with ``MainNext``; ``Default`` and
``Choices[*].Next`` are treated as side branches (error handling) and are
left out of the sequence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from os import PathLike
from pathlib import Path
from typing import Any, Mapping

from .errors import (
    CyclicWorkflowError,
    UnreachableStateError,
    UnsupportedStateError,
    WorkflowError,
)


@dataclass(frozen=True)
class TaskState:
    name: str
    next: str | None = None
    end: bool = False


@dataclass(frozen=True)
class ParallelState:
    name: str
    branches: tuple[tuple[str, ...], ...]
    next: str | None = None
    end: bool = False


@dataclass(frozen=True)
class ChoiceState:
    name: str
    main_next: str
    other_next: tuple[str, ...] = ()


State = TaskState | ParallelState | ChoiceState


@dataclass(frozen=True)
class WorkflowSpec:
    start: str
    states: Mapping[str, State]

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> WorkflowSpec:
        try:
            start = data["StartAt"]
            raw_states = data["States"]
        except KeyError as exc:
            raise WorkflowError(f"workflow: missing {exc.args[0]!r}") from None
        if not isinstance(raw_states, Mapping) or not raw_states:
            raise WorkflowError("workflow: 'States' must be a nonempty object")
        states = {name: _parse_state(name, body) for name, body in raw_states.items()}
        return cls(start=start, states=states)

    @classmethod
    def chain(cls, names: list[str] | tuple[str, ...]) -> WorkflowSpec:
        """A purely sequential workflow over ``names``."""
        if not names:
            raise WorkflowError("workflow needs at least one function")
        states: dict[str, State] = {}
        for i, name in enumerate(names):
            last = i == len(names) - 1
            states[name] = TaskState(name, None if last else names[i + 1], last)
        return cls(start=names[0], states=states)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for name, st in self.states.items():
            if isinstance(st, TaskState):
                body: dict[str, Any] = {"Type": "Task"}
            elif isinstance(st, ParallelState):
                body = {"Type": "Parallel", "Branches": [list(b) for b in st.branches]}
            else:
                body = {"Type": "Choice", "MainNext": st.main_next}
                if st.other_next:
                    body["Default"] = st.other_next[0]
                    if len(st.other_next) > 1:
                        body["Choices"] = [{"Next": n} for n in st.other_next[1:]]
                out[name] = body
                continue
            if st.end:
                body["End"] = True
            else:
                body["Next"] = st.next
            out[name] = body
        return {"StartAt": self.start, "States": out}


def load_workflow(source: str | PathLike | Mapping[str, Any]) -> WorkflowSpec:
    if isinstance(source, Mapping):
        return WorkflowSpec.from_dict(source)
    path = Path(source)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise WorkflowError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return WorkflowSpec.from_dict(data)


@dataclass(frozen=True)
class FnSeq:
    """Linear order of functions on the main path.

    ``parallel_groups`` holds half-open index ranges ``(start, stop)`` whose
    members run concurrently. ``barriers`` holds boundary positions ``b``
    (``1 <= b < len(order)``): no fused span may contain both ``order[b-1]``
    and ``order[b]``. ``edges`` keeps the main-path DAG adjacency.
    """

    order: tuple[str, ...]
    parallel_groups: tuple[tuple[int, int], ...] = ()
    barriers: frozenset[int] = frozenset()
    edges: tuple[tuple[str, str], ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if len(set(self.order)) != len(self.order):
            raise WorkflowError("function names must be unique")
        prev_stop = 0
        for start, stop in self.parallel_groups:
            if not (prev_stop <= start < stop <= len(self.order)) or stop - start < 2:
                raise WorkflowError(f"bad parallel group {(start, stop)}")
            prev_stop = stop
        if any(not 1 <= b < len(self.order) for b in self.barriers):
            raise WorkflowError("barrier outside the sequence")
        for start, stop in self.parallel_groups:
            if any(start < b < stop for b in self.barriers):
                raise WorkflowError("barrier inside a parallel group")
        if not self.edges:
            object.__setattr__(self, "edges", self.dag_edges())

    def __len__(self) -> int:
        return len(self.order)

    @classmethod
    def chain(cls, names: list[str] | tuple[str, ...] | int) -> FnSeq:
        if isinstance(names, int):
            names = [f"f{i + 1}" for i in range(names)]
        return cls(tuple(names))

    def group_of(self, index: int) -> tuple[int, int] | None:
        for group in self.parallel_groups:
            if group[0] <= index < group[1]:
                return group
        return None

    def can_cut(self, boundary: int) -> bool:
        """Whether a span boundary may sit between ``boundary-1`` and ``boundary``."""
        return not any(start < boundary < stop for start, stop in self.parallel_groups)

    def admits_range(self, start: int, stop: int) -> bool:
        """Whether ``order[start:stop]`` may form one span."""
        if not (0 <= start < stop <= len(self.order)):
            return False
        if not (self.can_cut(start) and self.can_cut(stop)):
            return False
        return not any(start < b < stop for b in self.barriers)

    def is_group(self, start: int, stop: int) -> bool:
        return (start, stop) in self.parallel_groups

    def dag_edges(self) -> tuple[tuple[str, str], ...]:
        """Main-path DAG edges implied by the order and the parallel groups."""
        blocks: list[tuple[str, ...]] = []
        i = 0
        while i < len(self.order):
            group = self.group_of(i)
            stop = group[1] if group else i + 1
            blocks.append(self.order[i:stop])
            i = stop
        return tuple((a, b) for left, right in zip(blocks, blocks[1:]) for a in left for b in right)

    def to_dict(self) -> dict[str, Any]:
        return {
            "order": list(self.order),
            "parallel_groups": [list(g) for g in self.parallel_groups],
            "barriers": sorted(self.barriers),
            "edges": [list(e) for e in self.edges],
        }


def to_fnseq(workflow: WorkflowSpec) -> FnSeq:
    states = workflow.states
    _check_graph(workflow)

    order: list[str] = []
    groups: list[tuple[int, int]] = []
    barriers: set[int] = set()
    edges: list[tuple[str, str]] = []
    frontier: list[str] = []  # functions whose output feeds the next one
    prev_state: State | None = None
    name: str | None = workflow.start

    while name is not None:
        st = states[name]
        if isinstance(st, TaskState):
            edges.extend((p, st.name) for p in frontier)
            order.append(st.name)
            frontier = [st.name]
            name = None if st.end else st.next
        elif isinstance(st, ParallelState):
            members = [branch[0] for branch in st.branches]
            edges.extend((p, m) for p in frontier for m in members)
            if len(members) > 1:
                groups.append((len(order), len(order) + len(members)))
            order.extend(members)
            frontier = members
            name = None if st.end else st.next
        else:
            if isinstance(prev_state, TaskState):
                decider = len(order) - 1
                barriers.update((decider, decider + 1))
            name = st.main_next
        prev_state = st

    n = len(order)
    if n == 0:
        raise WorkflowError("main path contains no Task state")
    return FnSeq(
        order=tuple(order),
        parallel_groups=tuple(groups),
        barriers=frozenset(b for b in barriers if 1 <= b < n),
        edges=tuple(edges),
    )


def _parse_state(name: str, body: Mapping[str, Any]) -> State:
    kind = body.get("Type")
    if kind == "Task":
        nxt, end = _next_or_end(name, body)
        return TaskState(name, nxt, end)
    if kind == "Parallel":
        raw = body.get("Branches")
        if not isinstance(raw, list) or not raw:
            raise WorkflowError(f"state {name!r}: Parallel needs a nonempty 'Branches' list")
        branches = tuple(_parse_branch(name, b) for b in raw)
        nxt, end = _next_or_end(name, body)
        return ParallelState(name, branches, nxt, end)
    if kind == "Choice":
        main = body.get("MainNext")
        if not isinstance(main, str):
            raise WorkflowError(f"state {name!r}: Choice needs 'MainNext'")
        others = []
        if "Default" in body:
            others.append(body["Default"])
        others.extend(c["Next"] for c in body.get("Choices", []) if c.get("Next") != main)
        return ChoiceState(name, main, tuple(others))
    raise UnsupportedStateError(f"state {name!r}: unsupported Type {kind!r}")


def _next_or_end(name: str, body: Mapping[str, Any]) -> tuple[str | None, bool]:
    end = bool(body.get("End", False))
    nxt = body.get("Next")
    if end == (nxt is not None):
        raise WorkflowError(f"state {name!r}: exactly one of 'Next' or 'End' is required")
    return nxt, end


def _parse_branch(parent: str, branch: Any) -> tuple[str, ...]:
    # Either a plain list of function names, or an ASL branch object.
    if isinstance(branch, list):
        names = tuple(branch)
    elif isinstance(branch, Mapping):
        inner = branch.get("States", {})
        for sname, sbody in inner.items():
            if sbody.get("Type") == "Parallel":
                raise UnsupportedStateError(f"state {parent!r}: nested Parallel {sname!r} is not supported")
            if sbody.get("Type") != "Task":
                raise UnsupportedStateError(f"state {parent!r}: branch state {sname!r} must be a Task")
        names = tuple(inner)
    else:
        raise WorkflowError(f"state {parent!r}: malformed branch {branch!r}")
    if len(names) != 1 or not isinstance(names[0], str) or not names[0]:
        raise UnsupportedStateError(
            f"state {parent!r}: each parallel branch must be exactly one Task, got {list(names)}"
        )
    return names


def _successors(st: State) -> tuple[str, ...]:
    if isinstance(st, ChoiceState):
        return (st.main_next, *st.other_next)
    return () if st.end else (st.next,)


def _check_graph(workflow: WorkflowSpec) -> None:
    states = workflow.states
    if workflow.start not in states:
        raise WorkflowError(f"StartAt {workflow.start!r} is not a state")
    for st in states.values():
        for nxt in _successors(st):
            if nxt not in states:
                raise WorkflowError(f"state {st.name!r}: transition to unknown state {nxt!r}")

    names = [n for n in states]
    for st in states.values():
        if isinstance(st, ParallelState):
            names.extend(b[0] for b in st.branches)
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise WorkflowError(f"duplicate function/state names: {sorted(dupes)}")

    # iterative DFS with colours for cycle detection
    WHITE, GREY, BLACK = 0, 1, 2
    colour = dict.fromkeys(states, WHITE)
    stack: list[tuple[str, int]] = [(workflow.start, 0)]
    colour[workflow.start] = GREY
    while stack:
        node, idx = stack.pop()
        succ = _successors(states[node])
        if idx < len(succ):
            stack.append((node, idx + 1))
            child = succ[idx]
            if colour[child] == GREY:
                raise CyclicWorkflowError(f"cycle through state {child!r}")
            if colour[child] == WHITE:
                colour[child] = GREY
                stack.append((child, 0))
        else:
            colour[node] = BLACK
    unreachable = sorted(n for n, c in colour.items() if c == WHITE)
    if unreachable:
        raise UnreachableStateError(f"states not reachable from {workflow.start!r}: {unreachable}")
