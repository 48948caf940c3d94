"""Series-parallel reduction of network graphs.

A series step eliminates a degree-2 repeater by swapping its two channels
into one; a parallel step purifies two channels spanning the same node pair.
Repeating both to a fixpoint collapses any series-parallel topology to a
single channel whose cost is independent of the step order; irreducible
remainders (bridge-like topologies) survive and are handed to search.

Every step is recorded in a trace, and every produced channel carries a
strategy tree saying which physical operations build it.
"""
from __future__ import annotations

import heapq
import re
from dataclasses import dataclass
from enum import Enum
from typing import Union

from .algebra import CostVector, purify_cost, swap_cost
from .graph import Channel, GraphFormatError, NetworkGraph, Node, NodeRole
from .jsonutil import canonical_dumps

__all__ = [
    "Leaf",
    "Purify",
    "ReductionError",
    "ReductionResult",
    "ReductionStep",
    "ReductionTrace",
    "StepKind",
    "StrategyTree",
    "Swap",
    "evaluate_strategy",
    "is_fully_reduced_pair",
    "parallel_step",
    "reduce_to_fixpoint",
    "replay_trace",
    "series_step",
    "strategy_from_obj",
    "strategy_leaves",
    "strategy_to_obj",
    "serialize_strategy",
]

_SYNTHETIC_ID_RE = re.compile(r"^r(\d+)$")


class ReductionError(ValueError):
    """Raised when a rewrite step does not apply."""


@dataclass(frozen=True)
class Leaf:
    channel: str


@dataclass(frozen=True)
class Swap:
    left: "StrategyTree"
    right: "StrategyTree"


@dataclass(frozen=True)
class Purify:
    left: "StrategyTree"
    right: "StrategyTree"


StrategyTree = Union[Leaf, Swap, Purify]


def strategy_to_obj(tree: StrategyTree) -> dict:
    if isinstance(tree, Leaf):
        return {"op": "leaf", "channel": tree.channel}
    op = "swap" if isinstance(tree, Swap) else "purify"
    return {
        "op": op,
        "left": strategy_to_obj(tree.left),
        "right": strategy_to_obj(tree.right),
    }


def strategy_from_obj(obj) -> StrategyTree:
    if not isinstance(obj, dict) or "op" not in obj:
        raise ValueError("strategy node must be an object with an 'op' field")
    op = obj["op"]
    if op == "leaf":
        if set(obj) != {"op", "channel"} or not isinstance(obj["channel"], str):
            raise ValueError("leaf node needs exactly a string 'channel' field")
        return Leaf(obj["channel"])
    if op in ("swap", "purify"):
        if set(obj) != {"op", "left", "right"}:
            raise ValueError(f"{op} node needs exactly 'left' and 'right'")
        left = strategy_from_obj(obj["left"])
        right = strategy_from_obj(obj["right"])
        return Swap(left, right) if op == "swap" else Purify(left, right)
    raise ValueError(f"unknown strategy op {op!r}")


def serialize_strategy(tree: StrategyTree) -> str:
    """Canonical text form; used for deterministic tie-breaking."""
    return canonical_dumps(strategy_to_obj(tree))


def strategy_leaves(tree: StrategyTree) -> list[str]:
    """Channel ids at the leaves, left to right."""
    if isinstance(tree, Leaf):
        return [tree.channel]
    return strategy_leaves(tree.left) + strategy_leaves(tree.right)


class StepKind(Enum):
    SERIES = "series"
    PARALLEL = "parallel"


@dataclass(frozen=True)
class ReductionStep:
    kind: StepKind
    consumed: tuple[str, str]
    eliminated: str | None
    produced: str
    cost: CostVector


@dataclass(frozen=True)
class ReductionTrace:
    steps: tuple[ReductionStep, ...]
    terminal_nodes: tuple[str, ...]
    terminal_channels: tuple[str, ...]


@dataclass(frozen=True)
class ReductionResult:
    graph: NetworkGraph
    trace: ReductionTrace
    strategies: dict[str, StrategyTree]


def _synthetic_start(g: NetworkGraph) -> int:
    top = -1
    for cid in g.channels:
        m = _SYNTHETIC_ID_RE.match(cid)
        if m:
            top = max(top, int(m.group(1)))
    return top + 1


def series_step(
    g: NetworkGraph, router_id: str, produced_id: str | None = None
) -> tuple[NetworkGraph, ReductionStep]:
    """Eliminate a degree-2 repeater, swapping its channels into one."""
    node = g.node(router_id)
    if node.role is not NodeRole.ROUTER:
        raise ReductionError(f"cannot eliminate endpoint {router_id!r}")
    incident = g.incident(router_id)
    if len(incident) != 2:
        raise ReductionError(
            f"router {router_id!r} has degree {len(incident)}, need exactly 2"
        )
    c1, c2 = (g.channel(cid) for cid in incident)
    u, w = c1.other(router_id), c2.other(router_id)
    if u == w:
        raise ReductionError(
            f"both channels at {router_id!r} lead to {u!r}; purify them instead"
        )
    if produced_id is None:
        produced_id = f"r{_synthetic_start(g)}"
    cost = swap_cost(c1.cost, c2.cost, g.op_costs)
    step = ReductionStep(
        StepKind.SERIES, (c1.id, c2.id), router_id, produced_id, cost
    )
    g2 = g.rewired(
        drop_channels=(c1.id, c2.id),
        add_channels=(Channel(produced_id, u, w, cost),),
        drop_nodes=(router_id,),
    )
    return g2, step


def parallel_step(
    g: NetworkGraph, first_id: str, second_id: str, produced_id: str | None = None
) -> tuple[NetworkGraph, ReductionStep]:
    """Purify two channels spanning the same nodes into one."""
    if first_id == second_id:
        raise ReductionError(f"cannot purify channel {first_id!r} with itself")
    c1, c2 = g.channel(first_id), g.channel(second_id)
    if c1.pair != c2.pair:
        raise ReductionError(
            f"channels {first_id!r} and {second_id!r} are not parallel"
        )
    if c2.id < c1.id:
        c1, c2 = c2, c1
    if produced_id is None:
        produced_id = f"r{_synthetic_start(g)}"
    cost = purify_cost(c1.cost, c2.cost, g.op_costs)
    step = ReductionStep(
        StepKind.PARALLEL, (c1.id, c2.id), None, produced_id, cost
    )
    g2 = g.rewired(
        drop_channels=(c1.id, c2.id),
        add_channels=(Channel(produced_id, c1.a, c1.b, cost),),
    )
    return g2, step


class _Engine:
    """Mutable fixpoint machinery behind reduce_to_fixpoint.

    Parallel steps are exhausted before series steps; within each kind the
    candidate carrying the lowest channel id goes first.  Heaps with lazy
    invalidation keep the whole run at O(|E| log |E|).
    """

    def __init__(self, g: NetworkGraph, series_only: bool = False) -> None:
        self.ops = g.op_costs
        self.series_only = series_only
        self.roles = {nid: n.role for nid, n in g.nodes.items()}
        self.chan: dict[str, Channel] = dict(g.channels)
        self.inc: dict[str, set[str]] = {nid: set() for nid in self.roles}
        self.pair_members: dict[frozenset, set[str]] = {}
        self.pair_heap: dict[frozenset, list[str]] = {}
        self.trees: dict[str, StrategyTree] = {}
        self.steps: list[ReductionStep] = []
        self.next_id = _synthetic_start(g)
        self.par_heap: list[str] = []
        self.ser_heap: list[tuple[str, str]] = []
        for cid, c in self.chan.items():
            self.inc[c.a].add(cid)
            self.inc[c.b].add(cid)
            self.pair_members.setdefault(c.pair, set()).add(cid)
            heapq.heappush(self.pair_heap.setdefault(c.pair, []), cid)
            self.trees[cid] = Leaf(cid)
        if not series_only:
            for members in self.pair_members.values():
                if len(members) >= 2:
                    for cid in members:
                        heapq.heappush(self.par_heap, cid)
        for nid in self.roles:
            self._maybe_series_candidate(nid)

    def _maybe_series_candidate(self, nid: str) -> None:
        if (
            self.roles.get(nid) is NodeRole.ROUTER
            and len(self.inc[nid]) == 2
        ):
            heapq.heappush(self.ser_heap, (min(self.inc[nid]), nid))

    def _alive(self, cid: str) -> bool:
        return cid in self.chan

    def _pair_min_two(self, pair: frozenset) -> tuple[str, str] | None:
        heap = self.pair_heap.get(pair)
        members = self.pair_members.get(pair, ())
        if heap is None or len(members) < 2:
            return None
        while heap and heap[0] not in members:
            heapq.heappop(heap)
        first = heapq.heappop(heap)
        while heap and heap[0] not in members:
            heapq.heappop(heap)
        second = heap[0] if heap else None
        heapq.heappush(heap, first)
        if second is None:
            return None
        return first, second

    def _add_channel(self, c: Channel, tree: StrategyTree) -> None:
        self.chan[c.id] = c
        self.inc[c.a].add(c.id)
        self.inc[c.b].add(c.id)
        members = self.pair_members.setdefault(c.pair, set())
        had_one = len(members) == 1
        lone = next(iter(members)) if had_one else None
        members.add(c.id)
        heapq.heappush(self.pair_heap.setdefault(c.pair, []), c.id)
        self.trees[c.id] = tree
        if not self.series_only and len(members) >= 2:
            heapq.heappush(self.par_heap, c.id)
            if had_one:
                heapq.heappush(self.par_heap, lone)

    def _drop_channel(self, cid: str) -> None:
        c = self.chan.pop(cid)
        self.inc[c.a].discard(cid)
        self.inc[c.b].discard(cid)
        self.pair_members[c.pair].discard(cid)
        del self.trees[cid]

    def _fresh_id(self) -> str:
        cid = f"r{self.next_id}"
        self.next_id += 1
        return cid

    def _apply_parallel(self, c1: Channel, c2: Channel) -> None:
        cost = purify_cost(c1.cost, c2.cost, self.ops)
        produced = self._fresh_id()
        tree = Purify(self.trees[c1.id], self.trees[c2.id])
        self.steps.append(
            ReductionStep(
                StepKind.PARALLEL, (c1.id, c2.id), None, produced, cost
            )
        )
        self._drop_channel(c1.id)
        self._drop_channel(c2.id)
        self._add_channel(Channel(produced, c1.a, c1.b, cost), tree)
        self._maybe_series_candidate(c1.a)
        self._maybe_series_candidate(c1.b)

    def _apply_series(self, nid: str) -> None:
        cid1, cid2 = sorted(self.inc[nid])
        c1, c2 = self.chan[cid1], self.chan[cid2]
        u, w = c1.other(nid), c2.other(nid)
        cost = swap_cost(c1.cost, c2.cost, self.ops)
        produced = self._fresh_id()
        tree = Swap(self.trees[cid1], self.trees[cid2])
        self.steps.append(
            ReductionStep(StepKind.SERIES, (cid1, cid2), nid, produced, cost)
        )
        self._drop_channel(cid1)
        self._drop_channel(cid2)
        del self.roles[nid]
        del self.inc[nid]
        self._add_channel(Channel(produced, u, w, cost), tree)
        self._maybe_series_candidate(u)
        self._maybe_series_candidate(w)

    def _next_parallel(self) -> tuple[Channel, Channel] | None:
        while self.par_heap:
            cid = self.par_heap[0]
            if not self._alive(cid):
                heapq.heappop(self.par_heap)
                continue
            pair = self.chan[cid].pair
            pick = self._pair_min_two(pair)
            if pick is None:
                heapq.heappop(self.par_heap)
                continue
            first, second = pick
            if first != cid:
                # a smaller partner exists and will be (or was) its own entry
                heapq.heappop(self.par_heap)
                heapq.heappush(self.par_heap, first)
                continue
            return self.chan[first], self.chan[second]
        return None

    def _next_series(self) -> str | None:
        while self.ser_heap:
            key, nid = self.ser_heap[0]
            if (
                self.roles.get(nid) is not NodeRole.ROUTER
                or len(self.inc.get(nid, ())) != 2
            ):
                heapq.heappop(self.ser_heap)
                continue
            cid1, cid2 = sorted(self.inc[nid])
            if key != cid1:
                heapq.heappop(self.ser_heap)
                heapq.heappush(self.ser_heap, (cid1, nid))
                continue
            c1, c2 = self.chan[cid1], self.chan[cid2]
            if c1.other(nid) == c2.other(nid):
                heapq.heappop(self.ser_heap)
                continue
            return nid
        return None

    def run(self) -> None:
        while True:
            if not self.series_only:
                pick = self._next_parallel()
                if pick is not None:
                    self._apply_parallel(*pick)
                    continue
            nid = self._next_series()
            if nid is not None:
                self._apply_series(nid)
                continue
            break

    def result(self) -> ReductionResult:
        nodes = [Node(nid, role) for nid, role in self.roles.items()]
        graph = NetworkGraph(nodes, self.chan.values(), self.ops)
        trace = ReductionTrace(
            steps=tuple(self.steps),
            terminal_nodes=tuple(sorted(self.roles)),
            terminal_channels=tuple(sorted(self.chan)),
        )
        return ReductionResult(graph, trace, dict(self.trees))


def reduce_to_fixpoint(
    g: NetworkGraph, series_only: bool = False
) -> ReductionResult:
    """Apply rewrite steps until none applies.

    Parallel steps are always exhausted before series steps, and ties go to
    the candidate with the lowest channel id, so the trace is deterministic.
    With series_only=True only repeater eliminations run, leaving every
    purification decision to the caller.
    """
    engine = _Engine(g, series_only=series_only)
    engine.run()
    return engine.result()


def replay_trace(g: NetworkGraph, trace: ReductionTrace) -> NetworkGraph:
    """Re-apply a recorded trace step by step via the public step functions."""
    current = g
    for step in trace.steps:
        if step.kind is StepKind.SERIES:
            current, replayed = series_step(
                current, step.eliminated, produced_id=step.produced
            )
        else:
            current, replayed = parallel_step(
                current, *step.consumed, produced_id=step.produced
            )
        if replayed.consumed != step.consumed:
            raise ReductionError(
                f"trace step {step!r} consumed {replayed.consumed} on replay"
            )
    return current


def is_fully_reduced_pair(g: NetworkGraph, source: str, target: str) -> bool:
    """True when g is exactly {source, target} joined by one channel."""
    g.node(source)
    g.node(target)
    if source == target:
        raise GraphFormatError("source and target must differ")
    if set(g.nodes) != {source, target}:
        return False
    chans = g.channels
    if len(chans) != 1:
        return False
    (c,) = chans.values()
    return c.pair == frozenset((source, target))


def evaluate_strategy(tree: StrategyTree, g: NetworkGraph) -> CostVector:
    """Cost of executing a strategy tree against a graph's channels.

    Each channel may be consumed by at most one leaf.
    """
    leaves = strategy_leaves(tree)
    seen = set()
    for cid in leaves:
        if cid in seen:
            raise ReductionError(f"channel {cid!r} consumed twice by strategy")
        seen.add(cid)

    def walk(t: StrategyTree) -> CostVector:
        if isinstance(t, Leaf):
            return g.channel(t.channel).cost
        left, right = walk(t.left), walk(t.right)
        if isinstance(t, Swap):
            return swap_cost(left, right, g.op_costs)
        return purify_cost(left, right, g.op_costs)

    return walk(tree)
