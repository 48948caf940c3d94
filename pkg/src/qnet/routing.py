"""Routing: pick a subgraph and an operation strategy between two endpoints.

The planner harvests channel-disjoint swap-only paths with repeated Dijkstra
sweeps over log-loss weights, keeps the subgraph induced on the harvested
nodes, and tries to collapse it by series-parallel reduction.  A feasible
full collapse is the answer; anything else falls back to an exhaustive
search over the swap-collapsed kernel that considers every series/parallel
combination of every channel subset, not just the combinations the greedy
reduction would pick.  A reduction-free brute-force enumerator serves as
the reference optimum for small graphs.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from enum import Enum

from .algebra import (
    CostVector,
    purify_cost,
    swap_cost,
    to_log_loss,
)
from .graph import GraphFormatError, NetworkGraph, NodeRole
from .reduction import (
    Leaf,
    Purify,
    StrategyTree,
    Swap,
    is_fully_reduced_pair,
    reduce_to_fixpoint,
    serialize_strategy,
)

__all__ = [
    "InfeasibleRouteError",
    "RouteDiagnostics",
    "RouteRequest",
    "RouteResult",
    "SearchBoundError",
    "SearchKind",
    "brute_force_best",
    "harvest_paths",
    "residual_search",
    "route",
]

UNBOUNDED_PATHS = 2**31 - 1


class InfeasibleRouteError(Exception):
    """No strategy satisfies the success constraint."""


class SearchBoundError(Exception):
    """The exhaustive search would exceed its size bound."""


class SearchKind(Enum):
    FULLY_REDUCED = "FullyReduced"
    EXHAUSTIVE_SEARCH = "ExhaustiveSearch"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class RouteRequest:
    source: str
    target: str
    min_success: float
    max_paths: int = UNBOUNDED_PATHS
    max_bruteforce_edges: int = 12

    def __post_init__(self) -> None:
        if not 0.0 < self.min_success <= 1.0:
            raise ValueError(
                f"min_success {self.min_success!r} outside (0, 1]"
            )
        if self.max_paths < 1:
            raise ValueError("max_paths must be >= 1")
        if self.max_bruteforce_edges < 1:
            raise ValueError("max_bruteforce_edges must be >= 1")


@dataclass(frozen=True)
class RouteDiagnostics:
    paths_examined: int
    candidates_evaluated: int
    reduction_steps: int


@dataclass(frozen=True)
class RouteResult:
    subgraph: NetworkGraph
    strategy: StrategyTree | None
    cost: CostVector | None
    paths_harvested: int
    search: SearchKind
    diagnostics: RouteDiagnostics


def _check_endpoints(g: NetworkGraph, source: str, target: str) -> None:
    if source == target:
        raise GraphFormatError("source and target must differ")
    for nid in (source, target):
        if g.node(nid).role is not NodeRole.ENDPOINT:
            raise GraphFormatError(f"node {nid!r} is not an endpoint")


def _dijkstra(
    g: NetworkGraph,
    alive: set[str],
    source: str,
    target: str,
    swap_loss: float,
) -> tuple[list[str], float] | None:
    """Cheapest swap-only path by log-loss, or None if target is unreachable.

    Edge weight is the channel's log-loss; every interior node adds the
    swap operation's log-loss.  Only the source and repeater nodes may be
    traversed, so no foreign endpoint ever sits inside a path.
    """
    dist: dict[str, float] = {source: 0.0}
    parent: dict[str, tuple[str, str]] = {}
    done: set[str] = set()
    heap: list[tuple[float, str]] = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == target:
            break
        if u != source and g.node(u).role is not NodeRole.ROUTER:
            continue
        hop = swap_loss if u != source else 0.0
        for cid, v in g.neighbors(u):
            if cid not in alive or v in done:
                continue
            nd = d + hop + to_log_loss(g.channel(cid).cost.success)
            if nd < dist.get(v, float("inf")):
                dist[v] = nd
                parent[v] = (cid, u)
                heapq.heappush(heap, (nd, v))
    if target not in done:
        return None
    path: list[str] = []
    node = target
    while node != source:
        cid, prev = parent[node]
        path.append(cid)
        node = prev
    path.reverse()
    success = 1.0
    for cid in path:
        success *= g.channel(cid).cost.success
    for _ in range(len(path) - 1):
        success *= g.op_costs.swap_success
    return path, success


def harvest_paths(
    g: NetworkGraph, request: RouteRequest
) -> tuple[list[tuple[str, ...]], int]:
    """Channel-disjoint swap-only paths, best first.

    Repeats Dijkstra, withdrawing each found path's channels, until the
    graph is exhausted, the best remaining path falls below min_success,
    or max_paths is reached.  Returns (paths, sweeps run).
    """
    _check_endpoints(g, request.source, request.target)
    alive = set(g.channels)
    swap_loss = to_log_loss(g.op_costs.swap_success)
    paths: list[tuple[str, ...]] = []
    examined = 0
    while len(paths) < request.max_paths:
        examined += 1
        found = _dijkstra(g, alive, request.source, request.target, swap_loss)
        if found is None:
            break
        path, success = found
        if success < request.min_success:
            break
        paths.append(tuple(path))
        alive.difference_update(path)
    return paths, examined


def _induced_subgraph(
    g: NetworkGraph, paths: list[tuple[str, ...]], source: str, target: str
) -> NetworkGraph:
    keep = {source, target}
    for path in paths:
        for cid in path:
            c = g.channel(cid)
            keep.add(c.a)
            keep.add(c.b)
    nodes = [g.node(nid) for nid in sorted(keep)]
    channels = [
        c for c in g.channels.values() if c.a in keep and c.b in keep
    ]
    return NetworkGraph(nodes, channels, g.op_costs)


def _substitute(tree: StrategyTree, mapping: dict[str, StrategyTree]) -> StrategyTree:
    if isinstance(tree, Leaf):
        return mapping.get(tree.channel, tree)
    left = _substitute(tree.left, mapping)
    right = _substitute(tree.right, mapping)
    return Swap(left, right) if isinstance(tree, Swap) else Purify(left, right)


def _better(
    a: tuple[StrategyTree, CostVector] | None,
    tree: StrategyTree,
    cost: CostVector,
) -> tuple[StrategyTree, CostVector]:
    """Higher fidelity, then higher success, then smaller serialization."""
    if a is None:
        return tree, cost
    old_tree, old = a
    if cost.fidelity != old.fidelity:
        return (tree, cost) if cost.fidelity > old.fidelity else a
    if cost.success != old.success:
        return (tree, cost) if cost.success > old.success else a
    if serialize_strategy(tree) < serialize_strategy(old_tree):
        return tree, cost
    return a


def _frontier_add(
    entries: list[tuple[float, float, str, StrategyTree]],
    fid: float,
    succ: float,
    ser: str,
    tree: StrategyTree,
) -> None:
    """Insert into a Pareto frontier over (fidelity, success).

    Weakly dominated candidates are dropped; an exact (fidelity, success)
    tie keeps the lexicographically smaller serialization.  Pruning is
    sound because both operations are monotone in each operand's fidelity
    while all fidelities stay above 1/2 and in success always.
    """
    for k, (f2, s2, ser2, _t2) in enumerate(entries):
        if f2 >= fid and s2 >= succ:
            if f2 == fid and s2 == succ and ser < ser2:
                entries[k] = (fid, succ, ser, tree)
            return
    entries[:] = [e for e in entries if not (fid >= e[0] and succ >= e[1])]
    entries.append((fid, succ, ser, tree))


def _ordered(a: StrategyTree, a_ser: str, b: StrategyTree, b_ser: str):
    if a_ser <= b_ser:
        return a, b
    return b, a


def _exhaustive_search(
    g: NetworkGraph, source: str, target: str, min_success: float
) -> tuple[tuple[StrategyTree, CostVector] | None, int]:
    """Best feasible strategy over every series/parallel composition.

    Dynamic programming over (channel subset, node pair): each state keeps
    the Pareto-optimal ways to build one virtual pair from exactly that
    subset.  Swapping joins two disjoint subsets sharing one router (the
    router may serve other subsets again, which plain graph reduction
    cannot express); purification joins two disjoint subsets over the
    same pair.  Returns (best, candidate trees evaluated).
    """
    ids = sorted(g.channels)
    roles = {nid: n.role for nid, n in g.nodes.items()}
    ops = g.op_costs
    span = tuple(sorted((source, target)))
    Frontier = dict[tuple[str, str], list[tuple[float, float, str, StrategyTree]]]
    frontiers: list[Frontier] = [{} for _ in range(1 << len(ids))]
    for i, cid in enumerate(ids):
        c = g.channel(cid)
        tree = Leaf(cid)
        frontiers[1 << i][(c.a, c.b)] = [
            (c.cost.fidelity, c.cost.success, serialize_strategy(tree), tree)
        ]
    evaluated = 0
    for mask in range(3, 1 << len(ids)):
        if mask & (mask - 1) == 0:
            continue
        frontier = frontiers[mask]
        sub = (mask - 1) & mask
        while sub:
            other = mask ^ sub
            if sub < other:
                for pa, ea in frontiers[sub].items():
                    for pb, eb in frontiers[other].items():
                        if pa == pb:
                            produced = pa
                            is_parallel = True
                        else:
                            shared = set(pa) & set(pb)
                            if len(shared) != 1:
                                continue
                            (y,) = shared
                            if roles[y] is not NodeRole.ROUTER:
                                continue
                            x = pa[0] if pa[1] == y else pa[1]
                            z = pb[0] if pb[1] == y else pb[1]
                            if x == z:
                                continue
                            produced = tuple(sorted((x, z)))
                            is_parallel = False
                        bucket = frontier.setdefault(produced, [])
                        for fa, sa, sera, ta in ea:
                            for fb, sb, serb, tb in eb:
                                ca = CostVector(fa, sa)
                                cb = CostVector(fb, sb)
                                if is_parallel:
                                    denom = fa * fb + (1.0 - fa) * (1.0 - fb)
                                    if denom <= 1e-12:
                                        continue
                                    cost = purify_cost(ca, cb, ops)
                                    left, right = _ordered(ta, sera, tb, serb)
                                    tree = Purify(left, right)
                                else:
                                    cost = swap_cost(ca, cb, ops)
                                    left, right = _ordered(ta, sera, tb, serb)
                                    tree = Swap(left, right)
                                evaluated += 1
                                _frontier_add(
                                    bucket,
                                    cost.fidelity,
                                    cost.success,
                                    serialize_strategy(tree),
                                    tree,
                                )
            sub = (sub - 1) & mask
    best: tuple[StrategyTree, CostVector] | None = None
    for mask in range(1, 1 << len(ids)):
        for fid, succ, _ser, tree in frontiers[mask].get(span, []):
            if succ >= min_success:
                best = _better(best, tree, CostVector(fid, succ))
    return best, evaluated


def residual_search(
    g: NetworkGraph,
    source: str,
    target: str,
    min_success: float,
    max_channels: int = 12,
) -> tuple[StrategyTree, CostVector]:
    """Exhaustive subset search for graphs the reduction could not collapse."""
    if len(g.channels) > max_channels:
        raise SearchBoundError(
            f"{len(g.channels)} channels exceed the search bound {max_channels}"
        )
    best, _ = _exhaustive_search(g, source, target, min_success)
    if best is None:
        raise InfeasibleRouteError(
            f"no strategy reaches success {min_success!r}"
        )
    return best


def route(g: NetworkGraph, request: RouteRequest) -> RouteResult:
    """Plan the best strategy between two endpoints under a success floor.

    Maximizes fidelity subject to cost.success >= min_success; ties break
    toward higher success, then the smallest strategy serialization.
    """
    _check_endpoints(g, request.source, request.target)
    source, target = request.source, request.target
    paths, examined = harvest_paths(g, request)
    if not paths:
        empty = NetworkGraph(
            [g.node(source), g.node(target)], [], g.op_costs
        )
        return RouteResult(
            subgraph=empty,
            strategy=None,
            cost=None,
            paths_harvested=0,
            search=SearchKind.INFEASIBLE,
            diagnostics=RouteDiagnostics(examined, 0, 0),
        )
    sub = _induced_subgraph(g, paths, source, target)
    collapsed = reduce_to_fixpoint(sub)
    steps = len(collapsed.trace.steps)
    if is_fully_reduced_pair(collapsed.graph, source, target):
        (channel,) = collapsed.graph.channels.values()
        if channel.cost.success >= request.min_success:
            return RouteResult(
                subgraph=sub,
                strategy=collapsed.strategies[channel.id],
                cost=channel.cost,
                paths_harvested=len(paths),
                search=SearchKind.FULLY_REDUCED,
                diagnostics=RouteDiagnostics(examined, 1, steps),
            )
    kernel = reduce_to_fixpoint(sub, series_only=True)
    if len(kernel.graph.channels) > request.max_bruteforce_edges:
        raise SearchBoundError(
            f"irreducible remainder of {len(kernel.graph.channels)} channels "
            f"exceeds max_bruteforce_edges={request.max_bruteforce_edges}"
        )
    best, evaluated = _exhaustive_search(
        kernel.graph, source, target, request.min_success
    )
    diagnostics = RouteDiagnostics(examined, evaluated, steps)
    if best is None:
        return RouteResult(
            subgraph=sub,
            strategy=None,
            cost=None,
            paths_harvested=len(paths),
            search=SearchKind.INFEASIBLE,
            diagnostics=diagnostics,
        )
    tree, cost = best
    tree = _substitute(tree, kernel.strategies)
    return RouteResult(
        subgraph=sub,
        strategy=tree,
        cost=cost,
        paths_harvested=len(paths),
        search=SearchKind.EXHAUSTIVE_SEARCH,
        diagnostics=diagnostics,
    )


def brute_force_best(
    g: NetworkGraph, source: str, target: str, min_success: float
) -> tuple[StrategyTree, CostVector]:
    """Reference optimum by exhaustive merging, independent of the reducer.

    Explores every way of combining channels two at a time (purify on equal
    node pairs, swap through repeaters) and keeps the best feasible pair
    spanning source-target.  Limited to 8 channels.
    """
    _check_endpoints(g, source, target)
    if len(g.channels) > 8:
        raise SearchBoundError(
            f"{len(g.channels)} channels exceed the brute-force bound of 8"
        )
    roles = {nid: n.role for nid, n in g.nodes.items()}
    span = tuple(sorted((source, target)))

    # virtual pair: (node pair, fidelity, success, serialization, tree)
    initial = tuple(
        sorted(
            (
                tuple(sorted((c.a, c.b))),
                c.cost.fidelity,
                c.cost.success,
                serialize_strategy(Leaf(c.id)),
                Leaf(c.id),
            )
            for c in g.channels.values()
        )
    )
    best: tuple[StrategyTree, CostVector] | None = None
    seen: set = set()
    stack = [initial]
    while stack:
        state = stack.pop()
        key = tuple(v[:3] for v in state)
        if key in seen:
            continue
        seen.add(key)
        for pair, f, s, _, tree in state:
            if pair == span and s >= min_success:
                best = _better(best, tree, CostVector(f, s))
        n = len(state)
        for i in range(n):
            for j in range(i + 1, n):
                pa, fa, sa, _, ta = state[i]
                pb, fb, sb, _, tb = state[j]
                ca = CostVector(fa, sa)
                cb = CostVector(fb, sb)
                if pa == pb:
                    denom = fa * fb + (1.0 - fa) * (1.0 - fb)
                    if denom <= 1e-12:
                        continue
                    cost = purify_cost(ca, cb, g.op_costs)
                    tree = Purify(ta, tb)
                    merged_pair = pa
                else:
                    shared = set(pa) & set(pb)
                    if len(shared) != 1:
                        continue
                    (y,) = shared
                    if roles.get(y) is not NodeRole.ROUTER:
                        continue
                    x = pa[0] if pa[1] == y else pa[1]
                    z = pb[0] if pb[1] == y else pb[1]
                    cost = swap_cost(ca, cb, g.op_costs)
                    tree = Swap(ta, tb)
                    merged_pair = tuple(sorted((x, z)))
                merged = (
                    merged_pair,
                    cost.fidelity,
                    cost.success,
                    serialize_strategy(tree),
                    tree,
                )
                rest = state[:i] + state[i + 1 : j] + state[j + 1 :]
                stack.append(tuple(sorted(rest + (merged,))))
    if best is None:
        raise InfeasibleRouteError(
            f"no strategy reaches success {min_success!r}"
        )
    return best
