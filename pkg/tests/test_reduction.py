"""Rewrite engine: step semantics, fixpoint reduction, traces, strategies."""
import time

import pytest

from _generators import (
    bridge_graph,
    build_graph,
    random_sp_graph,
    reduce_random_order,
    seeded,
    two_path_graph,
)
from qnet import (
    AlgebraDomainError,
    Channel,
    CostVector,
    GraphFormatError,
    Leaf,
    NetworkGraph,
    Node,
    NodeRole,
    OperationCosts,
    Purify,
    ReductionError,
    Swap,
    evaluate_strategy,
    is_fully_reduced_pair,
    parallel_step,
    reduce_to_fixpoint,
    replay_trace,
    series_step,
)
from qnet.reduction import StepKind, serialize_strategy, strategy_leaves


def test_series_step_swaps_through_router():
    ops = OperationCosts(swap_success=0.5)
    g = build_graph(
        [("c1", "A", "m1", 0.9, 0.9), ("c2", "m1", "B", 0.9, 0.9)], ops=ops
    )
    g2, step = series_step(g, "m1")
    assert step.kind is StepKind.SERIES
    assert step.consumed == ("c1", "c2")
    assert step.eliminated == "m1"
    assert step.produced == "r0"
    assert step.cost == CostVector(0.8200000000000001, 0.81 * 0.5)
    assert set(g2.channels) == {"r0"}
    assert not g2.has_node("m1")
    assert g2.channel("r0").pair == frozenset(("A", "B"))


def test_series_step_identity_channel():
    g = build_graph(
        [("c1", "A", "m1", 1.0, 1.0), ("c2", "m1", "B", 0.77, 0.6)]
    )
    g2, step = series_step(g, "m1")
    assert step.cost == CostVector(0.77, 0.6)


def test_series_step_rejects_bad_nodes():
    g = build_graph(
        [("c1", "A", "m1", 0.9, 0.9), ("c2", "m1", "B", 0.9, 0.9)]
    )
    with pytest.raises(ReductionError):
        series_step(g, "A")  # endpoints are never eliminated
    g3 = build_graph(
        [
            ("c1", "A", "m1", 0.9, 0.9),
            ("c2", "m1", "B", 0.9, 0.9),
            ("c3", "m1", "B", 0.9, 0.9),
        ]
    )
    with pytest.raises(ReductionError):
        series_step(g3, "m1")  # degree 3
    g4 = build_graph(
        [("c1", "A", "m1", 0.9, 0.9), ("c2", "m1", "A", 0.8, 0.9)],
        endpoints=("A",),
    )
    with pytest.raises(ReductionError):
        series_step(g4, "m1")  # both channels lead to A; purify instead


def test_parallel_step_purifies_pair():
    g = build_graph(
        [("c1", "A", "B", 0.82, 0.81), ("c2", "A", "B", 0.82, 0.81)]
    )
    g2, step = parallel_step(g, "c2", "c1")
    assert step.kind is StepKind.PARALLEL
    assert step.consumed == ("c1", "c2")  # normalized order
    assert step.eliminated is None
    assert step.cost.fidelity == 0.9540295119182747
    assert abs(step.cost.success - 0.81**2 * 0.7048) <= 1e-12
    assert set(g2.channels) == {"r0"}


def test_parallel_step_identity_and_inverse_partners():
    g = build_graph(
        [("c1", "A", "B", 0.77, 0.9), ("c2", "A", "B", 0.5, 1.0)],
        ops=OperationCosts(physical_acceptance=False),
    )
    _, step = parallel_step(g, "c1", "c2")
    assert step.cost.fidelity == 0.77
    g = build_graph(
        [("c1", "A", "B", 0.77, 0.9), ("c2", "A", "B", 0.23, 1.0)],
        ops=OperationCosts(physical_acceptance=False),
    )
    _, step = parallel_step(g, "c1", "c2")
    assert abs(step.cost.fidelity - 0.5) <= 1e-12


def test_parallel_step_rejections():
    g = build_graph(
        [("c1", "A", "B", 0.9, 0.9), ("c2", "A", "m1", 0.9, 0.9), ("c3", "m1", "B", 1.0, 1.0)]
    )
    with pytest.raises(ReductionError):
        parallel_step(g, "c1", "c2")  # different spans
    with pytest.raises(ReductionError):
        parallel_step(g, "c1", "c1")
    singular = build_graph(
        [("c1", "A", "B", 1.0, 0.9), ("c2", "A", "B", 0.0, 0.9)]
    )
    with pytest.raises(AlgebraDomainError):
        parallel_step(singular, "c1", "c2")


def test_fixpoint_two_path_graph():
    result = reduce_to_fixpoint(two_path_graph())
    (channel,) = result.graph.channels.values()
    assert channel.id == "r2"
    assert channel.cost == CostVector(0.9540295119182747, 0.46241928000000015)
    kinds = [s.kind for s in result.trace.steps]
    assert kinds == [StepKind.SERIES, StepKind.SERIES, StepKind.PARALLEL]
    assert result.trace.steps[0].consumed == ("c1", "c2")
    assert result.trace.steps[0].eliminated == "m1"
    assert result.trace.steps[1].consumed == ("c3", "c4")
    assert result.trace.steps[2].consumed == ("r0", "r1")
    assert result.trace.terminal_channels == ("r2",)
    assert is_fully_reduced_pair(result.graph, "A", "B")


def test_fixpoint_single_edge_untouched():
    g = build_graph([("c1", "A", "B", 0.9, 0.9)])
    result = reduce_to_fixpoint(g)
    assert result.graph == g
    assert result.trace.steps == ()
    assert result.strategies == {"c1": Leaf("c1")}


def test_fixpoint_leaves_bridge_intact():
    g = bridge_graph()
    result = reduce_to_fixpoint(g)
    assert result.graph == g
    assert result.trace.steps == ()


def test_fixpoint_parallel_before_series():
    # the parallel pair must be merged before the series chain collapses
    g = build_graph(
        [
            ("c1", "A", "m1", 0.9, 0.9),
            ("c2", "m1", "B", 0.9, 0.9),
            ("c3", "m1", "B", 0.8, 0.9),
        ]
    )
    result = reduce_to_fixpoint(g)
    kinds = [s.kind for s in result.trace.steps]
    assert kinds == [StepKind.PARALLEL, StepKind.SERIES]
    assert result.trace.steps[0].consumed == ("c2", "c3")


def test_series_only_keeps_purification_choices():
    result = reduce_to_fixpoint(two_path_graph(), series_only=True)
    assert set(result.graph.channels) == {"r0", "r1"}
    assert all(s.kind is StepKind.SERIES for s in result.trace.steps)
    assert not is_fully_reduced_pair(result.graph, "A", "B")


def test_synthetic_ids_continue_after_partial_reduction():
    partial = reduce_to_fixpoint(two_path_graph(), series_only=True)
    result = reduce_to_fixpoint(partial.graph)
    produced = [s.produced for s in result.trace.steps]
    assert produced == ["r2"]


def test_trace_replay_reproduces_terminal_graph():
    for seed in range(10):
        g = random_sp_graph(seeded(seed), max_edges=20)
        result = reduce_to_fixpoint(g)
        assert replay_trace(g, result.trace) == result.graph


def test_strategies_evaluate_to_terminal_costs():
    for seed in range(10):
        g = random_sp_graph(seeded(100 + seed), max_edges=20)
        result = reduce_to_fixpoint(g)
        for cid, channel in result.graph.channels.items():
            cost = evaluate_strategy(result.strategies[cid], g)
            assert abs(cost.fidelity - channel.cost.fidelity) <= 1e-12
            assert abs(cost.success - channel.cost.success) <= 1e-12


def test_trace_conserves_channels():
    for seed in range(10):
        g = random_sp_graph(seeded(200 + seed), max_edges=25)
        result = reduce_to_fixpoint(g)
        consumed = [cid for s in result.trace.steps for cid in s.consumed]
        produced = {s.produced for s in result.trace.steps}
        assert len(consumed) == len(set(consumed))
        # every original channel ends up as a leaf of the terminal strategy
        (terminal,) = result.graph.channels
        assert sorted(strategy_leaves(result.strategies[terminal])) == sorted(
            g.channels
        )
        assert produced.isdisjoint(g.channels)


def test_fixpoint_is_deterministic():
    g = random_sp_graph(seeded(7), max_edges=30)
    first = reduce_to_fixpoint(g)
    second = reduce_to_fixpoint(g)
    assert first.trace == second.trace
    assert first.graph == second.graph
    assert {
        cid: serialize_strategy(t) for cid, t in first.strategies.items()
    } == {cid: serialize_strategy(t) for cid, t in second.strategies.items()}


def test_random_orders_agree_with_fixpoint():
    for seed in range(10):
        rng = seeded(300 + seed)
        g = random_sp_graph(rng, max_edges=20)
        reference = reduce_to_fixpoint(g)
        (terminal,) = reference.graph.channels.values()
        for _ in range(5):
            cost = reduce_random_order(g, rng)
            assert abs(cost.fidelity - terminal.cost.fidelity) <= 1e-9
            assert abs(cost.success - terminal.cost.success) <= 1e-9


def test_is_fully_reduced_pair_cases():
    pair = build_graph([("c1", "A", "B", 0.9, 0.9)])
    assert is_fully_reduced_pair(pair, "A", "B")
    assert not is_fully_reduced_pair(bridge_graph(), "A", "B")
    bare = NetworkGraph(
        [Node("A", NodeRole.ENDPOINT), Node("B", NodeRole.ENDPOINT)], []
    )
    assert not is_fully_reduced_pair(bare, "A", "B")
    with pytest.raises(GraphFormatError):
        is_fully_reduced_pair(pair, "A", "ghost")
    with pytest.raises(GraphFormatError):
        is_fully_reduced_pair(pair, "A", "A")


def test_evaluate_strategy_basics():
    g = two_path_graph()
    assert evaluate_strategy(Leaf("c1"), g) == g.channel("c1").cost
    tree = Purify(Swap(Leaf("c1"), Leaf("c2")), Swap(Leaf("c3"), Leaf("c4")))
    terminal = reduce_to_fixpoint(g).graph
    (channel,) = terminal.channels.values()
    assert evaluate_strategy(tree, g) == channel.cost
    with pytest.raises(GraphFormatError):
        evaluate_strategy(Leaf("ghost"), g)
    with pytest.raises(ReductionError):
        evaluate_strategy(Swap(Leaf("c1"), Leaf("c1")), g)


def _ladder(n_edges):
    rungs = n_edges // 2
    nodes = [Node("A", NodeRole.ENDPOINT), Node("B", NodeRole.ENDPOINT)]
    nodes += [Node(f"m{i}", NodeRole.ROUTER) for i in range(rungs - 1)]
    hops = ["A"] + [f"m{i}" for i in range(rungs - 1)] + ["B"]
    chans = []
    for i in range(rungs):
        chans.append(Channel(f"c{2 * i}", hops[i], hops[i + 1], CostVector(0.95, 0.9)))
        chans.append(Channel(f"c{2 * i + 1}", hops[i], hops[i + 1], CostVector(0.9, 0.8)))
    return NetworkGraph(nodes, chans)


def test_fixpoint_scales_near_linearly():
    timings = {}
    for n in (1000, 2000, 4000):
        g = _ladder(n)
        best = float("inf")
        for _ in range(5):
            t0 = time.perf_counter()
            result = reduce_to_fixpoint(g)
            best = min(best, time.perf_counter() - t0)
        assert len(result.graph.channels) == 1
        timings[n] = best
    assert timings[2000] <= 2.5 * timings[1000]
    assert timings[4000] <= 2.5 * timings[2000]
