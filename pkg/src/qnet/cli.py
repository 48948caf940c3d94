"""Command-line front end.

Subcommands: reduce, route, simulate, grid.  Every run writes exactly one
canonical JSON document to stdout (sorted keys, 17-significant-digit
floats); human-readable diagnostics go to stderr.  Exit codes: 0 success,
1 invalid input, 2 no feasible route, 3 search bound exceeded.
"""
from __future__ import annotations

import argparse
import os
import sys
from enum import IntEnum

from .algebra import (
    AlgebraDomainError,
    CostVector,
    GridSpec,
    GridStrategy,
    OperationCosts,
    grid_cost,
)
from .graph import GraphFormatError, NetworkGraph, graph_to_obj, parse_graph
from .jsonutil import canonical_dumps
from .montecarlo import McEstimate, estimate
from .reduction import (
    ReductionError,
    StrategyTree,
    evaluate_strategy,
    reduce_to_fixpoint,
    strategy_from_obj,
    strategy_to_obj,
)
from .routing import (
    InfeasibleRouteError,
    RouteRequest,
    RouteResult,
    SearchBoundError,
    SearchKind,
    route,
)

__all__ = ["ExitCode", "main", "run"]


class ExitCode(IntEnum):
    OK = 0
    INVALID_INPUT = 1
    NO_ROUTE = 2
    BOUND_EXCEEDED = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems instead of calling sys.exit."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError(message)


def _emit(doc: dict) -> None:
    sys.stdout.write(canonical_dumps(doc) + "\n")


def _fail(code: ExitCode, message: str, **context) -> int:
    _emit({"code": int(code), "message": message, "context": context})
    print(f"error: {message}", file=sys.stderr)
    return int(code)


def _load_graph(path: str) -> NetworkGraph:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise GraphFormatError(f"cannot read {path}: {exc.strerror}") from None
    return parse_graph(data)


def _cost_obj(cost: CostVector) -> dict:
    return {"fidelity": cost.fidelity, "success": cost.success}


def _threads_from_env() -> int:
    raw = os.environ.get("QNET_THREADS")
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        value = 0
    if value < 1:
        raise GraphFormatError(
            f"QNET_THREADS must be a positive integer, got {raw!r}"
        )
    return value


def _build_parser() -> _Parser:
    parser = _Parser(prog="qnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_reduce = sub.add_parser("reduce", help="collapse a graph to its fixpoint")
    p_reduce.add_argument("graph", help="graph document path")
    p_reduce.add_argument(
        "--trace", action="store_true", help="include the full step trace"
    )

    p_route = sub.add_parser("route", help="plan a strategy between endpoints")
    p_route.add_argument("graph")
    p_route.add_argument("--source", required=True)
    p_route.add_argument("--target", required=True)
    p_route.add_argument("--min-success", type=float, required=True)
    p_route.add_argument("--max-paths", type=int, default=None)
    p_route.add_argument("--max-bruteforce-edges", type=int, default=12)

    p_sim = sub.add_parser("simulate", help="Monte-Carlo check of a strategy")
    p_sim.add_argument("graph")
    p_sim.add_argument("--samples", type=int, required=True)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--strategy", help="strategy tree document path")
    p_sim.add_argument("--source")
    p_sim.add_argument("--target")
    p_sim.add_argument("--min-success", type=float)
    p_sim.add_argument("--max-paths", type=int, default=None)
    p_sim.add_argument("--max-bruteforce-edges", type=int, default=12)

    p_grid = sub.add_parser("grid", help="cost of a breadth x depth grid")
    p_grid.add_argument("--breadth", type=int, required=True)
    p_grid.add_argument("--depth", type=int, required=True)
    p_grid.add_argument("--fidelity", type=float, required=True)
    p_grid.add_argument("--success", type=float, required=True)
    p_grid.add_argument(
        "--strategy",
        choices=[s.value for s in GridStrategy],
        default=GridStrategy.PURIFY_THEN_SWAP.value,
    )
    p_grid.add_argument("--swap-success", type=float, default=1.0)
    p_grid.add_argument("--purify-success", type=float, default=1.0)
    p_grid.add_argument(
        "--physical-acceptance",
        action=argparse.BooleanOptionalAction,
        default=True,
    )
    return parser


def _step_obj(step) -> dict:
    return {
        "kind": step.kind.value,
        "consumed": list(step.consumed),
        "eliminated": step.eliminated,
        "produced": step.produced,
        "fidelity": step.cost.fidelity,
        "success": step.cost.success,
    }


def _cmd_reduce(args) -> int:
    g = _load_graph(args.graph)
    result = reduce_to_fixpoint(g)
    doc = {
        "command": "reduce",
        "steps": len(result.trace.steps),
        "terminal": graph_to_obj(result.graph),
        "channels": [
            {
                "id": c.id,
                "fidelity": c.cost.fidelity,
                "success": c.cost.success,
                "strategy": strategy_to_obj(result.strategies[c.id]),
            }
            for c in sorted(result.graph.channels.values(), key=lambda c: c.id)
        ],
    }
    if args.trace:
        doc["trace"] = [_step_obj(s) for s in result.trace.steps]
    _emit(doc)
    return int(ExitCode.OK)


def _route_request(args) -> RouteRequest:
    kwargs = {
        "source": args.source,
        "target": args.target,
        "min_success": args.min_success,
        "max_bruteforce_edges": args.max_bruteforce_edges,
    }
    if args.max_paths is not None:
        kwargs["max_paths"] = args.max_paths
    return RouteRequest(**kwargs)


def _route_obj(result: RouteResult) -> dict:
    return {
        "command": "route",
        "search": result.search.value,
        "cost": None if result.cost is None else _cost_obj(result.cost),
        "strategy": None
        if result.strategy is None
        else strategy_to_obj(result.strategy),
        "paths_harvested": result.paths_harvested,
        "subgraph": graph_to_obj(result.subgraph),
        "diagnostics": {
            "paths_examined": result.diagnostics.paths_examined,
            "candidates_evaluated": result.diagnostics.candidates_evaluated,
            "reduction_steps": result.diagnostics.reduction_steps,
        },
    }


def _cmd_route(args) -> int:
    g = _load_graph(args.graph)
    result = route(g, _route_request(args))
    _emit(_route_obj(result))
    if result.search is SearchKind.INFEASIBLE:
        print("error: no feasible route", file=sys.stderr)
        return int(ExitCode.NO_ROUTE)
    return int(ExitCode.OK)


def _default_strategy(g: NetworkGraph) -> StrategyTree:
    result = reduce_to_fixpoint(g)
    channels = result.graph.channels
    if len(channels) != 1:
        raise GraphFormatError(
            "graph does not reduce to a single channel; pass --strategy "
            "or --source/--target/--min-success"
        )
    (cid,) = channels
    return result.strategies[cid]


def _simulation_strategy(g: NetworkGraph, args) -> StrategyTree:
    route_flags = [args.source, args.target, args.min_success]
    if args.strategy is not None and any(v is not None for v in route_flags):
        raise GraphFormatError(
            "--strategy and route flags are mutually exclusive"
        )
    if args.strategy is not None:
        try:
            with open(args.strategy, "rb") as fh:
                raw = fh.read()
        except OSError as exc:
            raise GraphFormatError(
                f"cannot read {args.strategy}: {exc.strerror}"
            ) from None
        import json

        try:
            obj = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise GraphFormatError(f"bad strategy document: {exc}") from None
        try:
            return strategy_from_obj(obj)
        except ValueError as exc:
            raise GraphFormatError(str(exc)) from None
    if any(v is not None for v in route_flags):
        if not all(v is not None for v in route_flags):
            raise GraphFormatError(
                "route-driven simulation needs --source, --target "
                "and --min-success together"
            )
        result = route(g, _route_request(args))
        if result.search is SearchKind.INFEASIBLE:
            raise InfeasibleRouteError("no feasible route to simulate")
        return result.strategy
    return _default_strategy(g)


def _estimate_obj(est: McEstimate) -> dict:
    return {
        "fidelity_hat": est.fidelity_hat,
        "success_hat": est.success_hat,
        "std_error_fidelity": est.std_error_fidelity,
        "std_error_success": est.std_error_success,
        "samples": est.samples,
        "seed": est.seed,
    }


def _cmd_simulate(args) -> int:
    g = _load_graph(args.graph)
    if args.samples < 1:
        raise GraphFormatError("--samples must be >= 1")
    tree = _simulation_strategy(g, args)
    threads = _threads_from_env()
    est = estimate(tree, g, args.samples, args.seed, threads=threads)
    analytic = evaluate_strategy(tree, g)
    _emit(
        {
            "command": "simulate",
            "estimate": _estimate_obj(est),
            "analytic": _cost_obj(analytic),
            "strategy": strategy_to_obj(tree),
        }
    )
    return int(ExitCode.OK)


def _cmd_grid(args) -> int:
    spec = GridSpec(
        breadth=args.breadth,
        depth=args.depth,
        channel_fidelity=args.fidelity,
        channel_success=args.success,
        strategy=GridStrategy(args.strategy),
    )
    ops = OperationCosts(
        swap_success=args.swap_success,
        purify_success=args.purify_success,
        physical_acceptance=args.physical_acceptance,
    )
    cost = grid_cost(spec, ops)
    _emit(
        {
            "command": "grid",
            "breadth": spec.breadth,
            "depth": spec.depth,
            "channel_fidelity": spec.channel_fidelity,
            "channel_success": spec.channel_success,
            "strategy": spec.strategy.value,
            "op_costs": {
                "swap_success": ops.swap_success,
                "purify_success": ops.purify_success,
                "physical_acceptance": ops.physical_acceptance,
            },
            "cost": _cost_obj(cost),
        }
    )
    return int(ExitCode.OK)


def run(argv: list[str] | None = None) -> int:
    """Parse arguments and execute one subcommand; returns the exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "reduce":
            return _cmd_reduce(args)
        if args.command == "route":
            return _cmd_route(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        return _cmd_grid(args)
    except _UsageError as exc:
        return _fail(ExitCode.INVALID_INPUT, str(exc))
    except (GraphFormatError, AlgebraDomainError, ReductionError) as exc:
        return _fail(ExitCode.INVALID_INPUT, str(exc))
    except InfeasibleRouteError as exc:
        return _fail(ExitCode.NO_ROUTE, str(exc))
    except SearchBoundError as exc:
        return _fail(ExitCode.BOUND_EXCEEDED, str(exc))
    except ValueError as exc:
        return _fail(ExitCode.INVALID_INPUT, str(exc))


def main(argv: list[str] | None = None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
