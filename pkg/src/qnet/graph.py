"""Network graph model and its JSON document format.

Multigraph of endpoint/repeater nodes joined by channels, each channel
carrying a (fidelity, success) cost vector.  Documents are versioned and
strict: unknown fields are rejected, serialization is canonical, and
parse(serialize(g)) reproduces g exactly.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .algebra import CostVector, OperationCosts
from .jsonutil import canonical_dumps

__all__ = [
    "Channel",
    "GraphFormatError",
    "NetworkGraph",
    "Node",
    "NodeRole",
    "graph_to_obj",
    "parse_graph",
    "serialize_graph",
]

_ID_RE = re.compile(r"^\S{1,64}$")
_SYNTHETIC_RE = re.compile(r"^r[0-9]")


class GraphFormatError(ValueError):
    """Raised for malformed documents or invalid graph structure."""


class NodeRole(Enum):
    ENDPOINT = "endpoint"
    ROUTER = "router"


@dataclass(frozen=True)
class Node:
    id: str
    role: NodeRole


@dataclass(frozen=True)
class Channel:
    """Undirected channel; endpoints are stored in sorted order."""

    id: str
    a: str
    b: str
    cost: CostVector

    def __post_init__(self) -> None:
        if self.b < self.a:
            a, b = self.b, self.a
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)

    @property
    def pair(self) -> frozenset[str]:
        return frozenset((self.a, self.b))

    def other(self, node_id: str) -> str:
        if node_id == self.a:
            return self.b
        if node_id == self.b:
            return self.a
        raise KeyError(f"{node_id!r} not on channel {self.id!r}")


def _check_id(kind: str, value: str) -> str:
    if not isinstance(value, str) or not _ID_RE.match(value):
        raise GraphFormatError(
            f"{kind} id {value!r} must be 1-64 non-whitespace characters"
        )
    return value


class NetworkGraph:
    """Immutable multigraph with per-operation cost factors.

    Mutating helpers return new graphs; instances should be treated as
    frozen once constructed.
    """

    def __init__(
        self,
        nodes: Iterable[Node],
        channels: Iterable[Channel],
        op_costs: OperationCosts | None = None,
    ) -> None:
        self._nodes: dict[str, Node] = {}
        for n in nodes:
            _check_id("node", n.id)
            if n.id in self._nodes:
                raise GraphFormatError(f"duplicate node id {n.id!r}")
            self._nodes[n.id] = n
        self._channels: dict[str, Channel] = {}
        self._incidence: dict[str, list[str]] = {nid: [] for nid in self._nodes}
        for c in channels:
            _check_id("channel", c.id)
            if c.id in self._channels:
                raise GraphFormatError(f"duplicate channel id {c.id!r}")
            if c.a not in self._nodes or c.b not in self._nodes:
                raise GraphFormatError(
                    f"channel {c.id!r} references unknown node"
                )
            if c.a == c.b:
                raise GraphFormatError(f"channel {c.id!r} is a self-loop")
            self._channels[c.id] = c
            self._incidence[c.a].append(c.id)
            self._incidence[c.b].append(c.id)
        for ids in self._incidence.values():
            ids.sort()
        self.op_costs = op_costs if op_costs is not None else OperationCosts()

    @property
    def nodes(self) -> dict[str, Node]:
        return dict(self._nodes)

    @property
    def channels(self) -> dict[str, Channel]:
        return dict(self._channels)

    def node(self, node_id: str) -> Node:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise GraphFormatError(f"unknown node {node_id!r}") from None

    def channel(self, channel_id: str) -> Channel:
        try:
            return self._channels[channel_id]
        except KeyError:
            raise GraphFormatError(f"unknown channel {channel_id!r}") from None

    def has_node(self, node_id: str) -> bool:
        return node_id in self._nodes

    def neighbors(self, node_id: str) -> list[tuple[str, str]]:
        """(channel id, far node id) pairs, sorted by channel id."""
        self.node(node_id)
        return [
            (cid, self._channels[cid].other(node_id))
            for cid in self._incidence[node_id]
        ]

    def degree(self, node_id: str) -> int:
        """Incident channel count; parallel channels each count."""
        self.node(node_id)
        return len(self._incidence[node_id])

    def incident(self, node_id: str) -> list[str]:
        self.node(node_id)
        return list(self._incidence[node_id])

    def rewired(
        self,
        drop_channels: Iterable[str] = (),
        add_channels: Iterable[Channel] = (),
        drop_nodes: Iterable[str] = (),
    ) -> "NetworkGraph":
        """New graph with the given channels/nodes removed and channels added."""
        dropped_c = set(drop_channels)
        dropped_n = set(drop_nodes)
        nodes = [n for nid, n in self._nodes.items() if nid not in dropped_n]
        chans = [c for cid, c in self._channels.items() if cid not in dropped_c]
        chans.extend(add_channels)
        return NetworkGraph(nodes, chans, self.op_costs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, NetworkGraph):
            return NotImplemented
        return (
            self._nodes == other._nodes
            and self._channels == other._channels
            and self.op_costs == other.op_costs
        )

    def __repr__(self) -> str:
        return (
            f"NetworkGraph({len(self._nodes)} nodes, "
            f"{len(self._channels)} channels)"
        )


def _require_keys(obj: dict, allowed: dict[str, bool], where: str) -> None:
    for key in obj:
        if key not in allowed:
            raise GraphFormatError(f"unknown field {key!r} in {where}")
    for key, required in allowed.items():
        if required and key not in obj:
            raise GraphFormatError(f"missing field {key!r} in {where}")


def _number(obj: dict, key: str, where: str) -> float:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise GraphFormatError(f"field {key!r} in {where} must be a number")
    return float(v)


def parse_graph(document: bytes | str) -> NetworkGraph:
    """Parse a version-1 graph document.

    User node and channel ids may not start with 'r' followed by a digit;
    that namespace is reserved for channels synthesized during reduction.
    """
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise GraphFormatError(f"document is not valid UTF-8: {exc}") from None
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"document is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise GraphFormatError("top-level document must be an object")
    _require_keys(
        doc,
        {"version": True, "op_costs": False, "nodes": True, "edges": True},
        "document",
    )
    if doc["version"] != 1:
        raise GraphFormatError(f"unsupported version {doc['version']!r}")

    ops = OperationCosts()
    if "op_costs" in doc:
        oc = doc["op_costs"]
        if not isinstance(oc, dict):
            raise GraphFormatError("op_costs must be an object")
        _require_keys(
            oc,
            {
                "swap_success": False,
                "purify_success": False,
                "physical_acceptance": False,
            },
            "op_costs",
        )
        acceptance = oc.get("physical_acceptance", True)
        if not isinstance(acceptance, bool):
            raise GraphFormatError("physical_acceptance must be a boolean")
        ops = OperationCosts(
            swap_success=_number(oc, "swap_success", "op_costs")
            if "swap_success" in oc
            else 1.0,
            purify_success=_number(oc, "purify_success", "op_costs")
            if "purify_success" in oc
            else 1.0,
            physical_acceptance=acceptance,
        )

    if not isinstance(doc["nodes"], list):
        raise GraphFormatError("nodes must be an array")
    nodes = []
    for i, entry in enumerate(doc["nodes"]):
        where = f"nodes[{i}]"
        if not isinstance(entry, dict):
            raise GraphFormatError(f"{where} must be an object")
        _require_keys(entry, {"id": True, "role": True}, where)
        nid = entry["id"]
        if not isinstance(nid, str):
            raise GraphFormatError(f"{where}: id must be a string")
        if _SYNTHETIC_RE.match(nid):
            raise GraphFormatError(
                f"{where}: id {nid!r} uses the reserved synthetic namespace "
                "('r' followed by a digit)"
            )
        try:
            role = NodeRole(entry["role"])
        except ValueError:
            raise GraphFormatError(
                f"{where}: role {entry['role']!r} must be 'endpoint' or 'router'"
            ) from None
        nodes.append(Node(nid, role))

    if not isinstance(doc["edges"], list):
        raise GraphFormatError("edges must be an array")
    channels = []
    for i, entry in enumerate(doc["edges"]):
        where = f"edges[{i}]"
        if not isinstance(entry, dict):
            raise GraphFormatError(f"{where} must be an object")
        _require_keys(
            entry,
            {"id": True, "a": True, "b": True, "fidelity": True, "success": True},
            where,
        )
        cid = entry["id"]
        if not isinstance(cid, str):
            raise GraphFormatError(f"{where}: id must be a string")
        if _SYNTHETIC_RE.match(cid):
            raise GraphFormatError(
                f"{where}: id {cid!r} uses the reserved synthetic namespace "
                "('r' followed by a digit)"
            )
        for end in ("a", "b"):
            if not isinstance(entry[end], str):
                raise GraphFormatError(f"{where}: {end} must be a string")
        try:
            cost = CostVector(
                _number(entry, "fidelity", where),
                _number(entry, "success", where),
            )
        except ValueError as exc:
            raise GraphFormatError(f"{where}: {exc}") from None
        channels.append(Channel(cid, entry["a"], entry["b"], cost))

    try:
        return NetworkGraph(nodes, channels, ops)
    except GraphFormatError:
        raise
    except ValueError as exc:
        raise GraphFormatError(str(exc)) from None


def graph_to_obj(g: NetworkGraph) -> dict:
    """Plain-data form of a graph (the version-1 document layout)."""
    return {
        "version": 1,
        "op_costs": {
            "swap_success": g.op_costs.swap_success,
            "purify_success": g.op_costs.purify_success,
            "physical_acceptance": g.op_costs.physical_acceptance,
        },
        "nodes": [
            {"id": n.id, "role": n.role.value}
            for n in sorted(g.nodes.values(), key=lambda n: n.id)
        ],
        "edges": [
            {
                "id": c.id,
                "a": c.a,
                "b": c.b,
                "fidelity": c.cost.fidelity,
                "success": c.cost.success,
            }
            for c in sorted(g.channels.values(), key=lambda c: c.id)
        ],
    }


def serialize_graph(g: NetworkGraph) -> bytes:
    """Canonical UTF-8 document; parse_graph(serialize_graph(g)) == g."""
    return canonical_dumps(graph_to_obj(g)).encode("utf-8")
