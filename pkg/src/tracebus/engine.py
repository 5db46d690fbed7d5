"""Lineage queries over the provenance graph.

Backward tracing follows child -> parent edges from a focus node to its
sources; forward tracing inverts that to answer impact questions. Results
are self-contained subgraphs: the induced node and edge sets, shortest-hop
depths from the focus, the roots (nodes with no parents inside the
subgraph), and a truncation marker on frontier nodes cut off by a depth
limit so a client can offer "expand".

All functions are pure reads over a store snapshot and deterministic:
identical inputs yield byte-identical DOT and JSON exports. Node order is
breadth-first (depth ascending), ties broken by journal discovery order.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable, Mapping

from .errors import CycleDetected, UnknownNode
from .schema import canonical_json
from .store import MESSAGE, ProvenanceEdge, ProvenanceNode, ProvenanceStore

__all__ = [
    "BACKWARD",
    "FORWARD",
    "BOTH",
    "LineageSubgraph",
    "ReplayPlan",
    "trace",
    "trace_back",
    "trace_forward",
    "replay_order",
    "export_dot",
    "export_json",
]

BACKWARD = "backward"
FORWARD = "forward"
BOTH = "both"


@dataclass(frozen=True)
class LineageSubgraph:
    """Result of a trace: everything reachable from *focus* in *direction*."""

    focus: str
    direction: str
    nodes: tuple[ProvenanceNode, ...]
    edges: tuple[ProvenanceEdge, ...]
    roots: tuple[str, ...]
    depth_of: Mapping[str, int]
    truncated: frozenset[str]

    def node_ids(self) -> set[str]:
        return {n.id for n in self.nodes}


@dataclass(frozen=True)
class ReplayPlan:
    """Message ids ordered so every message follows all its internal parents."""

    message_ids: tuple[str, ...]


def _bfs(
    store: ProvenanceStore,
    focus: str,
    max_depth: int | None,
    neighbors: Callable[[str], list[str]],
) -> dict[str, int]:
    depth = {focus: 0}
    frontier = [focus]
    level = 0
    while frontier and (max_depth is None or level < max_depth):
        next_frontier: list[str] = []
        for nid in sorted(frontier, key=store.order_key):
            for nb in neighbors(nid):
                if nb not in depth:
                    depth[nb] = level + 1
                    next_frontier.append(nb)
        frontier = next_frontier
        level += 1
    return depth


def _trace(store: ProvenanceStore, focus: str, direction: str, max_depth: int | None) -> LineageSubgraph:
    if store.node(focus) is None:
        raise UnknownNode(focus)

    def parents(nid: str) -> list[str]:
        return [e.parent for e in store.parent_edges(nid)]

    def children(nid: str) -> list[str]:
        seen: set[str] = set()
        out: list[str] = []
        for e in store.child_edges(nid):
            if e.child not in seen:
                seen.add(e.child)
                out.append(e.child)
        return out

    back_depth: dict[str, int] = {}
    fwd_depth: dict[str, int] = {}
    if direction in (BACKWARD, BOTH):
        back_depth = _bfs(store, focus, max_depth, parents)
    if direction in (FORWARD, BOTH):
        fwd_depth = _bfs(store, focus, max_depth, children)

    depth_of: dict[str, int] = dict(back_depth)
    for nid, d in fwd_depth.items():
        depth_of[nid] = min(d, depth_of.get(nid, d))
    included = set(depth_of)

    truncated: set[str] = set()
    if max_depth is not None:
        for nid, d in back_depth.items():
            if d == max_depth and any(p not in included for p in parents(nid)):
                truncated.add(nid)
        for nid, d in fwd_depth.items():
            if d == max_depth and any(c not in included for c in children(nid)):
                truncated.add(nid)

    ordered = sorted(included, key=lambda nid: (depth_of[nid], store.order_key(nid)))
    nodes = tuple(store.node(nid) for nid in ordered)  # type: ignore[misc]

    edges: list[ProvenanceEdge] = []
    children_with_edges: set[str] = set()
    for nid in ordered:
        for edge in store.parent_edges(nid):
            if edge.parent in included:
                edges.append(edge)
                children_with_edges.add(nid)

    roots = tuple(nid for nid in ordered if nid not in children_with_edges)
    return LineageSubgraph(
        focus=focus,
        direction=direction,
        nodes=nodes,
        edges=tuple(edges),
        roots=roots,
        depth_of=depth_of,
        truncated=frozenset(truncated),
    )


def trace_back(store: ProvenanceStore, focus: str, max_depth: int | None = None) -> LineageSubgraph:
    """Full ancestry of *focus* within *max_depth* hops (None = unlimited).

    Raises UnknownNode if the focus is not in the graph.
    """
    return _trace(store, focus, BACKWARD, max_depth)


def trace_forward(store: ProvenanceStore, focus: str, max_depth: int | None = None) -> LineageSubgraph:
    """Everything derived from *focus* within *max_depth* hops."""
    return _trace(store, focus, FORWARD, max_depth)


def trace(store: ProvenanceStore, focus: str, direction: str, max_depth: int | None = None) -> LineageSubgraph:
    """Trace in any direction ("backward", "forward", "both")."""
    if direction not in (BACKWARD, FORWARD, BOTH):
        raise ValueError(f"direction must be backward, forward, or both, not {direction!r}")
    return _trace(store, focus, direction, max_depth)


def replay_order(subgraph: LineageSubgraph) -> ReplayPlan:
    """Topological order of the subgraph's messages, parents before children.

    Kahn's algorithm; the ready set is drained in ascending journal sequence
    for a deterministic, explainable order.

    Raises CycleDetected for imported graphs that are not acyclic (store-built
    graphs cannot cycle).
    """
    messages = [n for n in subgraph.nodes if n.category == MESSAGE]
    ids = {n.id for n in messages}
    remaining_parents: dict[str, int] = {n.id: 0 for n in messages}
    dependents: dict[str, list[str]] = {n.id: [] for n in messages}
    for edge in subgraph.edges:
        if edge.child in ids and edge.parent in ids:
            remaining_parents[edge.child] += 1
            dependents[edge.parent].append(edge.child)

    seq_key = {
        n.id: (n.sequence if n.sequence is not None else 0, n.id) for n in messages
    }
    ready = [seq_key[nid] for nid, count in remaining_parents.items() if count == 0]
    heapq.heapify(ready)
    plan: list[str] = []
    while ready:
        _, nid = heapq.heappop(ready)
        plan.append(nid)
        for child in dependents[nid]:
            remaining_parents[child] -= 1
            if remaining_parents[child] == 0:
                heapq.heappush(ready, seq_key[child])
    if len(plan) != len(messages):
        raise CycleDetected(f"{len(messages) - len(plan)} messages are on a cycle")
    return ReplayPlan(message_ids=tuple(plan))


# ---------------------------------------------------------------------------
# exports

_DOT_BORDER = {
    "orange": "orange",
    "yellow": "goldenrod",
    "blue": "blue",
    "gray": "gray",
}


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def export_dot(subgraph: LineageSubgraph) -> str:
    """Graphviz DOT text; edges drawn parent -> child (data-flow direction).

    Messages render green, external sources gray; producer subsystem appears
    in the label and tints the border. Depth-truncated frontier nodes are
    dashed. Output is byte-identical for identical subgraphs.
    """
    lines = ["digraph lineage {", "  rankdir=LR;", "  node [style=filled];"]
    for node in subgraph.nodes:
        if node.category == MESSAGE:
            if node.unresolved:
                label = f"{node.data_type}\\n(unresolved)"
            else:
                assert node.producer is not None
                label = (
                    f"{node.data_type}\\n{node.producer.algorithm}"
                    f"\\n[{node.producer.subsystem}]"
                )
            fill = "palegreen"
            shape = "ellipse"
        else:
            label = f"{node.source}\\n{node.data_type}"
            fill = "lightgray"
            shape = "box"
        border = _DOT_BORDER.get(node.subsystem_color_key, "black")
        style = "filled,dashed" if node.id in subgraph.truncated else "filled"
        lines.append(
            f'  "{_dot_escape(node.id)}" [label="{_dot_escape(label)}", shape={shape}, '
            f'style="{style}", fillcolor={fill}, color={border}];'
        )
    for edge in subgraph.edges:
        lines.append(
            f'  "{_dot_escape(edge.parent)}" -> "{_dot_escape(edge.child)}" '
            f'[label="{_dot_escape(edge.data_type)}"];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def subgraph_to_dict(subgraph: LineageSubgraph) -> dict:
    """Wire-form dict (the JSON shape the explorer client consumes)."""
    nodes = []
    for node in subgraph.nodes:
        producer = None
        if node.producer is not None:
            producer = {
                "algorithm": node.producer.algorithm,
                "version": node.producer.version,
                "subsystem": node.producer.subsystem,
            }
        nodes.append(
            {
                "id": node.id,
                "kind": node.category,
                "data_type": node.data_type,
                "producer": producer,
                "subsystem_color_key": node.subsystem_color_key,
                "depth": subgraph.depth_of[node.id],
                "truncated": node.id in subgraph.truncated,
            }
        )
    edges = [
        {"child": e.child, "parent": e.parent, "data_type": e.data_type}
        for e in subgraph.edges
    ]
    return {
        "focus": subgraph.focus,
        "direction": subgraph.direction,
        "nodes": nodes,
        "edges": edges,
        "roots": list(subgraph.roots),
    }


def export_json(subgraph: LineageSubgraph) -> str:
    """Canonical JSON wire form, deterministic for identical subgraphs."""
    return canonical_json(subgraph_to_dict(subgraph))
