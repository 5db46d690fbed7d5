"""Lineage graph built from journaled message headers.

The journal is the durable source of truth; this store is a deterministic
in-memory index over it: one node per message, one node per distinct
external source citation (deduplicated by source name + parameter map), and
one edge per parent reference, directed child -> parent (the trace-back
direction). Forward traversal uses the inverted adjacency index.

Acyclicity holds constructively: every edge points from a later-sequenced
message to an earlier one or to an external source, because the bus refuses
to publish a message citing a not-yet-journaled parent. When a partial
journal is ingested (dangling parents allowed at the bus), unknown parents
become "unresolved" placeholder nodes flagged in the ingest delta.

One writer at a time; any number of concurrent readers, each observing a
consistent snapshot no older than the last completed ingest.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Iterator, Mapping

from .errors import OutOfOrderIngest, StoreError
from .ids import external_node_id
from .journal import JournalRecord
from .schema import EXTERNAL, INTERNAL, Producer

__all__ = [
    "MESSAGE",
    "EXTERNAL_SOURCE",
    "EXTERNAL_COLOR_KEY",
    "UNKNOWN_COLOR_KEY",
    "ProvenanceNode",
    "ProvenanceEdge",
    "IngestDelta",
    "ProvenanceStore",
    "graphs_equal",
]

MESSAGE = "message"
EXTERNAL_SOURCE = "external_source"

EXTERNAL_COLOR_KEY = "gray"
UNKNOWN_COLOR_KEY = "unknown"


@dataclass(frozen=True)
class ProvenanceNode:
    """One graph node: a bus message or an external data source.

    ``sequence`` is the journal sequence for message nodes (None otherwise);
    ``source`` is set for external-source nodes; ``unresolved`` marks a
    placeholder standing in for a cited-but-never-journaled message.
    """

    id: str
    category: str
    data_type: str
    producer: Producer | None = None
    timestamp: datetime | None = None
    subsystem_color_key: str = UNKNOWN_COLOR_KEY
    sequence: int | None = None
    source: str | None = None
    unresolved: bool = False


@dataclass(frozen=True)
class ProvenanceEdge:
    """child -> parent: the child consumed the parent's output of *data_type*."""

    child: str
    parent: str
    data_type: str


@dataclass(frozen=True)
class IngestDelta:
    """What one ingested record added to the graph."""

    nodes_added: tuple[ProvenanceNode, ...]
    edges_added: tuple[ProvenanceEdge, ...]
    unresolved: tuple[str, ...] = ()


_EMPTY_DELTA = IngestDelta(nodes_added=(), edges_added=())


class ProvenanceStore:
    """Append-only provenance DAG with adjacency indexes.

    Args:
        palette: subsystem name -> color key, for rendering hints; unknown
            subsystems map to "unknown", external sources are always "gray".
    """

    def __init__(self, palette: Mapping[str, str] | None = None) -> None:
        self._palette = dict(palette or {})
        self._lock = threading.RLock()
        self._nodes: dict[str, ProvenanceNode] = {}
        self._out: dict[str, tuple[ProvenanceEdge, ...]] = {}
        self._in: dict[str, list[ProvenanceEdge]] = {}
        # Deterministic discovery order: (journal sequence, position) where
        # the message itself is position 0 and its parents are 1..n.
        self._order: dict[str, tuple[int, int]] = {}
        self._messages: list[str] = []  # message ids in sequence order
        self._hwm = 0

    # -- ingestion ---------------------------------------------------------

    def ingest(self, record: JournalRecord) -> IngestDelta:
        """Apply one journal record; strictly ordered, idempotent on replays.

        Re-ingesting an already-seen sequence is a no-op returning an empty
        delta. A sequence beyond high-water mark + 1 raises OutOfOrderIngest.
        """
        with self._lock:
            if record.sequence <= self._hwm:
                return _EMPTY_DELTA
            if record.sequence != self._hwm + 1:
                raise OutOfOrderIngest(record.sequence, self._hwm)

            header = record.envelope.header
            mid = header.message_id
            nodes_added: list[ProvenanceNode] = []
            edges_added: list[ProvenanceEdge] = []
            unresolved: list[str] = []

            node = ProvenanceNode(
                id=mid,
                category=MESSAGE,
                data_type=header.data_type,
                producer=header.producer,
                timestamp=header.timestamp,
                subsystem_color_key=self._palette.get(
                    header.producer.subsystem, UNKNOWN_COLOR_KEY
                ),
                sequence=record.sequence,
            )
            existing = self._nodes.get(mid)
            if existing is not None and not existing.unresolved:
                raise StoreError(f"duplicate message id {mid} at sequence {record.sequence}")
            self._nodes[mid] = node
            self._order[mid] = (record.sequence, 0)
            self._messages.append(mid)
            nodes_added.append(node)

            out_edges: list[ProvenanceEdge] = []
            for pos, ref in enumerate(header.parents, start=1):
                if ref.kind == INTERNAL:
                    assert ref.message_id is not None
                    pid = ref.message_id
                    if pid not in self._nodes:
                        placeholder = ProvenanceNode(
                            id=pid,
                            category=MESSAGE,
                            data_type=ref.data_type,
                            unresolved=True,
                        )
                        self._nodes[pid] = placeholder
                        self._order[pid] = (record.sequence, pos)
                        nodes_added.append(placeholder)
                        unresolved.append(pid)
                elif ref.kind == EXTERNAL:
                    assert ref.source is not None
                    pid = external_node_id(ref.source, ref.parameters)
                    if pid not in self._nodes:
                        ext_node = ProvenanceNode(
                            id=pid,
                            category=EXTERNAL_SOURCE,
                            data_type=ref.data_type,
                            subsystem_color_key=EXTERNAL_COLOR_KEY,
                            source=ref.source,
                        )
                        self._nodes[pid] = ext_node
                        self._order[pid] = (record.sequence, pos)
                        nodes_added.append(ext_node)
                else:  # pragma: no cover - bus validation rejects these
                    raise StoreError(f"record {record.sequence} has parent of kind {ref.kind!r}")
                edge = ProvenanceEdge(child=mid, parent=pid, data_type=ref.data_type)
                out_edges.append(edge)
                self._in.setdefault(pid, []).append(edge)
                edges_added.append(edge)
            self._out[mid] = tuple(out_edges)

            self._hwm = record.sequence
            return IngestDelta(
                nodes_added=tuple(nodes_added),
                edges_added=tuple(edges_added),
                unresolved=tuple(unresolved),
            )

    @classmethod
    def rebuild(
        cls,
        records: Iterable[JournalRecord],
        palette: Mapping[str, str] | None = None,
    ) -> "ProvenanceStore":
        """Reconstruct the graph by ingesting each record in order."""
        store = cls(palette)
        for record in records:
            store.ingest(record)
        return store

    # -- lookups -------------------------------------------------------------

    @property
    def high_water_mark(self) -> int:
        with self._lock:
            return self._hwm

    def node(self, node_id: str) -> ProvenanceNode | None:
        with self._lock:
            return self._nodes.get(node_id)

    def __contains__(self, node_id: str) -> bool:
        return self.node(node_id) is not None

    def parents_of(self, node_id: str) -> list[ProvenanceNode]:
        """Parent nodes in header order; empty for external sources."""
        with self._lock:
            return [self._nodes[e.parent] for e in self._out.get(node_id, ())]

    def children_of(self, node_id: str) -> list[ProvenanceNode]:
        """Messages that cited this node, by sequence then parent position."""
        with self._lock:
            seen: set[str] = set()
            out: list[ProvenanceNode] = []
            for edge in self._in.get(node_id, ()):
                if edge.child not in seen:
                    seen.add(edge.child)
                    out.append(self._nodes[edge.child])
            return out

    def parent_edges(self, node_id: str) -> tuple[ProvenanceEdge, ...]:
        with self._lock:
            return self._out.get(node_id, ())

    def child_edges(self, node_id: str) -> tuple[ProvenanceEdge, ...]:
        with self._lock:
            return tuple(self._in.get(node_id, ()))

    def order_key(self, node_id: str) -> tuple[int, int]:
        """Deterministic discovery order (sequence, position) for tie-breaks."""
        with self._lock:
            return self._order[node_id]

    def node_set(self) -> frozenset[ProvenanceNode]:
        with self._lock:
            return frozenset(self._nodes.values())

    def edge_set(self) -> frozenset[ProvenanceEdge]:
        with self._lock:
            return frozenset(e for edges in self._out.values() for e in edges)

    def node_count(self) -> int:
        with self._lock:
            return len(self._nodes)

    def message_count(self) -> int:
        with self._lock:
            return len(self._messages)

    def iter_messages(
        self,
        *,
        after_seq: int = 0,
        data_type: str | None = None,
        producer: str | None = None,
    ) -> Iterator[ProvenanceNode]:
        """Message nodes in sequence order, optionally filtered.

        *producer* matches the producing algorithm name.
        """
        with self._lock:
            snapshot = list(self._messages[after_seq:])
            nodes = [self._nodes[mid] for mid in snapshot]
        for node in nodes:
            if data_type is not None and node.data_type != data_type:
                continue
            if producer is not None and (node.producer is None or node.producer.algorithm != producer):
                continue
            yield node


def graphs_equal(a: ProvenanceStore, b: ProvenanceStore) -> bool:
    """Node-set and edge-set equality."""
    return a.node_set() == b.node_set() and a.edge_set() == b.edge_set()
