"""Shared test machinery: seeded generators and independent oracles.

The oracles here deliberately avoid the library's own traversal/index code:
reachability is computed over adjacency bitmask matrices, adjacency is
recovered by brute-force scans of raw headers, and graph isomorphism uses
recursive canonical labeling. Expected values asserted in the test modules
come from these, not from the code under test.
"""

from __future__ import annotations

import json
from datetime import datetime, timedelta, timezone
from random import Random

from tracebus.bus import MessageBus
from tracebus.ids import new_message_id
from tracebus.journal import JournalRecord
from tracebus.scenario import ExternalSourceSpec, InputSpec, ProcessSpec, ScenarioSpec
from tracebus.schema import (
    MessageEnvelope,
    MessageHeader,
    ParentRef,
    Producer,
    new_header,
)
from tracebus.store import ProvenanceStore

# ---------------------------------------------------------------------------
# random valid headers

_ALGORITHMS = ["OrbitFit", "Screening-β", "UCTCorrelator", "sensor-tasking", "Fusion Core"]
_SUBSYSTEMS = ["sensing", "processing", "decision", "ops"]
_DATA_TYPES = ["tracks", "observations", "state_vector", "alert.level-2", "calib_batch"]
_SOURCES = ["observations-api", "catalog-service", "weather/feed", "bulk-archive"]


def random_timestamp(rng: Random) -> datetime:
    base = datetime(2024, 1, 1, tzinfo=timezone.utc)
    return base + timedelta(seconds=rng.randint(0, 10**8), milliseconds=rng.randint(0, 999))


def random_parent(rng: Random, internal_ratio: float = 0.6) -> ParentRef:
    if rng.random() < internal_ratio:
        return ParentRef.internal(new_message_id(rng), rng.choice(_DATA_TYPES))
    parameters = {
        f"k{j}": f"v{rng.randint(0, 99)}" for j in range(rng.randint(0, 3))
    }
    return ParentRef.external(rng.choice(_SOURCES), rng.choice(_DATA_TYPES), parameters)


def random_valid_header(rng: Random) -> MessageHeader:
    parents = tuple(random_parent(rng) for _ in range(rng.randint(0, 4)))
    producer = Producer(
        algorithm=rng.choice(_ALGORITHMS),
        version=f"{rng.randint(0, 3)}.{rng.randint(0, 9)}.{rng.randint(0, 20)}",
        subsystem=rng.choice(_SUBSYSTEMS),
    )
    return MessageHeader(
        message_id=new_message_id(rng),
        timestamp=random_timestamp(rng),
        producer=producer,
        data_type=rng.choice(_DATA_TYPES),
        parents=parents,
    )


# ---------------------------------------------------------------------------
# random DAG construction through the bus

_EXT_POOL = [
    ("src-a", {"q": "1"}),
    ("src-a", {"q": "2"}),
    ("src-b", {}),
]


def random_dag_bus(
    rng: Random,
    *,
    max_nodes: int = 50,
    external_ratio: float = 0.3,
    journal_path=None,
) -> tuple[MessageBus, list[str]]:
    """Publish a random message DAG; returns the bus and message ids in order."""
    n = rng.randint(1, max_nodes)
    bus = MessageBus(journal_path)
    published: list[tuple[str, str]] = []
    for i in range(n):
        k = rng.randint(0, min(3, len(published)))
        picks = rng.sample(range(len(published)), k) if k else []
        parents = [ParentRef.internal(published[j][0], published[j][1]) for j in sorted(picks)]
        if rng.random() < external_ratio:
            source, params = _EXT_POOL[rng.randrange(len(_EXT_POOL))]
            parents.append(ParentRef.external(source, "ext_data", params))
        data_type = f"dt-{i % 7}"
        header = new_header(
            Producer(f"proc-{i % 5}", "1.0.0", rng.choice(_SUBSYSTEMS)),
            data_type,
            parents,
            clock=lambda: datetime(2024, 6, 1, tzinfo=timezone.utc),
            id_source=rng,
        )
        bus.publish(MessageEnvelope(header=header, topic=data_type, payload=b"x"))
        published.append((header.message_id, data_type))
    return bus, [mid for mid, _ in published]


def store_from_bus(bus: MessageBus, palette=None) -> ProvenanceStore:
    return ProvenanceStore.rebuild(bus.records(), palette)


# ---------------------------------------------------------------------------
# reachability oracle (adjacency-matrix closure, no BFS)


def adjacency_index(records: list[JournalRecord]) -> tuple[dict[str, int], list[int]]:
    """Node index and child->parent adjacency rows as bitmasks.

    Covers message nodes and external-source nodes (externals indexed by
    their derived node id).
    """
    from tracebus.ids import external_node_id

    index: dict[str, int] = {}

    def idx(node_id: str) -> int:
        if node_id not in index:
            index[node_id] = len(index)
        return index[node_id]

    rows: list[int] = []

    def ensure(i: int) -> None:
        while len(rows) <= i:
            rows.append(0)

    for record in records:
        header = record.envelope.header
        child = idx(header.message_id)
        ensure(child)
        for ref in header.parents:
            if ref.kind == "internal":
                parent = idx(ref.message_id)
            else:
                parent = idx(external_node_id(ref.source, ref.parameters))
            ensure(parent)
            rows[child] |= 1 << parent
    return index, rows


def warshall_closure(rows: list[int]) -> list[int]:
    """Reflexive-transitive closure of the adjacency rows (Warshall)."""
    n = len(rows)
    reach = [rows[i] | (1 << i) for i in range(n)]
    for k in range(n):
        bit = 1 << k
        for i in range(n):
            if reach[i] & bit:
                reach[i] |= reach[k]
    return reach


def transpose(rows: list[int]) -> list[int]:
    n = len(rows)
    out = [0] * n
    for i in range(n):
        row = rows[i]
        while row:
            low = row & -row
            j = low.bit_length() - 1
            out[j] |= 1 << i
            row ^= low
    return out


def bounded_hops(rows: list[int], start: int, hops: int) -> int:
    """Bitmask of nodes within *hops* steps of *start* (matrix-power frontier)."""
    seen = 1 << start
    frontier = seen
    for _ in range(hops):
        nxt = 0
        row = frontier
        while row:
            low = row & -row
            nxt |= rows[low.bit_length() - 1]
            row ^= low
        frontier = nxt & ~seen
        if not frontier:
            break
        seen |= frontier
    return seen


def bits_to_ids(mask: int, index: dict[str, int]) -> set[str]:
    by_idx = {i: node_id for node_id, i in index.items()}
    out = set()
    while mask:
        low = mask & -mask
        out.add(by_idx[low.bit_length() - 1])
        mask ^= low
    return out


# ---------------------------------------------------------------------------
# brute-force adjacency oracle over raw headers


def brute_force_parents(records: list[JournalRecord], node_id: str) -> list[str]:
    from tracebus.ids import external_node_id

    for record in records:
        header = record.envelope.header
        if header.message_id != node_id:
            continue
        out = []
        for ref in header.parents:
            if ref.kind == "internal":
                out.append(ref.message_id)
            else:
                out.append(external_node_id(ref.source, ref.parameters))
        return out
    return []


def brute_force_children(records: list[JournalRecord], node_id: str) -> list[str]:
    from tracebus.ids import external_node_id

    out = []
    for record in records:
        header = record.envelope.header
        for ref in header.parents:
            if ref.kind == "internal":
                pid = ref.message_id
            else:
                pid = external_node_id(ref.source, ref.parameters)
            if pid == node_id and header.message_id not in out:
                out.append(header.message_id)
    return out


# ---------------------------------------------------------------------------
# graph isomorphism by canonical labeling (near-tree DAGs)


def canonical_label(store: ProvenanceStore, node_id: str, memo: dict[str, tuple]) -> tuple:
    if node_id in memo:
        return memo[node_id]
    node = store.node(node_id)
    assert node is not None
    parent_labels = tuple(
        sorted(
            (edge.data_type, canonical_label(store, edge.parent, memo))
            for edge in store.parent_edges(node_id)
        )
    )
    label = (
        node.category,
        node.data_type,
        node.producer.algorithm if node.producer else None,
        node.producer.subsystem if node.producer else None,
        node.source,
        parent_labels,
    )
    memo[node_id] = label
    return label


def graph_signature(store: ProvenanceStore) -> list[tuple]:
    memo: dict[str, tuple] = {}
    return sorted(canonical_label(store, node.id, memo) for node in store.node_set())


def isomorphic(a: ProvenanceStore, b: ProvenanceStore) -> bool:
    return (
        a.node_count() == b.node_count()
        and len(a.edge_set()) == len(b.edge_set())
        and graph_signature(a) == graph_signature(b)
    )


# ---------------------------------------------------------------------------
# minimal reference parser for the subgraph wire form


def parse_wire_subgraph(text: str) -> tuple[set[tuple], set[tuple]]:
    """Node and edge multikey sets recovered from exported JSON, independently
    of the engine's own structures."""
    obj = json.loads(text)
    nodes = set()
    for n in obj["nodes"]:
        producer = n["producer"]
        nodes.add(
            (
                n["id"],
                n["kind"],
                n["data_type"],
                None if producer is None else (
                    producer["algorithm"], producer["version"], producer["subsystem"]
                ),
                n["subsystem_color_key"],
                n["depth"],
                n["truncated"],
            )
        )
    edges = {(e["child"], e["parent"], e["data_type"]) for e in obj["edges"]}
    return nodes, edges


# ---------------------------------------------------------------------------
# random scenario specs with a statically predicted message count


def predicted_message_count(spec: ScenarioSpec) -> int:
    """Exact message count for generator-shaped specs (processes declared in
    topological order, every data type produced by exactly one process)."""
    produced_count: dict[str, int] = {}
    total = 0
    for proc in spec.processes:
        internal = [inp.data_type for inp in proc.consumes if inp.kind == "internal"]
        if internal:
            activations = min(produced_count[dt] for dt in internal)
        else:
            activations = 1
        emitted = activations * proc.fan_out
        for dt in proc.produces:
            produced_count[dt] = produced_count.get(dt, 0) + emitted
        total += emitted * len(proc.produces)
    return total


def random_scenario(rng: Random, *, max_messages: int = 200) -> ScenarioSpec:
    """A layered pipeline spec whose run publishes at most *max_messages*."""
    for attempt in range(50):
        externals = [
            ExternalSourceSpec(f"feed-{i}", f"feed_data_{i}", {"slot": str(i)})
            for i in range(rng.randint(0, 2))
        ]
        processes: list[ProcessSpec] = []
        available: list[str] = []
        next_type = 0

        def fresh_types(count: int) -> list[str]:
            nonlocal next_type
            out = [f"t{next_type + i}" for i in range(count)]
            next_type += count
            return out

        roots = rng.randint(1, 2)
        for r in range(roots):
            produces = fresh_types(rng.randint(1, 2))
            processes.append(
                ProcessSpec(
                    algorithm=f"Root{r}",
                    subsystem=rng.choice(_SUBSYSTEMS),
                    produces=tuple(produces),
                    fan_out=rng.randint(1, 2),
                )
            )
            available.extend(produces)
        body = rng.randint(1, 7)
        for p in range(body):
            consumes = [
                InputSpec.internal(dt)
                for dt in rng.sample(available, rng.randint(1, min(2, len(available))))
            ]
            if externals and rng.random() < 0.4:
                consumes.append(InputSpec.external(rng.choice(externals).source))
            produces = fresh_types(rng.randint(1, 2))
            processes.append(
                ProcessSpec(
                    algorithm=f"Stage{p}",
                    subsystem=rng.choice(_SUBSYSTEMS),
                    consumes=tuple(consumes),
                    produces=tuple(produces),
                    fan_out=rng.randint(1, 2),
                    goal=(p == body - 1),
                )
            )
            available.extend(produces)
        spec = ScenarioSpec(
            name=f"random-{rng.randint(0, 10**6)}",
            seed=rng.randint(0, 2**32),
            processes=tuple(processes),
            external_sources=tuple(externals),
            subsystem_palette={"sensing": "orange", "processing": "yellow", "decision": "blue"},
        )
        if predicted_message_count(spec) <= max_messages:
            return spec
    raise AssertionError("could not generate a small enough scenario in 50 attempts")
