"""tracebus: data and decision traceability over a journaled message bus.

Messages published through the bus carry a traceability header (fresh id,
producer, timestamp, parent references to consumed messages and external
sources). The journal totally orders every publish; the provenance store
indexes it into a lineage DAG; the trace engine answers backward/forward
lineage queries and produces replay orderings; an HTTP service and CLI
expose it all.
"""

from .bus import MessageBus, Subscription, Topic
from .engine import (
    LineageSubgraph,
    ReplayPlan,
    export_dot,
    export_json,
    replay_order,
    trace,
    trace_back,
    trace_forward,
)
from .errors import TracebusError
from .journal import JournalRecord, JournalWriter, journal_replay, verify_journal
from .scenario import RunReport, ScenarioSpec, canonical_breakup_scenario, run
from .schema import (
    MessageEnvelope,
    MessageHeader,
    ParentRef,
    Producer,
    new_header,
    parse_header,
    serialize_header,
    validate_header,
)
from .service import ServiceConfig, TraceService
from .store import ProvenanceEdge, ProvenanceNode, ProvenanceStore, graphs_equal

__version__ = "0.1.0"

__all__ = [
    "MessageBus",
    "Subscription",
    "Topic",
    "LineageSubgraph",
    "ReplayPlan",
    "export_dot",
    "export_json",
    "replay_order",
    "trace",
    "trace_back",
    "trace_forward",
    "TracebusError",
    "JournalRecord",
    "JournalWriter",
    "journal_replay",
    "verify_journal",
    "RunReport",
    "ScenarioSpec",
    "canonical_breakup_scenario",
    "run",
    "MessageEnvelope",
    "MessageHeader",
    "ParentRef",
    "Producer",
    "new_header",
    "parse_header",
    "serialize_header",
    "validate_header",
    "ServiceConfig",
    "TraceService",
    "ProvenanceEdge",
    "ProvenanceNode",
    "ProvenanceStore",
    "graphs_equal",
    "__version__",
]
