"""Exception hierarchy shared across the package.

Every failure raised by tracebus derives from :class:`TracebusError`, grouped
by the layer that raises it. Validation failures that are *reported* rather
than raised (``validate_header``) are plain value objects, not exceptions.
"""

from __future__ import annotations


class TracebusError(Exception):
    """Base class for all tracebus failures."""


# ---------------------------------------------------------------------------
# message schema


class SchemaError(TracebusError):
    """Base class for header schema failures."""


class ValidationError(SchemaError):
    """A header violates its invariants.

    Carries the full list of violation strings, each naming the offending
    field path.
    """

    def __init__(self, violations: list[str]) -> None:
        super().__init__("; ".join(violations))
        self.violations = list(violations)


class DuplicateParent(ValidationError):
    """Two internal parents in one header share a message id."""


class EmptyDataType(ValidationError):
    """A header was constructed with an empty data_type."""


class ParseError(SchemaError):
    """Serialized header (or journal record) text could not be parsed.

    ``offset`` is the byte offset of the failure when the underlying JSON
    decoder can localize it, otherwise 0; ``field_path`` names the field that
    failed structurally (``$`` for the document root).
    """

    def __init__(self, message: str, *, offset: int = 0, field_path: str = "$") -> None:
        super().__init__(f"{field_path}: {message} (byte offset {offset})")
        self.offset = offset
        self.field_path = field_path


# ---------------------------------------------------------------------------
# journal


class JournalError(TracebusError):
    """Base class for journal file failures."""


class CorruptJournal(JournalError):
    """A committed (newline-terminated) journal record failed to decode."""

    def __init__(self, message: str, *, offset: int) -> None:
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


# ---------------------------------------------------------------------------
# bus


class BusError(TracebusError):
    """Base class for publish/subscribe failures."""


class InvalidHeader(BusError):
    """Publish rejected: the envelope header failed validation."""

    def __init__(self, violations: list[str]) -> None:
        super().__init__("; ".join(violations))
        self.violations = list(violations)


class UnknownParent(BusError):
    """Publish rejected: an internal parent was never published."""

    def __init__(self, message_id: str) -> None:
        super().__init__(f"internal parent {message_id} was never published")
        self.message_id = message_id


class UnknownTopic(BusError):
    """Publish rejected: topic registry is enabled and the topic is unregistered."""

    def __init__(self, topic: str) -> None:
        super().__init__(f"topic {topic!r} is not registered")
        self.topic = topic


class DuplicateMessageId(BusError):
    """Publish rejected: message id already exists in the journal (ID collision is fatal)."""

    def __init__(self, message_id: str) -> None:
        super().__init__(f"message id {message_id} already published")
        self.message_id = message_id


class InvalidCursor(BusError):
    """Subscribe rejected: start cursor exceeds newest sequence + 1."""


# ---------------------------------------------------------------------------
# provenance store


class StoreError(TracebusError):
    """Base class for provenance store failures."""


class OutOfOrderIngest(StoreError):
    """Ingest rejected: record sequence leaves a gap after the high-water mark."""

    def __init__(self, sequence: int, high_water_mark: int) -> None:
        super().__init__(
            f"record sequence {sequence} does not follow high-water mark {high_water_mark}"
        )
        self.sequence = sequence
        self.high_water_mark = high_water_mark


class DanglingParent(StoreError):
    """A record cites an internal parent that is absent from the graph.

    The store itself records unresolved placeholders instead of raising; this
    is raised by consumers (the service's journal tailer) that require fully
    resolved parentage.
    """

    def __init__(self, message_id: str, *, sequence: int) -> None:
        super().__init__(
            f"record {sequence} cites unknown internal parent {message_id}"
        )
        self.message_id = message_id
        self.sequence = sequence


# ---------------------------------------------------------------------------
# trace engine


class EngineError(TracebusError):
    """Base class for trace query failures."""


class UnknownNode(EngineError):
    """Trace rejected: focus node is not in the graph."""

    def __init__(self, node_id: str) -> None:
        super().__init__(f"unknown node {node_id}")
        self.node_id = node_id


class CycleDetected(EngineError):
    """Topological ordering failed; the (imported) graph contains a cycle."""


# ---------------------------------------------------------------------------
# scenario simulator


class ScenarioError(TracebusError):
    """A scenario specification is malformed."""


class SpecUnsatisfiable(ScenarioError):
    """A scenario process can never activate with the declared inputs."""
