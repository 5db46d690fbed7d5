"""In-process publish/subscribe broker backed by the append-only journal.

The bus is the single chokepoint where traceability data is captured: every
publish validates the header, checks that all cited internal parents are
already journaled (so parent references always resolve), assigns the next
sequence number, and appends to the journal before anything is delivered.

Delivery contract: every subscriber receives every matching record with
sequence >= its start cursor, in ascending sequence order, exactly once.
Lossless capture is the point, so there is no drop path: each subscriber has
a bounded live-delivery window (default 1024 undelivered records) and
publish blocks while a matching live subscriber's window is full.

Single-process by design; the HTTP service is the remote access path.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .errors import (
    DuplicateMessageId,
    InvalidCursor,
    InvalidHeader,
    UnknownParent,
    UnknownTopic,
)
from .journal import JournalRecord, JournalWriter, journal_replay
from .schema import MessageEnvelope, validate_header

__all__ = ["Topic", "MessageBus", "Subscription", "WILDCARD"]

WILDCARD = "*"


@dataclass(frozen=True)
class Topic:
    """A named channel bound to one data type."""

    name: str
    data_type: str


def _matches(topic_filter: str, topic: str) -> bool:
    return topic_filter == WILDCARD or topic_filter == topic


class Subscription:
    """A cursor over the journal, restricted to one topic filter.

    Consume with :meth:`next`; at most one thread may consume a given
    subscription at a time. Closing releases any publisher blocked on this
    subscriber's window.
    """

    def __init__(
        self, bus: "MessageBus", sub_id: int, topic_filter: str, start: int, buffer_size: int
    ) -> None:
        self._bus = bus
        self.id = sub_id
        self.topic_filter = topic_filter
        self.buffer_size = buffer_size
        self._next_seq = start
        self._live_from = 0  # sequences above this count toward the live window
        self._pending = 0
        self._closed = False
        self.last_delivered = start - 1

    def next(self, timeout: float | None = None) -> JournalRecord | None:
        """Next matching record, blocking up to *timeout* seconds.

        Returns None on timeout or once the subscription is closed.
        """
        bus = self._bus
        deadline = None if timeout is None else time.monotonic() + timeout
        with bus._cond:
            while True:
                if self._closed:
                    return None
                record = bus._scan_from(self._next_seq, self.topic_filter)
                if record is not None:
                    self._next_seq = record.sequence + 1
                    self.last_delivered = record.sequence
                    if record.sequence > self._live_from and self._pending > 0:
                        self._pending -= 1
                        bus._cond.notify_all()
                    return record
                if deadline is None:
                    bus._cond.wait()
                else:
                    remaining = deadline - time.monotonic()
                    if remaining <= 0 or not bus._cond.wait(remaining):
                        return None

    def drain(self) -> list[JournalRecord]:
        """All records available right now, without blocking."""
        out = []
        while True:
            record = self.next(timeout=0)
            if record is None:
                return out
            out.append(record)

    def close(self) -> None:
        with self._bus._cond:
            self._closed = True
            self._pending = 0
            self._bus._cond.notify_all()


class MessageBus:
    """Topic-routing broker with header enforcement and a durable journal.

    Args:
        journal_path: when given, every publish is appended to this file
            before delivery, and an existing journal is recovered on startup
            (sequence numbering continues where it left off).
        topic_registry: mapping topic name -> bound data type. When given,
            publishes to unregistered topics are rejected and the header's
            data_type must match the topic's binding. None disables the
            registry.
        known_subsystems: when given, producer subsystems must be members.
        allow_dangling_parents: accept records whose internal parents were
            never published (for ingesting partial real-world journals).
        buffer_size: per-subscriber live window; publish blocks while a
            matching subscriber has this many undelivered live records.
        fsync: force each journal append to disk.

    Threads may publish concurrently; sequence assignment is serialized.
    """

    def __init__(
        self,
        journal_path: Path | str | None = None,
        *,
        topic_registry: Mapping[str, str] | None = None,
        known_subsystems: Iterable[str] | None = None,
        allow_dangling_parents: bool = False,
        buffer_size: int = 1024,
        strict: bool = True,
        fsync: bool = False,
    ) -> None:
        self._cond = threading.Condition()
        self._records: list[JournalRecord] = []
        self._by_id: dict[str, int] = {}
        self._subs: list[Subscription] = []
        self._next_sub_id = 0
        self._topic_registry: dict[str, str] | None = (
            dict(topic_registry) if topic_registry is not None else None
        )
        self._known_subsystems = set(known_subsystems) if known_subsystems is not None else None
        self._allow_dangling = allow_dangling_parents
        self._buffer_size = buffer_size
        self._writer: JournalWriter | None = None
        if journal_path is not None:
            # Writer construction truncates any torn tail, so the replay
            # below only ever sees committed records.
            self._writer = JournalWriter(journal_path, fsync=fsync)
            for record in journal_replay(journal_path, strict=strict):
                self._records.append(record)
                self._by_id[record.envelope.header.message_id] = record.sequence

    # -- introspection ---------------------------------------------------

    @property
    def journal_path(self) -> Path | None:
        return self._writer.path if self._writer else None

    @property
    def newest_sequence(self) -> int:
        with self._cond:
            return len(self._records)

    def records(self) -> list[JournalRecord]:
        """Snapshot of the full journal."""
        with self._cond:
            return list(self._records)

    def sequence_of(self, message_id: str) -> int | None:
        with self._cond:
            return self._by_id.get(message_id)

    # -- topics ----------------------------------------------------------

    @property
    def registry_enabled(self) -> bool:
        return self._topic_registry is not None

    def register_topic(self, topic: Topic | None = None, *, name: str | None = None, data_type: str | None = None) -> None:
        """Register a topic binding. Only meaningful when the registry is enabled."""
        if topic is not None:
            name, data_type = topic.name, topic.data_type
        if name is None or data_type is None:
            raise ValueError("register_topic needs a Topic or name+data_type")
        if self._topic_registry is None:
            raise ValueError("topic registry is disabled on this bus")
        existing = self._topic_registry.get(name)
        if existing is not None and existing != data_type:
            raise ValueError(f"topic {name!r} already bound to data type {existing!r}")
        self._topic_registry[name] = data_type

    # -- publish/subscribe -------------------------------------------------

    def publish(self, envelope: MessageEnvelope) -> int:
        """Validate, journal, and route one envelope; returns its sequence.

        Raises:
            InvalidHeader: header validation violations (including a
                data_type/topic binding mismatch).
            UnknownTopic: registry enabled and topic unregistered.
            UnknownParent: an internal parent was never published.
            DuplicateMessageId: id collision with a journaled message.
        """
        header = envelope.header
        violations = validate_header(header, known_subsystems=self._known_subsystems)
        if self._topic_registry is not None:
            bound = self._topic_registry.get(envelope.topic)
            if bound is None:
                raise UnknownTopic(envelope.topic)
            if header.data_type != bound:
                violations.append(
                    f"data_type: {header.data_type!r} does not match topic "
                    f"{envelope.topic!r} binding {bound!r}"
                )
        if violations:
            raise InvalidHeader(violations)

        with self._cond:
            while any(
                not sub._closed
                and sub._pending >= sub.buffer_size
                and _matches(sub.topic_filter, envelope.topic)
                for sub in self._subs
            ):
                self._cond.wait()

            if header.message_id in self._by_id:
                raise DuplicateMessageId(header.message_id)
            if not self._allow_dangling:
                for ref in header.internal_parents:
                    if ref.message_id not in self._by_id:
                        raise UnknownParent(ref.message_id)

            sequence = len(self._records) + 1
            record = JournalRecord(sequence=sequence, envelope=envelope)
            if self._writer is not None:
                self._writer.append(record)
            self._records.append(record)
            self._by_id[header.message_id] = sequence
            for sub in self._subs:
                if (
                    not sub._closed
                    and sequence > sub._live_from
                    and _matches(sub.topic_filter, envelope.topic)
                ):
                    sub._pending += 1
            self._cond.notify_all()
            return sequence

    def subscribe(
        self,
        topic_filter: str = WILDCARD,
        from_seq: int | None = None,
        *,
        buffer_size: int | None = None,
    ) -> Subscription:
        """Open a subscription.

        Args:
            topic_filter: exact topic name or "*".
            from_seq: first sequence to deliver; None tails from the next
                publish onward.

        Raises:
            InvalidCursor: from_seq is below 1 or beyond newest + 1.
        """
        with self._cond:
            newest = len(self._records)
            start = newest + 1 if from_seq is None else from_seq
            if start < 1 or start > newest + 1:
                raise InvalidCursor(
                    f"cursor {start} out of range 1..{newest + 1}"
                )
            self._next_sub_id += 1
            sub = Subscription(
                self,
                self._next_sub_id,
                topic_filter,
                start,
                self._buffer_size if buffer_size is None else buffer_size,
            )
            sub._live_from = newest
            self._subs.append(sub)
            return sub

    def _scan_from(self, start_seq: int, topic_filter: str) -> JournalRecord | None:
        # Caller holds the lock. Records are indexed by sequence - 1.
        for idx in range(start_seq - 1, len(self._records)):
            record = self._records[idx]
            if _matches(topic_filter, record.envelope.topic):
                return record
        return None

    def close(self) -> None:
        with self._cond:
            for sub in self._subs:
                sub._closed = True
                sub._pending = 0
            self._cond.notify_all()
        if self._writer is not None:
            self._writer.close()

    def __enter__(self) -> "MessageBus":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()
