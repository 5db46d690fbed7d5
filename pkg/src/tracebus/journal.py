"""Append-only journal: the durable, totally ordered record of all publishes.

File format: UTF-8, one record per line, LF terminators::

    {"sequence": N, "topic": "...", "header": <canonical header>, "payload_b64": "..."}

The trailing LF is the commit marker. A final line without it is a torn tail
(a crash mid-append): it is never surfaced as a record — replay stops before
it with a warning, and a writer opening the file truncates it away. A
complete (LF-terminated) line that fails to decode is CorruptJournal.
"""

from __future__ import annotations

import base64
import binascii
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator

from .errors import CorruptJournal, SchemaError
from .schema import MessageEnvelope, canonical_json, header_from_dict, header_to_dict

__all__ = [
    "JournalRecord",
    "JournalWriter",
    "encode_record",
    "decode_record",
    "journal_replay",
    "journal_append",
    "scan_clean_length",
    "Violation",
    "VerifyReport",
    "verify_journal",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class JournalRecord:
    """One published envelope with its bus-assigned sequence number."""

    sequence: int
    envelope: MessageEnvelope


def encode_record(record: JournalRecord) -> bytes:
    """Encode one record as its canonical journal line (without the LF)."""
    obj = {
        "sequence": record.sequence,
        "topic": record.envelope.topic,
        "header": header_to_dict(record.envelope.header),
        "payload_b64": base64.b64encode(record.envelope.payload).decode("ascii"),
    }
    return canonical_json(obj).encode("utf-8")


def decode_record(line: bytes, *, strict: bool = True, offset: int = 0) -> JournalRecord:
    """Decode one journal line.

    Args:
        line: the record bytes, without the LF terminator.
        strict: passed through to header parsing (reject unknown keys).
        offset: byte offset of the line within its file, for error reporting.

    Raises:
        CorruptJournal: on any decoding failure, carrying *offset*.
    """
    try:
        obj = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptJournal(f"undecodable record: {exc}", offset=offset) from exc
    if not isinstance(obj, dict):
        raise CorruptJournal("record is not a JSON object", offset=offset)
    try:
        sequence = obj["sequence"]
        topic = obj["topic"]
        header_obj = obj["header"]
        payload_b64 = obj["payload_b64"]
    except KeyError as exc:
        raise CorruptJournal(f"record missing field {exc.args[0]!r}", offset=offset) from exc
    if not isinstance(sequence, int) or isinstance(sequence, bool) or sequence < 1:
        raise CorruptJournal(f"bad sequence {sequence!r}", offset=offset)
    if not isinstance(topic, str) or not isinstance(payload_b64, str):
        raise CorruptJournal("bad topic or payload_b64 field", offset=offset)
    try:
        header = header_from_dict(header_obj, strict=strict, path="header")
    except SchemaError as exc:
        raise CorruptJournal(f"bad header: {exc}", offset=offset) from exc
    try:
        payload = base64.b64decode(payload_b64.encode("ascii"), validate=True)
    except (binascii.Error, ValueError) as exc:
        raise CorruptJournal(f"bad payload_b64: {exc}", offset=offset) from exc
    try:
        envelope = MessageEnvelope(header=header, topic=topic, payload=payload)
    except ValueError as exc:
        raise CorruptJournal(str(exc), offset=offset) from exc
    return JournalRecord(sequence=sequence, envelope=envelope)


def scan_clean_length(path: Path | str) -> int:
    """Byte length of the journal's committed prefix (everything up to and
    including the last LF). Returns 0 for a missing or empty file."""
    path = Path(path)
    if not path.exists():
        return 0
    data = path.read_bytes()
    end = data.rfind(b"\n")
    return end + 1 if end >= 0 else 0


def journal_replay(
    path: Path | str,
    *,
    strict: bool = True,
    expect_contiguous: bool = True,
) -> Iterator[JournalRecord]:
    """Yield the journal's committed records in order.

    A torn tail (bytes after the final LF) is detected, logged as a warning,
    and never yielded. A missing file yields nothing.

    Args:
        strict: reject unknown header keys.
        expect_contiguous: verify sequences run 1..N gap-free (raise
            CorruptJournal otherwise). Disabled by the verify tooling, which
            reports instead of raising.

    Raises:
        CorruptJournal: undecodable committed record, or sequence gap.
    """
    path = Path(path)
    if not path.exists():
        return
    data = path.read_bytes()
    offset = 0
    expected = 1
    while offset < len(data):
        end = data.find(b"\n", offset)
        if end < 0:
            log.warning(
                "journal %s has a torn tail of %d bytes at offset %d; ignoring it",
                path,
                len(data) - offset,
                offset,
            )
            return
        record = decode_record(data[offset:end], strict=strict, offset=offset)
        if expect_contiguous and record.sequence != expected:
            raise CorruptJournal(
                f"sequence {record.sequence} where {expected} was expected",
                offset=offset,
            )
        expected += 1
        yield record
        offset = end + 1


def journal_append(path: Path | str, record: JournalRecord, *, fsync: bool = False) -> None:
    """Append one record to the journal at *path* (one-shot convenience).

    Long-lived producers should hold a :class:`JournalWriter` instead.
    """
    with JournalWriter(path, fsync=fsync) as writer:
        writer.append(record)


@dataclass(frozen=True)
class Violation:
    """One journal audit finding. ``sequence`` is None when the record's own
    sequence could not be established (undecodable line, torn tail)."""

    sequence: int | None
    code: str
    detail: str

    def to_dict(self) -> dict[str, Any]:
        return {"sequence": self.sequence, "code": self.code, "detail": self.detail}


@dataclass(frozen=True)
class VerifyReport:
    records: int
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict[str, Any]:
        return {
            "records": self.records,
            "violations": [v.to_dict() for v in self.violations],
        }


def verify_journal(path: Path | str, *, strict: bool = True) -> VerifyReport:
    """Audit a journal file: schema validity, sequence gaplessness, parent
    causality, id uniqueness, torn tail. Collects every finding instead of
    stopping at the first.

    Raises:
        OSError: the file cannot be read (missing counts as unreadable).
    """
    data = Path(path).read_bytes()
    violations: list[Violation] = []
    records: list[JournalRecord] = []
    offset = 0
    expected = 1
    while offset < len(data):
        end = data.find(b"\n", offset)
        if end < 0:
            violations.append(
                Violation(
                    sequence=None,
                    code="torn-tail",
                    detail=f"{len(data) - offset} uncommitted bytes at offset {offset}",
                )
            )
            break
        try:
            record = decode_record(data[offset:end], strict=strict, offset=offset)
        except CorruptJournal as exc:
            violations.append(Violation(sequence=None, code="bad-record", detail=str(exc)))
            offset = end + 1
            expected += 1
            continue
        if record.sequence != expected:
            violations.append(
                Violation(
                    sequence=record.sequence,
                    code="sequence-gap",
                    detail=f"sequence {record.sequence} where {expected} was expected",
                )
            )
            expected = record.sequence
        records.append(record)
        offset = end + 1
        expected += 1

    seq_of: dict[str, int] = {}
    for record in records:
        mid = record.envelope.header.message_id
        if mid in seq_of:
            violations.append(
                Violation(
                    sequence=record.sequence,
                    code="duplicate-message-id",
                    detail=f"message id {mid} already used at sequence {seq_of[mid]}",
                )
            )
        else:
            seq_of[mid] = record.sequence
    for record in records:
        for ref in record.envelope.header.internal_parents:
            assert ref.message_id is not None
            parent_seq = seq_of.get(ref.message_id)
            if parent_seq is None:
                violations.append(
                    Violation(
                        sequence=record.sequence,
                        code="unknown-parent",
                        detail=f"internal parent {ref.message_id} never published",
                    )
                )
            elif parent_seq >= record.sequence:
                violations.append(
                    Violation(
                        sequence=record.sequence,
                        code="parent-after-child",
                        detail=(
                            f"internal parent {ref.message_id} has sequence "
                            f"{parent_seq}, not before {record.sequence}"
                        ),
                    )
                )
    return VerifyReport(records=len(records), violations=tuple(violations))


class JournalWriter:
    """Appends records atomically at record granularity.

    Opening an existing file truncates any torn tail (with a warning) so that
    every append starts from a committed prefix. Each append writes the full
    line including its LF commit marker and flushes; pass ``fsync=True`` to
    also force the OS buffer to disk per record.
    """

    def __init__(self, path: Path | str, *, fsync: bool = False) -> None:
        self.path = Path(path)
        self._fsync = fsync
        self.path.parent.mkdir(parents=True, exist_ok=True)
        clean = scan_clean_length(self.path)
        if self.path.exists() and self.path.stat().st_size > clean:
            log.warning(
                "journal %s: truncating torn tail (%d committed bytes, %d on disk)",
                self.path,
                clean,
                self.path.stat().st_size,
            )
            with open(self.path, "r+b") as fh:
                fh.truncate(clean)
        self._fh = open(self.path, "ab")

    def append(self, record: JournalRecord) -> None:
        self._fh.write(encode_record(record) + b"\n")
        self._fh.flush()
        if self._fsync:
            os.fsync(self._fh.fileno())

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self) -> "JournalWriter":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()
