"""Traceability message envelope: types, validation, canonical serialization.

Every bus message carries a header that records what was produced (data type,
producer, timestamp, fresh message id) and what it was derived from (an
ordered list of parent references, each either an *internal* bus message or
an *external* data source). Parent links are the sole definition of causal
order; timestamps are producer-local UTC and advisory only.

The canonical serialized form is UTF-8 JSON text with a fixed key order::

    {"message_id": "...", "timestamp": "YYYY-MM-DDThh:mm:ss.sssZ",
     "producer": {"algorithm": "...", "version": "...", "subsystem": "..."},
     "data_type": "...",
     "traceability": {"internal_parents": [{"message_id": "...", "data_type": "..."}],
                      "external_parents": [{"source": "...", "data_type": "...",
                                            "parameters": {"k": "v"}}]}}

Because the serialized form groups parents into two arrays, headers store
their parents in that same canonical order (internal refs first, relative
order preserved within each group); this makes parse(serialize(h)) == h hold
field-for-field for every header.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from random import Random
from typing import Any, Callable, Final, Iterable, Mapping

from .errors import DuplicateParent, EmptyDataType, ParseError, ValidationError
from .ids import is_message_id, new_message_id

__all__ = [
    "INTERNAL",
    "EXTERNAL",
    "Producer",
    "ParentRef",
    "MessageHeader",
    "MessageEnvelope",
    "Clock",
    "utc_now",
    "new_header",
    "validate_header",
    "serialize_header",
    "parse_header",
    "header_to_dict",
    "header_from_dict",
    "format_timestamp",
    "parse_timestamp",
    "canonical_json",
]

INTERNAL: Final[str] = "internal"
EXTERNAL: Final[str] = "external"

TOPIC_PATTERN: Final[re.Pattern[str]] = re.compile(r"^[a-z0-9._-]+$")

_TIMESTAMP_PATTERN: Final[re.Pattern[str]] = re.compile(
    r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}\.\d{3}Z$"
)

Clock = Callable[[], datetime]


def utc_now() -> datetime:
    """Current UTC instant truncated to millisecond precision."""
    now = datetime.now(timezone.utc)
    return now.replace(microsecond=(now.microsecond // 1000) * 1000)


def canonical_json(obj: Any) -> str:
    """Render *obj* in the package's canonical JSON dialect.

    Insertion order of dict keys is preserved, so callers build dicts in the
    documented key order. Output is deterministic for deterministic input.
    """
    return json.dumps(obj, ensure_ascii=False)


@dataclass(frozen=True)
class Producer:
    """The algorithm that produced a message."""

    algorithm: str
    version: str
    subsystem: str


@dataclass(frozen=True)
class ParentRef:
    """One consumed input: an internal bus message or an external source.

    ``parameters`` carries supplementary information for external sources
    (API call parameters and the like) as a flat text-to-text map; it is
    normalized to an empty map when absent and must stay empty on internal
    refs.
    """

    kind: str
    data_type: str
    message_id: str | None = None
    source: str | None = None
    parameters: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "parameters", dict(self.parameters or {}))

    @classmethod
    def internal(cls, message_id: str, data_type: str) -> "ParentRef":
        return cls(kind=INTERNAL, data_type=data_type, message_id=message_id)

    @classmethod
    def external(
        cls,
        source: str,
        data_type: str,
        parameters: Mapping[str, str] | None = None,
    ) -> "ParentRef":
        return cls(kind=EXTERNAL, data_type=data_type, source=source, parameters=parameters or {})


@dataclass(frozen=True)
class MessageHeader:
    """Traceability metadata carried by every bus message.

    Parents are stored in canonical order: internal refs first, then external
    refs, each group keeping its given relative order (see module docstring
    for why).
    """

    message_id: str
    timestamp: datetime
    producer: Producer
    data_type: str
    parents: tuple[ParentRef, ...] = ()

    def __post_init__(self) -> None:
        ordered = [p for p in self.parents if p.kind == INTERNAL]
        ordered += [p for p in self.parents if p.kind != INTERNAL]
        object.__setattr__(self, "parents", tuple(ordered))

    @property
    def internal_parents(self) -> tuple[ParentRef, ...]:
        return tuple(p for p in self.parents if p.kind == INTERNAL)

    @property
    def external_parents(self) -> tuple[ParentRef, ...]:
        return tuple(p for p in self.parents if p.kind == EXTERNAL)


@dataclass(frozen=True)
class MessageEnvelope:
    """A header plus routing topic and opaque payload.

    The payload is content the framework transports but never interprets.
    """

    header: MessageHeader
    topic: str
    payload: bytes = b""

    def __post_init__(self) -> None:
        if not self.topic or TOPIC_PATTERN.fullmatch(self.topic) is None:
            raise ValueError(
                f"topic {self.topic!r} must be non-empty and contain only [a-z0-9._-]"
            )


def new_header(
    producer: Producer,
    data_type: str,
    parents: Iterable[ParentRef] = (),
    clock: Clock | None = None,
    *,
    id_source: Random | None = None,
) -> MessageHeader:
    """Build a header with a fresh message id and the clock's current instant.

    Args:
        producer: the producing algorithm.
        data_type: label of the produced data; must be non-empty.
        parents: references to the consumed inputs, if any.
        clock: time source; defaults to wall-clock UTC. The instant is
            truncated to millisecond precision.
        id_source: optional seeded randomness for reproducible ids.

    Raises:
        EmptyDataType: data_type is empty.
        DuplicateParent: two internal parents share a message id.
        ValidationError: any other invariant violation in the given fields.
    """
    if not data_type:
        raise EmptyDataType(["data_type: must be non-empty"])
    parent_tuple = tuple(parents)
    seen: set[str] = set()
    for i, ref in enumerate(parent_tuple):
        if ref.kind == INTERNAL and ref.message_id is not None:
            if ref.message_id in seen:
                raise DuplicateParent(
                    [f"parents[{i}].message_id: duplicate internal parent {ref.message_id}"]
                )
            seen.add(ref.message_id)
    instant = (clock or utc_now)()
    instant = instant.replace(microsecond=(instant.microsecond // 1000) * 1000)
    header = MessageHeader(
        message_id=new_message_id(id_source),
        timestamp=instant,
        producer=producer,
        data_type=data_type,
        parents=parent_tuple,
    )
    violations = validate_header(header)
    if violations:
        raise ValidationError(violations)
    return header


def validate_header(
    header: MessageHeader,
    *,
    known_subsystems: Iterable[str] | None = None,
) -> list[str]:
    """Check every header invariant; return all violations found.

    Returns an empty list iff the header is valid. Each violation string
    starts with the path of the offending field. When *known_subsystems* is
    given, the producer's subsystem must be one of them.
    """
    violations: list[str] = []

    if not is_message_id(header.message_id):
        violations.append(
            f"message_id: {header.message_id!r} is not a canonical 8-4-4-4-12 lowercase hex id"
        )

    ts = header.timestamp
    if not isinstance(ts, datetime) or ts.tzinfo is None or ts.utcoffset() != timedelta(0):
        violations.append("timestamp: must be a timezone-aware UTC instant")
    elif ts.microsecond % 1000 != 0:
        violations.append("timestamp: precision finer than one millisecond")

    if not header.producer.algorithm:
        violations.append("producer.algorithm: must be non-empty")
    if known_subsystems is not None and header.producer.subsystem not in set(known_subsystems):
        violations.append(
            f"producer.subsystem: {header.producer.subsystem!r} is not a registered subsystem"
        )

    if not header.data_type:
        violations.append("data_type: must be non-empty")

    seen_internal: set[str] = set()
    for i, ref in enumerate(header.parents):
        path = f"parents[{i}]"
        if ref.kind == INTERNAL:
            if ref.message_id is None:
                violations.append(f"{path}.message_id: internal parent missing message_id")
            elif not is_message_id(ref.message_id):
                violations.append(f"{path}.message_id: malformed message id {ref.message_id!r}")
            elif ref.message_id == header.message_id:
                violations.append(f"{path}.message_id: self-parent")
            elif ref.message_id in seen_internal:
                violations.append(
                    f"{path}.message_id: duplicate internal parent {ref.message_id}"
                )
            else:
                seen_internal.add(ref.message_id)
            if ref.source is not None:
                violations.append(f"{path}.source: internal parent must not carry a source")
            if ref.parameters:
                violations.append(f"{path}.parameters: internal parent must not carry parameters")
        elif ref.kind == EXTERNAL:
            if not ref.source:
                violations.append(f"{path}.source: external parent missing source")
            if ref.message_id is not None:
                violations.append(f"{path}.message_id: external parent must not carry a message_id")
        else:
            violations.append(f"{path}.kind: {ref.kind!r} is not internal or external")
        if not ref.data_type:
            violations.append(f"{path}.data_type: must be non-empty")

    return violations


# ---------------------------------------------------------------------------
# timestamps


def format_timestamp(ts: datetime) -> str:
    """Render a UTC instant as YYYY-MM-DDThh:mm:ss.sssZ."""
    ts = ts.astimezone(timezone.utc)
    return ts.strftime("%Y-%m-%dT%H:%M:%S.") + f"{ts.microsecond // 1000:03d}Z"


def parse_timestamp(text: str) -> datetime:
    """Parse the canonical millisecond timestamp form; raises ValueError otherwise."""
    if _TIMESTAMP_PATTERN.fullmatch(text) is None:
        raise ValueError(f"timestamp {text!r} does not match YYYY-MM-DDThh:mm:ss.sssZ")
    base = datetime.strptime(text[:19], "%Y-%m-%dT%H:%M:%S")
    millis = int(text[20:23])
    return base.replace(microsecond=millis * 1000, tzinfo=timezone.utc)


# ---------------------------------------------------------------------------
# canonical serialization


def header_to_dict(header: MessageHeader) -> dict[str, Any]:
    """Header as a plain dict in canonical key order (ready for JSON)."""
    internal = [
        {"message_id": p.message_id, "data_type": p.data_type}
        for p in header.internal_parents
    ]
    external = [
        {
            "source": p.source,
            "data_type": p.data_type,
            "parameters": dict(sorted(p.parameters.items())),
        }
        for p in header.external_parents
    ]
    return {
        "message_id": header.message_id,
        "timestamp": format_timestamp(header.timestamp),
        "producer": {
            "algorithm": header.producer.algorithm,
            "version": header.producer.version,
            "subsystem": header.producer.subsystem,
        },
        "data_type": header.data_type,
        "traceability": {"internal_parents": internal, "external_parents": external},
    }


def serialize_header(header: MessageHeader) -> bytes:
    """Serialize to the canonical UTF-8 form. Deterministic for equal headers."""
    return canonical_json(header_to_dict(header)).encode("utf-8")


_HEADER_KEYS: Final[frozenset[str]] = frozenset(
    {"message_id", "timestamp", "producer", "data_type", "traceability"}
)
_PRODUCER_KEYS: Final[frozenset[str]] = frozenset({"algorithm", "version", "subsystem"})
_TRACEABILITY_KEYS: Final[frozenset[str]] = frozenset({"internal_parents", "external_parents"})
_INTERNAL_REF_KEYS: Final[frozenset[str]] = frozenset({"message_id", "data_type"})
_EXTERNAL_REF_KEYS: Final[frozenset[str]] = frozenset({"source", "data_type", "parameters"})


def _require(obj: Mapping[str, Any], key: str, expected: type, path: str) -> Any:
    if key not in obj:
        raise ParseError("required field missing", field_path=_join(path, key))
    value = obj[key]
    if not isinstance(value, expected) or (expected is not bool and isinstance(value, bool)):
        raise ParseError(
            f"expected {expected.__name__}, got {type(value).__name__}",
            field_path=_join(path, key),
        )
    return value


def _reject_unknown(obj: Mapping[str, Any], allowed: frozenset[str], path: str, strict: bool) -> None:
    if not strict:
        return
    for key in obj:
        if key not in allowed:
            raise ParseError("unknown field", field_path=_join(path, key))


def _join(path: str, key: str) -> str:
    return key if path == "$" else f"{path}.{key}"


def header_from_dict(obj: Any, *, strict: bool = True, path: str = "$") -> MessageHeader:
    """Rebuild a header from parsed JSON structure.

    Args:
        obj: the decoded JSON value.
        strict: reject unknown keys (default); lenient mode ignores them.
        path: field-path prefix for error reporting (used when the header is
            embedded in a larger document, e.g. a journal record).

    Raises:
        ParseError: structural problems (missing/ill-typed/unknown fields).
        ValidationError: the structure parses but violates header invariants.
    """
    if not isinstance(obj, dict):
        raise ParseError(f"expected object, got {type(obj).__name__}", field_path=path)
    _reject_unknown(obj, _HEADER_KEYS, path, strict)

    message_id = _require(obj, "message_id", str, path)
    timestamp_text = _require(obj, "timestamp", str, path)
    try:
        timestamp = parse_timestamp(timestamp_text)
    except ValueError as exc:
        raise ParseError(str(exc), field_path=_join(path, "timestamp")) from exc

    producer_obj = _require(obj, "producer", dict, path)
    producer_path = _join(path, "producer")
    _reject_unknown(producer_obj, _PRODUCER_KEYS, producer_path, strict)
    producer = Producer(
        algorithm=_require(producer_obj, "algorithm", str, producer_path),
        version=_require(producer_obj, "version", str, producer_path),
        subsystem=_require(producer_obj, "subsystem", str, producer_path),
    )

    data_type = _require(obj, "data_type", str, path)

    trace_obj = _require(obj, "traceability", dict, path)
    trace_path = _join(path, "traceability")
    _reject_unknown(trace_obj, _TRACEABILITY_KEYS, trace_path, strict)
    internal_list = _require(trace_obj, "internal_parents", list, trace_path)
    external_list = _require(trace_obj, "external_parents", list, trace_path)

    parents: list[ParentRef] = []
    for i, item in enumerate(internal_list):
        ref_path = f"{trace_path}.internal_parents[{i}]"
        if not isinstance(item, dict):
            raise ParseError(f"expected object, got {type(item).__name__}", field_path=ref_path)
        _reject_unknown(item, _INTERNAL_REF_KEYS, ref_path, strict)
        parents.append(
            ParentRef.internal(
                message_id=_require(item, "message_id", str, ref_path),
                data_type=_require(item, "data_type", str, ref_path),
            )
        )
    for i, item in enumerate(external_list):
        ref_path = f"{trace_path}.external_parents[{i}]"
        if not isinstance(item, dict):
            raise ParseError(f"expected object, got {type(item).__name__}", field_path=ref_path)
        _reject_unknown(item, _EXTERNAL_REF_KEYS, ref_path, strict)
        parameters_obj = item.get("parameters", {})
        if not isinstance(parameters_obj, dict):
            raise ParseError(
                f"expected object, got {type(parameters_obj).__name__}",
                field_path=f"{ref_path}.parameters",
            )
        for k, v in parameters_obj.items():
            if not isinstance(v, str):
                raise ParseError(
                    f"expected str value, got {type(v).__name__}",
                    field_path=f"{ref_path}.parameters.{k}",
                )
        parents.append(
            ParentRef.external(
                source=_require(item, "source", str, ref_path),
                data_type=_require(item, "data_type", str, ref_path),
                parameters=parameters_obj,
            )
        )

    header = MessageHeader(
        message_id=message_id,
        timestamp=timestamp,
        producer=producer,
        data_type=data_type,
        parents=tuple(parents),
    )
    violations = validate_header(header)
    if violations:
        raise ValidationError(violations)
    return header


def parse_header(data: bytes | str, *, strict: bool = True) -> MessageHeader:
    """Parse the canonical serialized header form.

    Raises:
        ParseError: with byte offset and field path on malformed input.
        ValidationError: if the parsed structure violates header invariants.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError("invalid UTF-8", offset=exc.start) from exc
    else:
        text = data
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise ParseError(exc.msg, offset=offset) from exc
    return header_from_dict(obj, strict=strict)


def with_parents(header: MessageHeader, parents: Iterable[ParentRef]) -> MessageHeader:
    """Copy of *header* with a different parent list (test/tooling helper)."""
    return replace(header, parents=tuple(parents))
