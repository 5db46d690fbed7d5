"""Message and node identifier generation and validation.

Message ids are random 128-bit identifiers in canonical lowercase hyphenated
hex form (8-4-4-4-12). Producers are decentralized and must not coordinate,
so ids are drawn from randomness rather than a sequence; a collision within
one journal is treated as fatal at publish time.

External-source node ids are content-derived (source name plus canonicalized
parameter map), so identical citations from different messages converge on
one node.
"""

from __future__ import annotations

import hashlib
import json
import re
import uuid
from random import Random
from typing import Final, Mapping

MESSAGE_ID_PATTERN: Final[re.Pattern[str]] = re.compile(
    r"^[0-9a-f]{8}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{12}$"
)

EXTERNAL_ID_PREFIX: Final[str] = "ext:"
_EXTERNAL_DIGEST_CHARS: Final[int] = 12


def new_message_id(rng: Random | None = None) -> str:
    """Generate a fresh message id.

    Args:
        rng: optional seeded source of randomness. When given, ids are
            reproducible (used by the deterministic scenario driver); when
            omitted, ids come from the process entropy pool.
    """
    if rng is None:
        return str(uuid.uuid4())
    return str(uuid.UUID(int=rng.getrandbits(128), version=4))


def is_message_id(value: str) -> bool:
    """Return True iff *value* is a canonical 36-character message id."""
    return isinstance(value, str) and MESSAGE_ID_PATTERN.fullmatch(value) is not None


def external_node_id(source: str, parameters: Mapping[str, str] | None) -> str:
    """Derive the stable node id for an external data source citation.

    Two citations map to the same id iff source name and parameter map are
    equal; parameter ordering is irrelevant. The source name is kept in the
    id for readability, followed by a short digest of the canonical form.
    """
    canonical = json.dumps(
        {"source": source, "parameters": dict(sorted((parameters or {}).items()))},
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    digest = hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:_EXTERNAL_DIGEST_CHARS]
    return f"{EXTERNAL_ID_PREFIX}{source}:{digest}"


def is_external_node_id(value: str) -> bool:
    return isinstance(value, str) and value.startswith(EXTERNAL_ID_PREFIX)
