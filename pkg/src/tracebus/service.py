"""Read-only HTTP service over the provenance store and trace engine.

The service owns a journal tailer (the store's single writer) and answers
queries from any number of concurrent request threads; no request ever
blocks on ingestion. It never publishes: producers own publication, the
service only observes the journal.

Endpoints (JSON bodies, versioned under /api/v1):

* ``GET /healthz`` — liveness; body ``{"sequence": N}`` (journal high-water mark).
* ``GET /api/v1/messages?data_type&producer&limit&after_seq`` — sequence-ordered
  page of message summaries with a ``next_after_seq`` cursor.
* ``GET /api/v1/trace/{id}?direction=backward|forward|both&max_depth=N|unlimited``
  — lineage subgraph in the engine's wire form; the journal high-water mark
  rides in the ``X-Journal-Sequence`` response header so the body stays
  byte-equal to the engine export.
* ``GET /api/v1/replay/{id}`` — ``{"focus": id, "plan": [message ids]}`` in
  dependency order over the full backward trace.

Error bodies are always ``{"error": code, "detail": text}``. When a static
asset directory is configured, anything outside /api and /healthz is served
from it (the explorer client bundle).
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any, Mapping
from urllib.parse import parse_qs, unquote, urlsplit

from . import engine
from .errors import DanglingParent, TracebusError, UnknownNode
from .ids import is_external_node_id, is_message_id
from .journal import decode_record
from .scenario import CANONICAL_PALETTE
from .schema import canonical_json, format_timestamp
from .store import ProvenanceStore

__all__ = ["ServiceConfig", "JournalTailer", "TraceService"]

log = logging.getLogger(__name__)

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "application/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json; charset=utf-8",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
    ".map": "application/json; charset=utf-8",
}


@dataclass
class ServiceConfig:
    """Service settings; CLI flags and TRACE_* environment variables mirror these."""

    journal_path: Path
    listen: str = "127.0.0.1:0"
    strict: bool = True
    allow_dangling_parents: bool = False
    default_max_depth: int = 10
    static_dir: Path | None = None
    poll_interval: float = 0.2
    palette: Mapping[str, str] = field(default_factory=lambda: dict(CANONICAL_PALETTE))

    def __post_init__(self) -> None:
        self.journal_path = Path(self.journal_path)
        if self.static_dir is not None:
            self.static_dir = Path(self.static_dir)
        if self.default_max_depth < 1:
            raise ValueError("default_max_depth must be >= 1")

    def host_port(self) -> tuple[str, int]:
        host, sep, port = self.listen.rpartition(":")
        if not sep or not port.isdigit():
            raise ValueError(f"listen address {self.listen!r} must be host:port")
        return host or "127.0.0.1", int(port)


class JournalTailer:
    """Incrementally ingests journal growth into a store.

    Tracks the byte offset of the last committed record it applied; a torn
    tail is left in place until more bytes arrive. ``poll_once`` is the whole
    mechanism, so tests can drive visibility deterministically without a
    clock.
    """

    def __init__(
        self,
        path: Path | str,
        store: ProvenanceStore,
        *,
        strict: bool = True,
        allow_dangling_parents: bool = False,
    ) -> None:
        self.path = Path(path)
        self.store = store
        self.strict = strict
        self.allow_dangling = allow_dangling_parents
        self._offset = 0

    def poll_once(self) -> int:
        """Ingest every newly committed record; returns how many were applied.

        Raises:
            CorruptJournal: an undecodable committed record.
            DanglingParent: unresolved parent and dangling parents disallowed.
        """
        if not self.path.exists():
            return 0
        data = self.path.read_bytes()
        if len(data) < self._offset:
            # Journal was truncated (torn-tail cleanup on writer restart);
            # re-reading is safe because ingest is idempotent per sequence.
            self._offset = 0
        applied = 0
        offset = self._offset
        while offset < len(data):
            end = data.find(b"\n", offset)
            if end < 0:
                break  # torn tail; wait for the commit marker
            record = decode_record(data[offset:end], strict=self.strict, offset=offset)
            delta = self.store.ingest(record)
            if delta.unresolved and not self.allow_dangling:
                raise DanglingParent(delta.unresolved[0], sequence=record.sequence)
            offset = end + 1
            applied += 1
        self._offset = offset
        return applied


class TraceService:
    """HTTP server wiring a store, tailer, and the trace engine together."""

    def __init__(self, config: ServiceConfig) -> None:
        self.config = config
        self.store = ProvenanceStore(config.palette)
        self.tailer = JournalTailer(
            config.journal_path,
            self.store,
            strict=config.strict,
            allow_dangling_parents=config.allow_dangling_parents,
        )
        self.tailer.poll_once()  # load what exists before serving
        self._httpd: ThreadingHTTPServer | None = None
        self._serve_thread: threading.Thread | None = None
        self._tail_thread: threading.Thread | None = None
        self._stop = threading.Event()

    # -- lifecycle ---------------------------------------------------------

    def start(self, *, tail: bool = True) -> None:
        """Bind and serve in background threads. ``tail=False`` leaves journal
        polling to the caller (used by tests for deterministic ingestion)."""
        host, port = self.config.host_port()
        handler = _make_handler(self)
        self._httpd = ThreadingHTTPServer((host, port), handler)
        self._serve_thread = threading.Thread(
            target=self._httpd.serve_forever, name="trace-service", daemon=True
        )
        self._serve_thread.start()
        if tail:
            self._tail_thread = threading.Thread(
                target=self._tail_loop, name="journal-tailer", daemon=True
            )
            self._tail_thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
            self._httpd = None
        if self._serve_thread is not None:
            self._serve_thread.join(timeout=5)
            self._serve_thread = None
        if self._tail_thread is not None:
            self._tail_thread.join(timeout=5)
            self._tail_thread = None

    @property
    def address(self) -> tuple[str, int]:
        if self._httpd is None:
            raise RuntimeError("service is not started")
        return self._httpd.server_address[0], self._httpd.server_address[1]

    def url(self, path: str) -> str:
        host, port = self.address
        return f"http://{host}:{port}{path}"

    def _tail_loop(self) -> None:
        while not self._stop.wait(self.config.poll_interval):
            try:
                self.tailer.poll_once()
            except TracebusError:
                log.exception("journal tailer halted; the graph is frozen at "
                              "sequence %d", self.store.high_water_mark)
                return

    def __enter__(self) -> "TraceService":
        return self

    def __exit__(self, *exc: object) -> None:
        self.stop()

    # -- request handling ----------------------------------------------------

    def handle_messages(self, params: Mapping[str, list[str]]) -> tuple[int, dict[str, Any]]:
        try:
            after_seq = int(params.get("after_seq", ["0"])[0])
            limit = int(params.get("limit", ["100"])[0])
        except ValueError:
            return 400, _error("bad_request", "after_seq and limit must be integers")
        if after_seq < 0:
            return 400, _error("bad_request", "after_seq must be >= 0")
        if not 1 <= limit <= 1000:
            return 400, _error("bad_request", "limit must be within 1..1000")
        data_type = params.get("data_type", [None])[0]
        producer = params.get("producer", [None])[0]

        summaries: list[dict[str, Any]] = []
        next_after: int | None = None
        for node in self.store.iter_messages(
            after_seq=after_seq, data_type=data_type, producer=producer
        ):
            if len(summaries) == limit:
                next_after = summaries[-1]["sequence"]
                break
            assert node.sequence is not None and node.producer is not None
            assert node.timestamp is not None
            summaries.append(
                {
                    "sequence": node.sequence,
                    "message_id": node.id,
                    "timestamp": format_timestamp(node.timestamp),
                    "data_type": node.data_type,
                    "producer": {
                        "algorithm": node.producer.algorithm,
                        "version": node.producer.version,
                        "subsystem": node.producer.subsystem,
                    },
                }
            )
        return 200, {"messages": summaries, "next_after_seq": next_after}

    def handle_trace(
        self, node_id: str, params: Mapping[str, list[str]]
    ) -> tuple[int, dict[str, Any] | str]:
        node_id = unquote(node_id)
        if not (is_message_id(node_id) or is_external_node_id(node_id)):
            return 400, _error("bad_request", f"malformed node id {node_id!r}")
        direction = params.get("direction", [engine.BACKWARD])[0]
        if direction not in (engine.BACKWARD, engine.FORWARD, engine.BOTH):
            return 400, _error("bad_request", f"bad direction {direction!r}")
        raw_depth = params.get("max_depth", [str(self.config.default_max_depth)])[0]
        if raw_depth == "unlimited":
            max_depth: int | None = None
        else:
            try:
                max_depth = int(raw_depth)
            except ValueError:
                return 400, _error("bad_request", "max_depth must be an integer or 'unlimited'")
            if max_depth < 0:
                return 400, _error("bad_request", "max_depth must be >= 0")
        try:
            subgraph = engine.trace(self.store, node_id, direction, max_depth)
        except UnknownNode as exc:
            return 404, _error("unknown_node", str(exc))
        return 200, engine.export_json(subgraph)

    def handle_replay(self, node_id: str) -> tuple[int, dict[str, Any]]:
        node_id = unquote(node_id)
        if not (is_message_id(node_id) or is_external_node_id(node_id)):
            return 400, _error("bad_request", f"malformed node id {node_id!r}")
        try:
            subgraph = engine.trace_back(self.store, node_id, None)
        except UnknownNode as exc:
            return 404, _error("unknown_node", str(exc))
        plan = engine.replay_order(subgraph)
        return 200, {"focus": node_id, "plan": list(plan.message_ids)}


def _error(code: str, detail: str) -> dict[str, str]:
    return {"error": code, "detail": detail}


def _make_handler(service: TraceService) -> type[BaseHTTPRequestHandler]:
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"
        server_version = "tracebus"

        def log_message(self, fmt: str, *args: Any) -> None:
            log.debug("%s %s", self.address_string(), fmt % args)

        def do_GET(self) -> None:  # noqa: N802 (BaseHTTPRequestHandler API)
            parts = urlsplit(self.path)
            params = parse_qs(parts.query)
            path = parts.path
            try:
                if path == "/healthz":
                    self._send(200, {"sequence": service.store.high_water_mark})
                elif path == "/api/v1/messages":
                    status, body = service.handle_messages(params)
                    self._send(status, body)
                elif path.startswith("/api/v1/trace/"):
                    node_id = path[len("/api/v1/trace/"):]
                    status, body = service.handle_trace(node_id, params)
                    self._send(status, body, extra={"X-Journal-Sequence": str(service.store.high_water_mark)})
                elif path.startswith("/api/v1/replay/"):
                    node_id = path[len("/api/v1/replay/"):]
                    status, body = service.handle_replay(node_id)
                    self._send(status, body)
                elif service.config.static_dir is not None and not path.startswith("/api"):
                    self._send_static(path)
                else:
                    self._send(404, _error("not_found", f"no route for {path}"))
            except Exception as exc:  # pragma: no cover - last-resort guard
                log.exception("request failed: %s", self.path)
                self._send(500, _error("internal", str(exc)))

        def _send(
            self,
            status: int,
            body: dict[str, Any] | str,
            *,
            extra: Mapping[str, str] | None = None,
        ) -> None:
            payload = body if isinstance(body, str) else canonical_json(body)
            raw = payload.encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(raw)))
            for key, value in (extra or {}).items():
                self.send_header(key, value)
            self.end_headers()
            self.wfile.write(raw)

        def _send_static(self, path: str) -> None:
            assert service.config.static_dir is not None
            root = service.config.static_dir.resolve()
            rel = unquote(path).lstrip("/") or "index.html"
            target = (root / rel).resolve()
            if not str(target).startswith(str(root)) or not target.is_file():
                self._send(404, _error("not_found", f"no asset {path}"))
                return
            raw = target.read_bytes()
            self.send_response(200)
            self.send_header(
                "Content-Type",
                _CONTENT_TYPES.get(target.suffix, "application/octet-stream"),
            )
            self.send_header("Content-Length", str(len(raw)))
            self.end_headers()
            self.wfile.write(raw)

    return Handler
