"""Deterministic scenario driver: scripted pipelines over the bus.

A scenario declares external data sources and a set of processes, each with
the data types it consumes (from bus topics or external sources) and the
data types it produces. The driver fires a process whenever every consumed
input is available, publishing one message per produced type per activation
(times the fan-out count) whose parent references cite exactly the consumed
inputs. Topic names equal data type names.

Runs are fully deterministic given the scenario seed: message ids come from
a seeded generator, timestamps from a logical millisecond clock, payloads
from seeded bytes — so same-seed runs yield byte-identical journals. A
concurrent driver mode exists for exercising the bus under parallelism; it
preserves graph shape for single-producer pipelines but not journal bytes.

The built-in scenario models an object-discovery investigation after a
satellite breakup: a task request fans out through breakup screening, sensor
tasking, track processing, and orbit determination to a final
new-object-discovered goal message.
"""

from __future__ import annotations

import json
import threading
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from random import Random
from typing import Any, Final, Mapping

from .bus import MessageBus
from .errors import ScenarioError, SpecUnsatisfiable
from .schema import (
    EXTERNAL,
    INTERNAL,
    MessageEnvelope,
    ParentRef,
    Producer,
    TOPIC_PATTERN,
    canonical_json,
    new_header,
)

__all__ = [
    "InputSpec",
    "ExternalSourceSpec",
    "ProcessSpec",
    "ScenarioSpec",
    "RunReport",
    "SimClock",
    "CANONICAL_PALETTE",
    "canonical_breakup_scenario",
    "validate_scenario",
    "run",
    "scenario_to_dict",
    "scenario_from_dict",
    "load_scenario",
    "save_scenario",
]

CANONICAL_PALETTE: Final[dict[str, str]] = {
    "sensing": "orange",
    "processing": "yellow",
    "decision": "blue",
}

_SIM_EPOCH = datetime(2025, 3, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class InputSpec:
    """One declared input: an internal topic or a named external source."""

    kind: str
    data_type: str | None = None
    source: str | None = None

    @classmethod
    def internal(cls, data_type: str) -> "InputSpec":
        return cls(kind=INTERNAL, data_type=data_type)

    @classmethod
    def external(cls, source: str) -> "InputSpec":
        return cls(kind=EXTERNAL, source=source)


@dataclass(frozen=True)
class ExternalSourceSpec:
    """A data source outside the bus boundary, cited by parent references."""

    source: str
    data_type: str
    parameters: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "parameters", dict(self.parameters or {}))


@dataclass(frozen=True)
class ProcessSpec:
    """One simulated algorithm.

    Fires when every consumed input is available; each activation publishes
    ``fan_out`` messages per produced data type, citing exactly the consumed
    inputs. ``goal`` marks terminal outcome processes whose outputs the run
    report surfaces.
    """

    algorithm: str
    subsystem: str
    consumes: tuple[InputSpec, ...] = ()
    produces: tuple[str, ...] = ()
    fan_out: int = 1
    version: str = "1.0.0"
    goal: bool = False


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    seed: int
    processes: tuple[ProcessSpec, ...]
    external_sources: tuple[ExternalSourceSpec, ...] = ()
    subsystem_palette: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "subsystem_palette", dict(self.subsystem_palette or {}))


@dataclass(frozen=True)
class RunReport:
    """Outcome of one scenario run."""

    message_count: int
    goal_message_ids: tuple[str, ...]
    journal_path: str | None

    def to_dict(self) -> dict[str, Any]:
        return {
            "message_count": self.message_count,
            "goal_message_ids": list(self.goal_message_ids),
            "journal_path": self.journal_path,
        }


class SimClock:
    """Logical UTC clock advancing one millisecond per reading."""

    def __init__(self, epoch: datetime = _SIM_EPOCH, step_ms: int = 1) -> None:
        self._epoch = epoch
        self._step_ms = step_ms
        self._ticks = 0
        self._lock = threading.Lock()

    def __call__(self) -> datetime:
        with self._lock:
            instant = self._epoch + timedelta(milliseconds=self._ticks * self._step_ms)
            self._ticks += 1
            return instant


def canonical_breakup_scenario(seed: int = 42) -> ScenarioSpec:
    """The built-in object-discovery pipeline.

    External sources: an observations API and a catalog service. Processes:
    task request -> breakup screening -> sensor tasking -> track processing
    (four outputs from tracks + observations) -> orbit determination ->
    object discovery goal. With fan-out 1 this publishes exactly 10 messages.
    """
    return ScenarioSpec(
        name="breakup-object-discovery",
        seed=seed,
        external_sources=(
            ExternalSourceSpec("observations-api", "observation_batch", {"band": "optical"}),
            ExternalSourceSpec("catalog-service", "catalog_snapshot", {"catalog": "public"}),
        ),
        subsystem_palette=dict(CANONICAL_PALETTE),
        processes=(
            ProcessSpec(
                algorithm="TaskRequester",
                subsystem="decision",
                produces=("task_request",),
            ),
            ProcessSpec(
                algorithm="BreakupScreening",
                subsystem="processing",
                consumes=(
                    InputSpec.internal("task_request"),
                    InputSpec.external("catalog-service"),
                ),
                produces=("breakup_alert",),
            ),
            ProcessSpec(
                algorithm="SensorTasking",
                subsystem="sensing",
                consumes=(
                    InputSpec.internal("breakup_alert"),
                    InputSpec.external("observations-api"),
                ),
                produces=("tracks", "observations"),
            ),
            ProcessSpec(
                algorithm="UCTProcessing",
                subsystem="processing",
                consumes=(
                    InputSpec.internal("tracks"),
                    InputSpec.internal("observations"),
                ),
                produces=("candidate_track", "uct_list", "correlation_report", "residuals"),
            ),
            ProcessSpec(
                algorithm="OrbitDetermination",
                subsystem="processing",
                consumes=(InputSpec.internal("candidate_track"),),
                produces=("state_vector",),
            ),
            ProcessSpec(
                algorithm="ObjectDiscovery",
                subsystem="decision",
                consumes=(
                    InputSpec.internal("state_vector"),
                    InputSpec.internal("breakup_alert"),
                ),
                produces=("new_object_discovered",),
                goal=True,
            ),
        ),
    )


def validate_scenario(spec: ScenarioSpec) -> None:
    """Raise ScenarioError unless the spec is well-formed and acyclic."""
    if not spec.name:
        raise ScenarioError("scenario name must be non-empty")
    if not spec.processes:
        raise ScenarioError("scenario declares no processes")

    sources: dict[str, ExternalSourceSpec] = {}
    for ext in spec.external_sources:
        if not ext.source:
            raise ScenarioError("external source with empty name")
        if ext.source in sources:
            raise ScenarioError(f"external source {ext.source!r} declared twice")
        sources[ext.source] = ext

    produced: dict[str, list[int]] = {}
    for pi, proc in enumerate(spec.processes):
        if not proc.algorithm:
            raise ScenarioError(f"process #{pi} has an empty algorithm name")
        if not proc.produces:
            raise ScenarioError(f"process {proc.algorithm!r} produces nothing")
        if proc.fan_out < 1:
            raise ScenarioError(f"process {proc.algorithm!r} has fan_out < 1")
        for dt in proc.produces:
            if TOPIC_PATTERN.fullmatch(dt) is None:
                raise ScenarioError(
                    f"data type {dt!r} is not a valid topic name ([a-z0-9._-])"
                )
            produced.setdefault(dt, []).append(pi)

    for proc in spec.processes:
        for inp in proc.consumes:
            if inp.kind == INTERNAL:
                if not inp.data_type:
                    raise ScenarioError(f"{proc.algorithm}: internal input without data_type")
                if inp.data_type not in produced:
                    raise ScenarioError(
                        f"{proc.algorithm}: consumed data type {inp.data_type!r} "
                        "is produced by no process"
                    )
            elif inp.kind == EXTERNAL:
                if not inp.source or inp.source not in sources:
                    raise ScenarioError(
                        f"{proc.algorithm}: external input {inp.source!r} is not declared"
                    )
            else:
                raise ScenarioError(f"{proc.algorithm}: input kind {inp.kind!r} is invalid")

    # Acyclicity of the process graph (edge producer -> consumer by data type).
    consumers_of: dict[int, set[int]] = {pi: set() for pi in range(len(spec.processes))}
    for ci, proc in enumerate(spec.processes):
        for inp in proc.consumes:
            if inp.kind == INTERNAL:
                for pi in produced.get(inp.data_type or "", ()):
                    if pi != ci:
                        consumers_of[pi].add(ci)
                    else:
                        raise ScenarioError(
                            f"{proc.algorithm}: consumes its own output {inp.data_type!r}"
                        )
    indegree = {pi: 0 for pi in consumers_of}
    for pi, cs in consumers_of.items():
        for ci in cs:
            indegree[ci] += 1
    ready = [pi for pi, d in indegree.items() if d == 0]
    seen = 0
    while ready:
        pi = ready.pop()
        seen += 1
        for ci in consumers_of[pi]:
            indegree[ci] -= 1
            if indegree[ci] == 0:
                ready.append(ci)
    if seen != len(spec.processes):
        raise ScenarioError("process graph has a cycle")


class _Driver:
    """Shared activation state for the sequential and concurrent drivers."""

    def __init__(self, spec: ScenarioSpec, bus: MessageBus) -> None:
        self.spec = spec
        self.bus = bus
        self.sources = {ext.source: ext for ext in spec.external_sources}
        self.rng = Random(spec.seed)
        self.clock = SimClock()
        self.lock = threading.Lock()
        self.cond = threading.Condition(self.lock)
        # One FIFO queue per (process, internal input): published message ids.
        self.queues: dict[tuple[int, int], deque[str]] = {}
        self.consumers: dict[str, list[tuple[int, int]]] = {}
        for pi, proc in enumerate(spec.processes):
            for ii, inp in enumerate(proc.consumes):
                if inp.kind == INTERNAL:
                    self.queues[(pi, ii)] = deque()
                    assert inp.data_type is not None
                    self.consumers.setdefault(inp.data_type, []).append((pi, ii))
        self.fired = [0] * len(spec.processes)
        self.published = 0
        self.goal_ids: list[str] = []
        self.active = 0

    def register_topics(self) -> None:
        if not self.bus.registry_enabled:
            return
        for proc in self.spec.processes:
            for dt in proc.produces:
                try:
                    self.bus.register_topic(name=dt, data_type=dt)
                except ValueError as exc:
                    raise ScenarioError(str(exc)) from exc

    def ready_activation(self, pi: int) -> bool:
        # Caller holds the lock. Processes with no internal inputs (roots and
        # pure external ingestors) fire exactly once per run.
        proc = self.spec.processes[pi]
        internal = [ii for ii, inp in enumerate(proc.consumes) if inp.kind == INTERNAL]
        if not internal:
            return self.fired[pi] == 0
        return all(self.queues[(pi, ii)] for ii in internal)

    def pop_activation(self, pi: int) -> list[ParentRef]:
        # Caller holds the lock and has checked ready_activation.
        proc = self.spec.processes[pi]
        parents: list[ParentRef] = []
        for ii, inp in enumerate(proc.consumes):
            if inp.kind == INTERNAL:
                assert inp.data_type is not None
                mid = self.queues[(pi, ii)].popleft()
                parents.append(ParentRef.internal(mid, inp.data_type))
            else:
                assert inp.source is not None
                ext = self.sources[inp.source]
                parents.append(
                    ParentRef.external(ext.source, ext.data_type, ext.parameters)
                )
        self.fired[pi] += 1
        return parents

    def emit(self, pi: int, parents: list[ParentRef]) -> list[tuple[str, str]]:
        """Publish this activation's outputs; returns (data_type, message_id)."""
        proc = self.spec.processes[pi]
        producer = Producer(
            algorithm=proc.algorithm, version=proc.version, subsystem=proc.subsystem
        )
        out: list[tuple[str, str]] = []
        for dt in proc.produces:
            for _ in range(proc.fan_out):
                with self.lock:
                    header = new_header(
                        producer, dt, parents, clock=self.clock, id_source=self.rng
                    )
                    payload = self.rng.randbytes(24)
                self.bus.publish(MessageEnvelope(header=header, topic=dt, payload=payload))
                out.append((dt, header.message_id))
        return out

    def deliver(self, outputs: list[tuple[str, str]]) -> None:
        # Caller holds the lock.
        for dt, mid in outputs:
            self.published += 1
            for key in self.consumers.get(dt, ()):
                self.queues[key].append(mid)

    def record_goals(self, pi: int, outputs: list[tuple[str, str]]) -> None:
        if self.spec.processes[pi].goal:
            self.goal_ids.extend(mid for _, mid in outputs)


def run(spec: ScenarioSpec, bus: MessageBus, *, workers: int = 0) -> RunReport:
    """Drive a scenario to quiescence over *bus*.

    Args:
        spec: a valid scenario (validated here).
        bus: target bus; its journal, registry, and enforcement settings
            apply. May already contain compatible traffic.
        workers: 0 runs the deterministic sequential driver (byte-identical
            journals per seed); N > 0 drives activations from N threads.

    Raises:
        ScenarioError: invalid spec or topic binding conflict.
        SpecUnsatisfiable: some process never activated.
    """
    validate_scenario(spec)
    driver = _Driver(spec, bus)
    driver.register_topics()
    if workers > 0:
        _run_concurrent(driver, workers)
    else:
        _run_sequential(driver)
    never_fired = [
        spec.processes[pi].algorithm
        for pi in range(len(spec.processes))
        if driver.fired[pi] == 0
    ]
    if never_fired:
        raise SpecUnsatisfiable(
            f"processes never activated: {', '.join(never_fired)}"
        )
    path = bus.journal_path
    return RunReport(
        message_count=driver.published,
        goal_message_ids=tuple(driver.goal_ids),
        journal_path=str(path) if path is not None else None,
    )


def _run_sequential(driver: _Driver) -> None:
    progress = True
    while progress:
        progress = False
        for pi in range(len(driver.spec.processes)):
            while True:
                with driver.lock:
                    if not driver.ready_activation(pi):
                        break
                    parents = driver.pop_activation(pi)
                outputs = driver.emit(pi, parents)
                with driver.lock:
                    driver.deliver(outputs)
                driver.record_goals(pi, outputs)
                progress = True


def _run_concurrent(driver: _Driver, workers: int) -> None:
    errors: list[BaseException] = []

    def worker() -> None:
        while True:
            with driver.cond:
                pi = None
                while pi is None:
                    for candidate in range(len(driver.spec.processes)):
                        if driver.ready_activation(candidate):
                            pi = candidate
                            break
                    else:
                        if driver.active == 0:
                            return
                        driver.cond.wait()
                parents = driver.pop_activation(pi)
                driver.active += 1
            try:
                outputs = driver.emit(pi, parents)
            except BaseException as exc:  # propagate to the caller
                with driver.cond:
                    errors.append(exc)
                    driver.active -= 1
                    driver.cond.notify_all()
                return
            with driver.cond:
                driver.deliver(outputs)
                driver.record_goals(pi, outputs)
                driver.active -= 1
                driver.cond.notify_all()

    threads = [threading.Thread(target=worker, daemon=True) for _ in range(workers)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]


# ---------------------------------------------------------------------------
# config file form


def scenario_to_dict(spec: ScenarioSpec) -> dict[str, Any]:
    return {
        "name": spec.name,
        "seed": spec.seed,
        "external_sources": [
            {
                "source": ext.source,
                "data_type": ext.data_type,
                "parameters": dict(sorted(ext.parameters.items())),
            }
            for ext in spec.external_sources
        ],
        "subsystem_palette": dict(sorted(spec.subsystem_palette.items())),
        "processes": [
            {
                "algorithm": proc.algorithm,
                "version": proc.version,
                "subsystem": proc.subsystem,
                "consumes": [
                    {"kind": INTERNAL, "data_type": inp.data_type}
                    if inp.kind == INTERNAL
                    else {"kind": EXTERNAL, "source": inp.source}
                    for inp in proc.consumes
                ],
                "produces": list(proc.produces),
                "fan_out": proc.fan_out,
                "goal": proc.goal,
            }
            for proc in spec.processes
        ],
    }


def _expect(obj: Mapping[str, Any], key: str, expected: type, where: str) -> Any:
    if key not in obj:
        raise ScenarioError(f"{where}: missing field {key!r}")
    value = obj[key]
    if not isinstance(value, expected) or (expected is not bool and isinstance(value, bool)):
        raise ScenarioError(
            f"{where}.{key}: expected {expected.__name__}, got {type(value).__name__}"
        )
    return value


def scenario_from_dict(obj: Any) -> ScenarioSpec:
    if not isinstance(obj, dict):
        raise ScenarioError(f"scenario: expected object, got {type(obj).__name__}")
    externals = []
    for i, item in enumerate(obj.get("external_sources", [])):
        where = f"external_sources[{i}]"
        if not isinstance(item, dict):
            raise ScenarioError(f"{where}: expected object")
        externals.append(
            ExternalSourceSpec(
                source=_expect(item, "source", str, where),
                data_type=_expect(item, "data_type", str, where),
                parameters=item.get("parameters", {}) or {},
            )
        )
    processes = []
    for i, item in enumerate(_expect(obj, "processes", list, "scenario")):
        where = f"processes[{i}]"
        if not isinstance(item, dict):
            raise ScenarioError(f"{where}: expected object")
        consumes = []
        for j, inp in enumerate(item.get("consumes", [])):
            inp_where = f"{where}.consumes[{j}]"
            if not isinstance(inp, dict):
                raise ScenarioError(f"{inp_where}: expected object")
            kind = _expect(inp, "kind", str, inp_where)
            if kind == INTERNAL:
                consumes.append(InputSpec.internal(_expect(inp, "data_type", str, inp_where)))
            elif kind == EXTERNAL:
                consumes.append(InputSpec.external(_expect(inp, "source", str, inp_where)))
            else:
                raise ScenarioError(f"{inp_where}.kind: {kind!r} is not internal or external")
        produces = _expect(item, "produces", list, where)
        if not all(isinstance(dt, str) for dt in produces):
            raise ScenarioError(f"{where}.produces: entries must be strings")
        fan_out = item.get("fan_out", 1)
        if not isinstance(fan_out, int) or isinstance(fan_out, bool):
            raise ScenarioError(f"{where}.fan_out: expected int")
        processes.append(
            ProcessSpec(
                algorithm=_expect(item, "algorithm", str, where),
                subsystem=_expect(item, "subsystem", str, where),
                consumes=tuple(consumes),
                produces=tuple(produces),
                fan_out=fan_out,
                version=item.get("version", "1.0.0"),
                goal=bool(item.get("goal", False)),
            )
        )
    palette = obj.get("subsystem_palette", {})
    if not isinstance(palette, dict):
        raise ScenarioError("subsystem_palette: expected object")
    spec = ScenarioSpec(
        name=_expect(obj, "name", str, "scenario"),
        seed=_expect(obj, "seed", int, "scenario"),
        processes=tuple(processes),
        external_sources=tuple(externals),
        subsystem_palette=palette,
    )
    validate_scenario(spec)
    return spec


def load_scenario(path: Path | str) -> ScenarioSpec:
    """Load and validate a scenario config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario file {path} is not valid JSON: {exc}") from exc
    return scenario_from_dict(obj)


def save_scenario(spec: ScenarioSpec, path: Path | str) -> None:
    Path(path).write_text(canonical_json(scenario_to_dict(spec)) + "\n", encoding="utf-8")
