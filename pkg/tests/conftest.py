from __future__ import annotations

import pytest

from tracebus.bus import MessageBus
from tracebus.scenario import RunReport, canonical_breakup_scenario, run
from tracebus.store import ProvenanceStore


@pytest.fixture
def canonical_spec():
    return canonical_breakup_scenario(seed=42)


@pytest.fixture
def canonical_journal(tmp_path, canonical_spec):
    """Seed-42 canonical run persisted to a journal file."""
    path = tmp_path / "canonical.journal"
    with MessageBus(path, topic_registry={}) as bus:
        report = run(canonical_spec, bus)
        records = bus.records()
    return path, report, records


@pytest.fixture
def canonical_store(canonical_journal, canonical_spec) -> tuple[ProvenanceStore, RunReport]:
    _, report, records = canonical_journal
    return ProvenanceStore.rebuild(records, canonical_spec.subsystem_palette), report
