from __future__ import annotations

import json
from random import Random

import pytest

from tracebus import engine
from tracebus.bus import MessageBus
from tracebus.errors import ScenarioError
from tracebus.scenario import (
    ExternalSourceSpec,
    InputSpec,
    ProcessSpec,
    ScenarioSpec,
    canonical_breakup_scenario,
    load_scenario,
    run,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    validate_scenario,
)
from tracebus.store import EXTERNAL_SOURCE, MESSAGE, ProvenanceStore
from support import isomorphic, predicted_message_count, random_scenario


def test_canonical_has_four_output_process_from_tracks_and_observations(canonical_spec):
    fits = [
        p
        for p in canonical_spec.processes
        if {inp.data_type for inp in p.consumes if inp.kind == "internal"}
        == {"tracks", "observations"}
    ]
    assert len(fits) == 1
    assert len(fits[0].produces) == 4


def test_canonical_spec_validates(canonical_spec):
    validate_scenario(canonical_spec)


def test_canonical_run_publishes_ten_messages_and_one_goal(canonical_journal):
    _, report, records = canonical_journal
    assert report.message_count == 10
    assert len(records) == 10
    assert len(report.goal_message_ids) == 1
    goals = [r for r in records if r.envelope.topic == "new_object_discovered"]
    assert [r.envelope.header.message_id for r in goals] == list(report.goal_message_ids)


def _spec_predicted_ancestry(spec) -> tuple[set[str], set[str]]:
    """Walk the declared pipeline backward from the goal: the data types and
    external sources that must appear in the goal's backward trace."""
    producer_of = {}
    for proc in spec.processes:
        for dt in proc.produces:
            producer_of[dt] = proc
    goal_types = [dt for p in spec.processes if p.goal for dt in p.produces]
    types: set[str] = set()
    sources: set[str] = set()
    todo = list(goal_types)
    while todo:
        dt = todo.pop()
        if dt in types:
            continue
        types.add(dt)
        proc = producer_of[dt]
        for inp in proc.consumes:
            if inp.kind == "internal":
                todo.append(inp.data_type)
            else:
                sources.add(inp.source)
    return types, sources


def test_goal_trace_covers_spec_predicted_closure(canonical_spec, canonical_store):
    store, report = canonical_store
    expected_types, expected_sources = _spec_predicted_ancestry(canonical_spec)
    sub = engine.trace_back(store, report.goal_message_ids[0])
    got_types = {n.data_type for n in sub.nodes if n.category == MESSAGE}
    got_sources = {n.source for n in sub.nodes if n.category == EXTERNAL_SOURCE}
    assert got_types == expected_types
    assert got_sources == expected_sources


def test_parents_match_declared_consumes(canonical_spec, canonical_journal):
    _, _, records = canonical_journal
    by_algorithm = {p.algorithm: p for p in canonical_spec.processes}
    data_type_of = {r.envelope.header.message_id: r.envelope.header.data_type for r in records}
    for record in records:
        header = record.envelope.header
        proc = by_algorithm[header.producer.algorithm]
        declared = [
            (inp.kind, inp.data_type if inp.kind == "internal" else inp.source)
            for inp in proc.consumes
        ]
        cited = [
            (
                ref.kind,
                data_type_of[ref.message_id] if ref.kind == "internal" else ref.source,
            )
            for ref in header.parents
        ]
        assert sorted(cited) == sorted(declared)


def test_same_seed_runs_are_byte_identical(tmp_path):
    spec = canonical_breakup_scenario(seed=7)
    paths = []
    for name in ("a", "b"):
        path = tmp_path / f"{name}.journal"
        with MessageBus(path, topic_registry={}) as bus:
            run(spec, bus)
        paths.append(path)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_different_seeds_are_isomorphic(tmp_path):
    stores = []
    for seed in (1, 2):
        spec = canonical_breakup_scenario(seed=seed)
        with MessageBus(topic_registry={}) as bus:
            run(spec, bus)
            stores.append(ProvenanceStore.rebuild(bus.records(), spec.subsystem_palette))
    assert isomorphic(stores[0], stores[1])
    assert stores[0].node_set() != stores[1].node_set()  # ids differ


def test_concurrent_driver_preserves_graph_shape(canonical_spec):
    with MessageBus(topic_registry={}) as sequential_bus:
        run(canonical_spec, sequential_bus)
        sequential = ProvenanceStore.rebuild(
            sequential_bus.records(), canonical_spec.subsystem_palette
        )
    with MessageBus(topic_registry={}) as threaded_bus:
        report = run(canonical_spec, threaded_bus, workers=4)
        threaded = ProvenanceStore.rebuild(
            threaded_bus.records(), canonical_spec.subsystem_palette
        )
    assert report.message_count == 10
    assert isomorphic(sequential, threaded)


def test_random_scenarios_match_predicted_count():
    rng = Random(55)
    for _ in range(10):
        spec = random_scenario(rng)
        with MessageBus(topic_registry={}) as bus:
            report = run(spec, bus)
        assert report.message_count == predicted_message_count(spec)
        assert 0 < report.message_count <= 200


def test_run_registers_topics(canonical_spec):
    bus = MessageBus(topic_registry={})
    run(canonical_spec, bus)
    assert bus.registry_enabled
    # Every topic is bound to its own data type.
    for record in bus.records():
        assert record.envelope.topic == record.envelope.header.data_type


def test_validation_rejects_cycles():
    spec = ScenarioSpec(
        name="cyclic",
        seed=1,
        processes=(
            ProcessSpec("A", "s", consumes=(InputSpec.internal("b_out"),), produces=("a_out",)),
            ProcessSpec("B", "s", consumes=(InputSpec.internal("a_out"),), produces=("b_out",)),
        ),
    )
    with pytest.raises(ScenarioError, match="cycle"):
        validate_scenario(spec)


def test_validation_rejects_self_consumption():
    spec = ScenarioSpec(
        name="selfie",
        seed=1,
        processes=(
            ProcessSpec("A", "s", consumes=(InputSpec.internal("loop"),), produces=("loop",)),
        ),
    )
    with pytest.raises(ScenarioError, match="own output"):
        validate_scenario(spec)


def test_validation_rejects_unproduced_type_and_unknown_source():
    with pytest.raises(ScenarioError, match="produced by no process"):
        validate_scenario(
            ScenarioSpec(
                name="x",
                seed=1,
                processes=(
                    ProcessSpec("A", "s", consumes=(InputSpec.internal("ghost"),), produces=("out",)),
                ),
            )
        )
    with pytest.raises(ScenarioError, match="not declared"):
        validate_scenario(
            ScenarioSpec(
                name="x",
                seed=1,
                processes=(
                    ProcessSpec("A", "s", consumes=(InputSpec.external("ether"),), produces=("out",)),
                ),
            )
        )


def test_validation_rejects_bad_topic_charset():
    with pytest.raises(ScenarioError, match="topic"):
        validate_scenario(
            ScenarioSpec(
                name="x",
                seed=1,
                processes=(ProcessSpec("A", "s", produces=("Bad Topic",)),),
            )
        )


def test_config_roundtrip(tmp_path, canonical_spec):
    path = tmp_path / "scenario.json"
    save_scenario(canonical_spec, path)
    loaded = load_scenario(path)
    assert loaded == canonical_spec


def test_config_roundtrip_dict(canonical_spec):
    assert scenario_from_dict(json.loads(json.dumps(scenario_to_dict(canonical_spec)))) == canonical_spec


def test_load_rejects_bad_files(tmp_path):
    missing = tmp_path / "nope.json"
    with pytest.raises(ScenarioError, match="cannot read"):
        load_scenario(missing)
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ScenarioError, match="not valid JSON"):
        load_scenario(bad)
    wrong = tmp_path / "wrong.json"
    wrong.write_text('{"name": "x"}', encoding="utf-8")
    with pytest.raises(ScenarioError, match="missing field"):
        load_scenario(wrong)


def test_pure_external_ingestor_fires_once():
    spec = ScenarioSpec(
        name="external-only",
        seed=3,
        external_sources=(ExternalSourceSpec("feed", "feed_data", {}),),
        processes=(
            ProcessSpec(
                "Ingestor",
                "sensing",
                consumes=(InputSpec.external("feed"),),
                produces=("snapshot",),
            ),
            ProcessSpec(
                "Consumer",
                "processing",
                consumes=(InputSpec.internal("snapshot"),),
                produces=("result",),
                goal=True,
            ),
        ),
    )
    with MessageBus(topic_registry={}) as bus:
        report = run(spec, bus)
    assert report.message_count == 2
    assert len(report.goal_message_ids) == 1
