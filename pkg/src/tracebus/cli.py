"""Operator command line: run scenarios, audit journals, query traces, serve.

Machine output (JSON or DOT) goes to stdout, diagnostics to stderr, so audit
pipelines can consume stdout directly. Exit codes: 0 success, 1 domain error
(violations found, unknown id, bus failure), 2 usage or I/O error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import engine
from .bus import MessageBus
from .errors import ScenarioError, TracebusError, UnknownNode
from .journal import journal_replay, verify_journal
from .scenario import (
    CANONICAL_PALETTE,
    canonical_breakup_scenario,
    load_scenario,
    run as run_scenario,
)
from .schema import canonical_json
from .service import ServiceConfig, TraceService
from .store import ProvenanceStore


@click.group()
@click.version_option(package_name="tracebus", prog_name="trace")
def main() -> None:
    """Data and decision traceability over a journaled message bus."""


# ---------------------------------------------------------------------------
# trace sim


@main.group()
def sim() -> None:
    """Scenario simulation."""


@sim.command("run")
@click.option(
    "--scenario",
    "scenario_ref",
    default="canonical",
    show_default=True,
    help="Scenario config file, or 'canonical' for the built-in breakup pipeline.",
)
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option(
    "--journal",
    "journal_path",
    type=click.Path(dir_okay=False, path_type=Path),
    required=True,
    help="Journal file to write. An existing file at this path is replaced.",
)
@click.option(
    "--workers",
    type=int,
    default=0,
    show_default=True,
    help="Concurrent driver threads; 0 = deterministic sequential driver.",
)
def sim_run(scenario_ref: str, seed: int | None, journal_path: Path, workers: int) -> None:
    """Run a scenario end-to-end and print its run report as JSON."""
    try:
        if scenario_ref == "canonical":
            spec = canonical_breakup_scenario(seed if seed is not None else 42)
        else:
            spec = load_scenario(scenario_ref)
            if seed is not None:
                from dataclasses import replace

                spec = replace(spec, seed=seed)
    except ScenarioError as exc:
        click.echo(f"invalid scenario: {exc}", err=True)
        sys.exit(2)

    try:
        journal_path.parent.mkdir(parents=True, exist_ok=True)
        if journal_path.exists():
            journal_path.unlink()
        with MessageBus(
            journal_path,
            topic_registry={},
            known_subsystems=set(spec.subsystem_palette) or None,
        ) as bus:
            report = run_scenario(spec, bus, workers=workers)
    except OSError as exc:
        click.echo(f"cannot write journal: {exc}", err=True)
        sys.exit(2)
    except TracebusError as exc:
        click.echo(f"scenario run failed: {exc}", err=True)
        sys.exit(1)
    click.echo(canonical_json(report.to_dict()))


# ---------------------------------------------------------------------------
# trace journal


@main.group()
def journal() -> None:
    """Journal auditing."""


@journal.command("verify")
@click.argument("path", type=click.Path(path_type=Path))
@click.option("--lenient", is_flag=True, help="Tolerate unknown header fields.")
def journal_verify(path: Path, lenient: bool) -> None:
    """Audit PATH: schema validity, sequence gaplessness, parent causality.

    Prints a JSON report on stdout and one line per violation on stderr.
    Exits 0 iff there are no violations.
    """
    try:
        report = verify_journal(path, strict=not lenient)
    except OSError as exc:
        click.echo(f"cannot read journal: {exc}", err=True)
        sys.exit(2)
    click.echo(canonical_json(report.to_dict()))
    for violation in report.violations:
        where = "?" if violation.sequence is None else str(violation.sequence)
        click.echo(f"seq {where}: {violation.code}: {violation.detail}", err=True)
    sys.exit(0 if report.ok else 1)


# ---------------------------------------------------------------------------
# trace query


@main.group()
def query() -> None:
    """Lineage queries over a journal."""


def _load_store(journal_path: Path, lenient: bool) -> ProvenanceStore:
    try:
        return ProvenanceStore.rebuild(
            journal_replay(journal_path, strict=not lenient), CANONICAL_PALETTE
        )
    except OSError as exc:
        click.echo(f"cannot read journal: {exc}", err=True)
        sys.exit(2)
    except TracebusError as exc:
        click.echo(f"journal rejected: {exc}", err=True)
        sys.exit(1)


def _query_command(direction: str):
    @click.argument("message_id")
    @click.option(
        "--journal",
        "journal_path",
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
        required=True,
    )
    @click.option(
        "--depth",
        type=int,
        default=None,
        help="Maximum hops from the focus; omit for unlimited.",
    )
    @click.option(
        "--format",
        "fmt",
        type=click.Choice(["dot", "json"]),
        default="json",
        show_default=True,
    )
    @click.option("--lenient", is_flag=True, help="Tolerate unknown header fields.")
    def command(message_id: str, journal_path: Path, depth: int | None, fmt: str, lenient: bool) -> None:
        if depth is not None and depth < 0:
            click.echo("--depth must be >= 0", err=True)
            sys.exit(2)
        store = _load_store(journal_path, lenient)
        try:
            subgraph = engine.trace(store, message_id, direction, depth)
        except UnknownNode as exc:
            click.echo(str(exc), err=True)
            sys.exit(1)
        if fmt == "dot":
            click.echo(engine.export_dot(subgraph), nl=False)
        else:
            click.echo(engine.export_json(subgraph))

    return command


query.command("back", help="Trace ancestry of MESSAGE_ID (child -> parents).")(
    _query_command(engine.BACKWARD)
)
query.command("forward", help="Trace impact of MESSAGE_ID (parent -> children).")(
    _query_command(engine.FORWARD)
)


# ---------------------------------------------------------------------------
# trace serve


@main.command("serve")
@click.option(
    "--listen",
    default="127.0.0.1:8321",
    show_default=True,
    envvar="TRACE_LISTEN",
    help="host:port to bind.",
)
@click.option(
    "--journal",
    "journal_path",
    type=click.Path(path_type=Path),
    required=True,
    envvar="TRACE_JOURNAL",
)
@click.option(
    "--strict/--lenient",
    default=True,
    show_default=True,
    envvar="TRACE_STRICT",
    help="Reject unknown header fields while tailing.",
)
@click.option(
    "--allow-dangling-parents",
    is_flag=True,
    envvar="TRACE_ALLOW_DANGLING_PARENTS",
    help="Keep serving when records cite parents missing from the journal.",
)
@click.option(
    "--max-depth",
    type=int,
    default=10,
    show_default=True,
    envvar="TRACE_MAX_DEPTH",
    help="Default trace depth when a request does not specify one.",
)
@click.option(
    "--static-dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    envvar="TRACE_STATIC_DIR",
    help="Serve the explorer client bundle from this directory.",
)
@click.option(
    "--poll-interval",
    type=float,
    default=0.2,
    show_default=True,
    envvar="TRACE_POLL_INTERVAL",
    help="Journal poll interval in seconds.",
)
def serve(
    listen: str,
    journal_path: Path,
    strict: bool,
    allow_dangling_parents: bool,
    max_depth: int,
    static_dir: Path | None,
    poll_interval: float,
) -> None:
    """Serve the trace API (and optionally the explorer UI) over HTTP."""
    try:
        config = ServiceConfig(
            journal_path=journal_path,
            listen=listen,
            strict=strict,
            allow_dangling_parents=allow_dangling_parents,
            default_max_depth=max_depth,
            static_dir=static_dir,
            poll_interval=poll_interval,
        )
        service = TraceService(config)
        service.start()
    except (OSError, ValueError) as exc:
        click.echo(f"cannot start service: {exc}", err=True)
        sys.exit(2)
    except TracebusError as exc:
        click.echo(f"journal rejected: {exc}", err=True)
        sys.exit(1)
    host, port = service.address
    click.echo(f"serving on http://{host}:{port} (journal: {journal_path})", err=True)
    try:
        while True:
            service._stop.wait(3600)
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()


if __name__ == "__main__":
    main()
