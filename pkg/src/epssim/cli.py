"""Command-line surface.

Exit codes: 0 success, 1 operational error (domain error, failed
verification), 2 usage error (click's default for bad invocations).
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import lom_xml
from .clock import WallClock
from .errors import EpssError
from .ledger import verify_trace_file
from .scenario import run_scenario
from .system import DEFAULT_FIXTURES, System


def _fail(exc: EpssError) -> None:
    click.echo(f"{exc.code}: {exc.message}", err=True)
    sys.exit(1)


@click.group()
def main():
    """Desk-scale maintenance-support workbench."""


@main.command()
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--fixtures", "fixture_dir", default=None,
              type=click.Path(exists=True, file_okay=False),
              help="Fixture directory (defaults to the shipped case-study set).")
@click.option("--clock", "clock_kind", type=click.Choice(["logical", "wall"]),
              default="logical", show_default=True,
              help="Trace timestamp source. Scenario runs always use logical time.")
def serve(port: int, host: str, fixture_dir: str | None, clock_kind: str):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app
    clock = WallClock() if clock_kind == "wall" else None
    app = create_app(fixture_dir=fixture_dir, clock=clock)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.group()
def scenario():
    """Scripted end-to-end runs."""


@scenario.command("run")
@click.argument("script_name")
@click.option("--fixtures", "fixture_dir", default=None,
              type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False),
              help="Report file (JSON). Defaults to <script>.report.json.")
@click.option("--trace", "trace_path", default=None, type=click.Path(dir_okay=False),
              help="Trace file. Defaults to <report>.trace.jsonl.")
def scenario_run(script_name: str, fixture_dir: str | None, out_path: str | None,
                 trace_path: str | None):
    """Execute a shipped script from a clean store and write its report."""
    out = Path(out_path) if out_path else Path(f"{script_name}.report.json")
    trace = Path(trace_path) if trace_path else out.with_suffix(".trace.jsonl")
    try:
        report = run_scenario(script_name, fixture_dir or DEFAULT_FIXTURES, trace_path=trace)
    except EpssError as exc:
        _fail(exc)
    out.write_text(report.to_json(), encoding="utf-8")
    click.echo(f"report: {out}")
    click.echo(f"trace:  {trace}")
    for session in report.sessions:
        verdict = session["conformance"]["verdict"]
        click.echo(f"session {session['session_id']}: {session['state']}, {verdict}")
    click.echo(f"chain verified: {report.chain_verified}")
    if not report.chain_verified:
        sys.exit(1)


@main.group()
def trace():
    """Trace-file tooling."""


@trace.command("verify")
@click.argument("trace_file", type=click.Path(exists=True, dir_okay=False))
def trace_verify(trace_file: str):
    """Recompute the hash chain of a persisted trace."""
    if verify_trace_file(trace_file):
        click.echo("chain OK")
    else:
        click.echo("chain BROKEN", err=True)
        sys.exit(1)


@main.group()
def units():
    """Learning-unit import/export."""


@units.command("export")
@click.argument("unit_id")
@click.option("--fixtures", "fixture_dir", default=None,
              type=click.Path(exists=True, file_okay=False))
@click.option("-o", "--out", "out_path", default=None, type=click.Path(dir_okay=False))
def units_export(unit_id: str, fixture_dir: str | None, out_path: str | None):
    """Write one indexed unit as profile XML."""
    system = System.from_fixtures(fixture_dir)
    try:
        xml = lom_xml.export_unit(system.knowledge, unit_id)
    except EpssError as exc:
        _fail(exc)
    if out_path:
        Path(out_path).write_text(xml, encoding="utf-8")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(xml, nl=False)


@units.command("import")
@click.argument("xml_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--fixtures", "fixture_dir", default=None,
              type=click.Path(exists=True, file_okay=False))
def units_import(xml_file: str, fixture_dir: str | None):
    """Validate a unit document and index it into a fixture-backed store."""
    system = System.from_fixtures(fixture_dir)
    try:
        unit = lom_xml.import_unit(system.knowledge,
                                   Path(xml_file).read_text(encoding="utf-8"))
    except EpssError as exc:
        _fail(exc)
    click.echo(f"imported {unit.id}: {unit.title} "
               f"({len(unit.fragments)} fragments, {unit.metadata.protection.value})")


@main.group()
def kb():
    """Knowledge-base utilities."""


@kb.command("seed")
@click.option("--fixtures", "fixture_dir", default=None,
              type=click.Path(exists=True, file_okay=False))
def kb_seed(fixture_dir: str | None):
    """Load the fixture manifests and list the resulting units."""
    try:
        system = System.from_fixtures(fixture_dir)
    except EpssError as exc:
        _fail(exc)
    units_ = sorted(system.knowledge.units(), key=lambda u: u.id)
    for unit in units_:
        click.echo(f"{unit.id}  [{unit.metadata.protection.value}]  {unit.title}")
    open_count = sum(1 for u in units_ if u.metadata.protection.value == "Open")
    click.echo(f"seeded {len(units_)} units ({open_count} Open)")


if __name__ == "__main__":
    main()
