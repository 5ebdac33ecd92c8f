#!/usr/bin/env python3
"""Run every shipped scenario script and print a one-line verdict per run."""

import sys
import tempfile
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from epssim.fixtures import load_fixture_dir
from epssim.scenario import run_scenario
from epssim.system import DEFAULT_FIXTURES


def main():
    fixtures = load_fixture_dir(DEFAULT_FIXTURES)
    out_dir = Path(tempfile.mkdtemp(prefix="epssim-scenarios-"))
    print(f"{'script':34} {'state':10} {'verdict':14} {'chain':6} {'events':6} time")
    for name in sorted(fixtures.scripts):
        trace = out_dir / f"{name}.trace.jsonl"
        started = time.monotonic()
        report = run_scenario(name, fixtures, trace_path=trace)
        elapsed = time.monotonic() - started
        events = len(trace.read_text().splitlines())
        for session in report.sessions or [{"state": "-", "conformance": {"verdict": "-"}}]:
            print(f"{name:34} {session['state']:10} "
                  f"{session['conformance']['verdict']:14} "
                  f"{str(report.chain_verified):6} {events:6} {elapsed:.3f}s")
    print(f"\ntraces under {out_dir}")


if __name__ == "__main__":
    main()
