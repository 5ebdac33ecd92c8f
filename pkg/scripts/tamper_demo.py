#!/usr/bin/env python3
"""Show tamper evidence: run the nominal scenario, flip one byte of the
persisted trace, and watch verification flip from OK to BROKEN."""

import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from epssim.ledger import verify_trace_file
from epssim.scenario import run_scenario


def main():
    trace = Path(tempfile.mkdtemp(prefix="epssim-tamper-")) / "trace.jsonl"
    run_scenario("hd-replace-nominal", trace_path=trace)
    print(f"trace: {trace} ({len(trace.read_bytes())} bytes)")
    print(f"verification before tampering: {verify_trace_file(trace)}")

    raw = bytearray(trace.read_bytes())
    pos = len(raw) // 2
    while raw[pos] == 0x0A:
        pos += 1
    old = chr(raw[pos])
    raw[pos] ^= 0x01
    trace.write_bytes(bytes(raw))
    print(f"flipped one bit of byte {pos} ({old!r} -> {chr(raw[pos])!r})")
    print(f"verification after tampering:  {verify_trace_file(trace)}")


if __name__ == "__main__":
    main()
