"""Append-only, hash-chained operation trace.

Every event is sealed with a global sequence number, a logical timestamp and a
chain hash: sha256 over the previous chain hash concatenated with the event's
canonical serialization. The canonical line format (documented in the README)
is what gets persisted, so an offline verifier can recompute the whole chain
from the file alone.

Field order of a canonical line is fixed: seq, ts, actor, session, kind,
payload (keys sorted recursively), chain. Lines are compact JSON, UTF-8,
ASCII-escaped, one event per line.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Iterable

from .clock import LogicalClock
from .errors import UnknownSession

GENESIS_HASH = "0" * 64


class EventKind(str, Enum):
    SCAN = "Scan"
    SESSION_STARTED = "SessionStarted"
    STEP_REPORTED = "StepReported"
    DEVIATION = "Deviation"
    UNIT_DELIVERED = "UnitDelivered"
    TAG_WRITTEN = "TagWritten"
    HELP_REQUESTED = "HelpRequested"
    MESSAGE = "Message"
    SESSION_CLOSED = "SessionClosed"


class Verdict(str, Enum):
    CONFORMANT = "Conformant"
    NON_CONFORMANT = "NonConformant"


@dataclass(frozen=True)
class TraceEvent:
    seq: int
    ts: int
    actor: str
    session: str | None
    kind: EventKind
    payload: dict[str, Any]
    chain: str


@dataclass(frozen=True)
class ConformanceReport:
    session_id: str
    steps_total: int
    steps_done_in_order: int
    deviations: tuple[dict[str, Any], ...]
    verdict: Verdict

    def to_dict(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "steps_total": self.steps_total,
            "steps_done_in_order": self.steps_done_in_order,
            "deviations": [dict(d) for d in self.deviations],
            "verdict": self.verdict.value,
        }


def _canonical(value: Any) -> Any:
    """Recursively sort mapping keys so serialization is order-independent."""
    if isinstance(value, dict):
        return {k: _canonical(value[k]) for k in sorted(value)}
    if isinstance(value, (list, tuple)):
        return [_canonical(v) for v in value]
    if isinstance(value, Enum):
        return value.value
    return value


def event_body(seq: int, ts: int, actor: str, session: str | None,
               kind: str, payload: dict[str, Any]) -> str:
    body = {
        "seq": seq,
        "ts": ts,
        "actor": actor,
        "session": session,
        "kind": kind,
        "payload": _canonical(payload),
    }
    return json.dumps(body, separators=(",", ":"), ensure_ascii=True)


def chain_hash(prev_chain: str, body: str) -> str:
    return hashlib.sha256((prev_chain + body).encode("utf-8")).hexdigest()


def event_line(event: TraceEvent) -> str:
    body = event_body(event.seq, event.ts, event.actor, event.session,
                      event.kind.value, event.payload)
    # chain is appended as the last field of the same object
    return body[:-1] + ',"chain":' + json.dumps(event.chain) + "}"


class Ledger:
    """Globally serialized append log; queries are reads over the sealed prefix."""

    def __init__(self, clock=None, sink: str | Path | None = None):
        self.clock = clock if clock is not None else LogicalClock()
        self._events: list[TraceEvent] = []
        self._lock = threading.Lock()
        self._sink = Path(sink) if sink is not None else None
        if self._sink is not None:
            self._sink.parent.mkdir(parents=True, exist_ok=True)
            self._sink.write_text("", encoding="utf-8")

    def append(self, kind: EventKind, payload: dict[str, Any], *,
               actor: str, session: str | None = None) -> TraceEvent:
        with self._lock:
            seq = len(self._events) + 1
            ts = self.clock.next()
            canon_payload = _canonical(payload)
            prev = self._events[-1].chain if self._events else GENESIS_HASH
            body = event_body(seq, ts, actor, session, kind.value, canon_payload)
            event = TraceEvent(seq=seq, ts=ts, actor=actor, session=session,
                               kind=kind, payload=canon_payload,
                               chain=chain_hash(prev, body))
            self._events.append(event)
            if self._sink is not None:
                with self._sink.open("a", encoding="utf-8") as fh:
                    fh.write(event_line(event) + "\n")
            return event

    def events(self) -> tuple[TraceEvent, ...]:
        return tuple(self._events)

    def __len__(self) -> int:
        return len(self._events)

    def query(self, *, actor: str | None = None, session: str | None = None,
              kind: EventKind | None = None, seq_from: int | None = None,
              seq_to: int | None = None) -> list[TraceEvent]:
        out = []
        for e in self._events:
            if actor is not None and e.actor != actor:
                continue
            if session is not None and e.session != session:
                continue
            if kind is not None and e.kind != kind:
                continue
            if seq_from is not None and e.seq < seq_from:
                continue
            if seq_to is not None and e.seq > seq_to:
                continue
            out.append(e)
        return out

    def verify_chain(self) -> bool:
        prev = GENESIS_HASH
        for i, e in enumerate(self._events, start=1):
            if e.seq != i:
                return False
            body = event_body(e.seq, e.ts, e.actor, e.session, e.kind.value, e.payload)
            if chain_hash(prev, body) != e.chain:
                return False
            prev = e.chain
        return True

    # -- session reconstruction -------------------------------------------

    def session_events(self, session_id: str) -> list[TraceEvent]:
        events = self.query(session=session_id)
        if not events:
            raise UnknownSession(f"no trace for session {session_id!r}")
        return events

    def replay(self, session_id: str) -> list[tuple[int, str, str]]:
        """Human-readable timeline of one session, in trace order."""
        return [(e.ts, e.kind.value, summarize(e)) for e in self.session_events(session_id)]

    def verify_conformance(self, session_id: str, procedure) -> ConformanceReport:
        """Recompute conformance from trace events alone.

        Independent of the live workflow state: only StepReported/Deviation
        events and the procedure definition are consulted.
        """
        events = self.session_events(session_id)
        steps_total = len(procedure.steps)
        expected = 1
        deviations: list[dict[str, Any]] = []
        for e in events:
            if e.kind is EventKind.STEP_REPORTED:
                if e.payload.get("step_index") == expected:
                    expected += 1
            elif e.kind is EventKind.DEVIATION:
                deviations.append({
                    "step_index": e.payload.get("step_index"),
                    "deviations": list(e.payload.get("deviations", [])),
                })
        done_in_order = expected - 1
        conformant = not deviations and done_in_order == steps_total
        return ConformanceReport(
            session_id=session_id,
            steps_total=steps_total,
            steps_done_in_order=done_in_order,
            deviations=tuple(deviations),
            verdict=Verdict.CONFORMANT if conformant else Verdict.NON_CONFORMANT,
        )

    def to_file(self, path: str | Path) -> None:
        Path(path).write_text(
            "".join(event_line(e) + "\n" for e in self._events), encoding="utf-8")


def summarize(e: TraceEvent) -> str:
    p = e.payload
    if e.kind is EventKind.SCAN:
        state = "online" if p.get("online") else "offline"
        return f"tag {p.get('tag_id')} scanned {state} by {e.actor}"
    if e.kind is EventKind.SESSION_STARTED:
        return (f"session started by {e.actor} on {p.get('appliance_id')} "
                f"(procedure {p.get('procedure_id')}, {p.get('mode')})")
    if e.kind is EventKind.STEP_REPORTED:
        return f"step {p.get('step_index')} done"
    if e.kind is EventKind.DEVIATION:
        kinds = ",".join(p.get("deviations", []))
        accepted = "accepted" if p.get("accepted") else "rejected"
        return f"step {p.get('step_index')} deviation [{kinds}] ({accepted})"
    if e.kind is EventKind.UNIT_DELIVERED:
        return f"unit {p.get('unit_id')} delivered to {p.get('device_id')}"
    if e.kind is EventKind.TAG_WRITTEN:
        return f"tag {p.get('tag_id')} payload {p.get('op')} {p.get('key')}"
    if e.kind is EventKind.HELP_REQUESTED:
        return f"help requested: {p.get('problem')}"
    if e.kind is EventKind.MESSAGE:
        return f"message #{p.get('seq')} from {p.get('from_actor')}"
    if e.kind is EventKind.SESSION_CLOSED:
        return f"session closed: {p.get('reason')}"
    return e.kind.value


# -- offline trace-file verification ---------------------------------------

_LINE_KEYS = ("seq", "ts", "actor", "session", "kind", "payload", "chain")


def verify_trace_lines(lines: Iterable[str]) -> bool:
    """Recompute the hash chain over persisted lines.

    A line passes only if it is byte-identical to its own canonical
    re-serialization and its chain hash matches the recomputation; any single
    stored-byte mutation therefore fails the check.
    """
    prev = GENESIS_HASH
    expected_seq = 1
    for raw in lines:
        raw = raw.rstrip("\n")
        if not raw:
            continue
        try:
            parsed = json.loads(raw)
        except ValueError:
            return False
        if not isinstance(parsed, dict) or tuple(parsed.keys()) != _LINE_KEYS:
            return False
        if parsed["seq"] != expected_seq:
            return False
        try:
            body = event_body(parsed["seq"], parsed["ts"], parsed["actor"],
                              parsed["session"], parsed["kind"], parsed["payload"])
        except (TypeError, ValueError):
            return False
        expected_chain = chain_hash(prev, body)
        if parsed["chain"] != expected_chain:
            return False
        canonical_line = body[:-1] + ',"chain":' + json.dumps(parsed["chain"]) + "}"
        if raw != canonical_line:
            return False
        prev = expected_chain
        expected_seq += 1
    return True


def verify_trace_file(path: str | Path) -> bool:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError):
        return False
    return verify_trace_lines(text.splitlines())


def load_trace_file(path: str | Path) -> list[TraceEvent]:
    events = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        if not raw:
            continue
        d = json.loads(raw)
        events.append(TraceEvent(seq=d["seq"], ts=d["ts"], actor=d["actor"],
                                 session=d["session"], kind=EventKind(d["kind"]),
                                 payload=d["payload"], chain=d["chain"]))
    return events
