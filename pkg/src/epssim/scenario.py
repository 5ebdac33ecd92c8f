"""Deterministic scripted runs.

A script declares the fixtures it may touch and an ordered action list; the
harness validates everything up front (no state is changed on a malformed
script), executes the actions through the same module operations the HTTP
facade calls, and then derives the report purely from the ledger. Two runs of
the same script from a clean store produce byte-identical trace files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .collab import MessageKind
from .delivery import CommandKind, LearningMode, LinkMode
from .errors import ScriptError
from .fixtures import FixtureSet, ScenarioScript, load_fixture_dir
from .ledger import EventKind, Ledger
from .system import DEFAULT_FIXTURES, System
from .workflow import ProcedureRegistry, SessionMode

_ACTIONS = ("scan", "set-network", "start-session", "report-step", "request-units",
            "request-help", "post-message", "appliance-command", "abort")


@dataclass
class ScenarioReport:
    script: str
    sessions: list[dict]
    chain_verified: bool
    delivered_units: list[str]

    def to_dict(self) -> dict:
        return {
            "script": self.script,
            "sessions": self.sessions,
            "chain_verified": self.chain_verified,
            "delivered_units": self.delivered_units,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=True) + "\n"


def validate_script(script: ScenarioScript, fixtures: FixtureSet) -> None:
    """Reject undeclared fixture references and malformed actions up front."""
    available = {
        "tags": {t.tag_id for t in fixtures.tags},
        "procedures": set(fixtures.procedures),
        "manifests": set(fixtures.manifests),
        "actors": set(fixtures.actors),
        "devices": set(fixtures.devices),
    }
    for kind, ids in script.declared.items():
        missing = [i for i in ids if i not in available[kind]]
        if missing:
            raise ScriptError(f"script {script.name!r} declares unknown {kind}: {missing}")

    declared_entities = {t.entity.entity_id for t in fixtures.tags
                         if t.tag_id in script.declared["tags"]}

    def need(kind: str, value, position: int):
        if value not in script.declared[kind]:
            raise ScriptError(
                f"script {script.name!r} action {position}: {kind[:-1]} {value!r} not declared")

    for position, action in enumerate(script.actions, start=1):
        name = action.get("action")
        if name not in _ACTIONS:
            raise ScriptError(f"script {script.name!r} action {position}: unknown action {name!r}")
        try:
            if name == "scan":
                need("actors", action["actor"], position)
                need("tags", action["tag"], position)
            elif name == "set-network":
                if not isinstance(action["online"], bool):
                    raise ScriptError(
                        f"script {script.name!r} action {position}: online must be a boolean")
            elif name == "start-session":
                need("actors", action["actor"], position)
                need("procedures", action["procedure"], position)
                SessionMode(action.get("mode", "Strict"))
                if action["appliance"] not in declared_entities:
                    raise ScriptError(
                        f"script {script.name!r} action {position}: appliance "
                        f"{action['appliance']!r} is not bound to any declared tag")
            elif name == "report-step":
                int(action["step"])
                for tag in list(action.get("tools", [])) + list(action.get("parts", [])):
                    need("tags", tag, position)
            elif name == "request-units":
                LearningMode(action["mode"])
                if "device" in action:
                    need("devices", action["device"], position)
            elif name == "request-help":
                if not action.get("problem"):
                    raise ScriptError(
                        f"script {script.name!r} action {position}: request-help needs a problem")
            elif name == "post-message":
                need("actors", action["from"], position)
            elif name == "appliance-command":
                LinkMode(action["link"])
                CommandKind(action["kind"])
                if not action.get("command"):
                    raise ScriptError(
                        f"script {script.name!r} action {position}: appliance-command needs a command")
            elif name == "abort":
                pass
        except KeyError as exc:
            raise ScriptError(
                f"script {script.name!r} action {position} ({name}): missing field {exc}") from None
        except ValueError as exc:
            raise ScriptError(
                f"script {script.name!r} action {position} ({name}): {exc}") from None


class ScenarioRunner:
    """Executes one validated script against a fresh system."""

    def __init__(self, system: System):
        self.system = system
        self.network_online = True
        self.current_session = None
        self.current_request = None

    def execute(self, script: ScenarioScript) -> None:
        for action in script.actions:
            getattr(self, "_do_" + action["action"].replace("-", "_"))(action)

    def _session(self, action):
        if self.current_session is None:
            raise ScriptError(f"action {action['action']!r} needs a started session")
        return self.current_session

    def _do_scan(self, action):
        self.system.tags.scan(action["actor"], action["tag"], self.network_online)

    def _do_set_network(self, action):
        self.network_online = action["online"]

    def _do_start_session(self, action):
        system = self.system
        actor = system.actor(action["actor"])
        appliance = system.entities.get(action["appliance"]).ref
        procedure = system.procedures.get(action["procedure"])
        self.current_session = system.sessions.start_session(
            actor, appliance, procedure, SessionMode(action.get("mode", "Strict")))

    def _do_report_step(self, action):
        self.system.sessions.report_step(
            self._session(action), int(action["step"]),
            tuple(action.get("tools", [])), tuple(action.get("parts", [])))

    def _do_request_units(self, action):
        session = self._session(action)
        system = self.system
        device = system.device(action["device"]) if "device" in action \
            else system.device_for(session.actor)
        context = system.delivery.context_for_session(session, self.network_online)
        for unit_id in system.delivery.select_units(context, LearningMode(action["mode"])):
            system.delivery.deliver(session, [unit_id], device)

    def _do_request_help(self, action):
        self.current_request = self.system.helpdesk.request_help(
            self._session(action), action["problem"])

    def _do_post_message(self, action):
        if self.current_request is None:
            raise ScriptError("post-message needs a prior request-help")
        self.system.helpdesk.post_message(
            self.current_request.id, action["from"],
            MessageKind(action.get("kind", "Text")), action.get("body", ""),
            step_index=action.get("step"), unit_id=action.get("unit"))

    def _do_appliance_command(self, action):
        self.system.delivery.appliance_command(
            self._session(action), LinkMode(action["link"]),
            CommandKind(action["kind"]), action["command"])

    def _do_abort(self, action):
        self.system.sessions.abort_session(self._session(action), action.get("reason", ""))


def reconstruct_sessions(ledger: Ledger, procedures: ProcedureRegistry) -> list[dict]:
    """Final session states and conformance, derived from trace events alone."""
    started: dict[str, dict] = {}
    for e in ledger.events():
        if e.kind is EventKind.SESSION_STARTED:
            started[e.session] = {"procedure_id": e.payload["procedure_id"],
                                  "steps_total": e.payload["steps_total"],
                                  "done": set(), "aborted": False}
        elif e.kind is EventKind.STEP_REPORTED and e.session in started:
            started[e.session]["done"].add(e.payload["step_index"])
        elif e.kind is EventKind.DEVIATION and e.session in started:
            if e.payload.get("accepted") and e.payload.get("status") in ("Done", "DoneOutOfOrder"):
                started[e.session]["done"].add(e.payload["step_index"])
        elif e.kind is EventKind.SESSION_CLOSED and e.session in started:
            if e.payload.get("final_state") == "Aborted":
                started[e.session]["aborted"] = True

    out = []
    for session_id, info in started.items():
        if info["aborted"]:
            state = "Aborted"
        elif len(info["done"]) == info["steps_total"]:
            state = "Completed"
        else:
            state = "Active"
        report = ledger.verify_conformance(session_id, procedures.get(info["procedure_id"]))
        out.append({"session_id": session_id, "state": state,
                    "conformance": report.to_dict()})
    return out


def execute_script(script: ScenarioScript | str,
                   fixtures: FixtureSet | str | Path | None = None,
                   trace_path: str | Path | None = None) -> tuple[ScenarioReport, System]:
    if not isinstance(fixtures, FixtureSet):
        fixtures = load_fixture_dir(fixtures or DEFAULT_FIXTURES)
    if isinstance(script, str):
        script = fixtures.script(script)
    validate_script(script, fixtures)

    system = System(trace_path=trace_path)
    system.load(fixtures)
    ScenarioRunner(system).execute(script)

    delivered = [e.payload["unit_id"]
                 for e in system.ledger.query(kind=EventKind.UNIT_DELIVERED)]
    report = ScenarioReport(
        script=script.name,
        sessions=reconstruct_sessions(system.ledger, system.procedures),
        chain_verified=system.ledger.verify_chain(),
        delivered_units=delivered,
    )
    return report, system


def run_scenario(script: ScenarioScript | str,
                 fixtures: FixtureSet | str | Path | None = None,
                 trace_path: str | Path | None = None) -> ScenarioReport:
    report, _ = execute_script(script, fixtures, trace_path)
    return report
