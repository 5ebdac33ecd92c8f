"""Prescribed-procedure enforcement.

A work session walks an ordered step list under one of two modes: Strict
rejects any deviating report and leaves the session untouched; Advisory
accepts the work, records the deviations, and keeps the cursor on the lowest
still-pending step. Tool and part checks resolve scanned tag ids to their
bound entities and test set inclusion over the step's requirements — extra
scans are ignored.

Every report appends exactly one trace event: StepReported for a clean
report, Deviation otherwise.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from enum import Enum

from .entities import EntityKind, EntityRef
from .errors import (InsufficientAccreditation, MalformedProcedure, ModelMismatch,
                     SessionClosed, UnknownProcedure, UnknownStep)
from .ledger import EventKind, Ledger
from .knowledge import Expertise
from .tags import TagRegistry


class Accreditation(str, Enum):
    TRAINEE = "Trainee"
    TECHNICIAN = "Technician"
    SENIOR = "Senior"
    SUPERVISOR = "Supervisor"


ACCREDITATION_ORDER = {a: i for i, a in enumerate(Accreditation)}


def accreditation_at_least(actual: Accreditation, required: Accreditation) -> bool:
    return ACCREDITATION_ORDER[actual] >= ACCREDITATION_ORDER[required]


class SessionMode(str, Enum):
    STRICT = "Strict"
    ADVISORY = "Advisory"


class StepStatus(str, Enum):
    PENDING = "Pending"
    DONE = "Done"
    SKIPPED = "Skipped"
    DONE_OUT_OF_ORDER = "DoneOutOfOrder"


class SessionState(str, Enum):
    ACTIVE = "Active"
    COMPLETED = "Completed"
    ABORTED = "Aborted"


class DeviationKind(str, Enum):
    OUT_OF_ORDER = "OutOfOrder"
    MISSING_TOOL = "MissingTool"
    MISSING_PART = "MissingPart"
    INSUFFICIENT_ACCREDITATION = "InsufficientAccreditation"
    ALREADY_DONE = "AlreadyDone"


@dataclass(frozen=True)
class Actor:
    id: str
    name: str
    accreditation: Accreditation
    expertise: Expertise
    device: str


@dataclass(frozen=True)
class Step:
    index: int
    description: str
    required_tools: frozenset[EntityRef] = field(default_factory=frozenset)
    required_parts: frozenset[EntityRef] = field(default_factory=frozenset)
    required_accreditation: Accreditation = Accreditation.TRAINEE
    learning_unit_refs: tuple[str, ...] = ()


@dataclass(frozen=True)
class Procedure:
    id: str
    appliance_model: str
    title: str
    min_accreditation: Accreditation
    steps: tuple[Step, ...]

    def step(self, index: int) -> Step:
        if not 1 <= index <= len(self.steps):
            raise UnknownStep(f"procedure {self.id!r} has no step {index}")
        return self.steps[index - 1]


@dataclass(frozen=True)
class PrescribedAction:
    step: Step
    required_tools: frozenset[EntityRef]
    required_parts: frozenset[EntityRef]
    learning_unit_refs: tuple[str, ...]


@dataclass(frozen=True)
class StepOutcome:
    accepted: bool
    deviations: tuple[DeviationKind, ...]
    status: StepStatus
    cursor: int
    session_state: SessionState


@dataclass
class WorkSession:
    id: str
    actor: Actor
    appliance: EntityRef
    procedure: Procedure
    mode: SessionMode
    cursor: int = 1
    state: SessionState = SessionState.ACTIVE
    step_status: dict[int, StepStatus] = field(default_factory=dict)
    deviation_log: list[DeviationKind] = field(default_factory=list)
    in_order_count: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        if not self.step_status:
            self.step_status = {s.index: StepStatus.PENDING for s in self.procedure.steps}

    def all_done(self) -> bool:
        return all(s in (StepStatus.DONE, StepStatus.DONE_OUT_OF_ORDER)
                   for s in self.step_status.values())

    def live_conformant(self) -> bool:
        """Same predicate verify_conformance computes, but from live state."""
        return (self.state is SessionState.COMPLETED
                and not self.deviation_log
                and self.in_order_count == len(self.procedure.steps))


def build_procedure(definition: dict) -> Procedure:
    """Validate a parsed definition; indices must be 1..n with no gaps."""
    try:
        steps_raw = definition["steps"]
        proc_id = definition["id"]
        model = definition["appliance_model"]
    except KeyError as exc:
        raise MalformedProcedure(f"procedure definition missing field {exc}") from None
    if not steps_raw:
        raise MalformedProcedure(f"procedure {proc_id!r} has no steps")
    steps = []
    for raw in steps_raw:
        try:
            index = int(raw["index"])
            description = raw["description"]
        except (KeyError, TypeError, ValueError):
            raise MalformedProcedure(f"procedure {proc_id!r} has a malformed step entry") from None
        if not description:
            raise MalformedProcedure(f"step {index} of {proc_id!r} has an empty description")
        steps.append(Step(
            index=index,
            description=description,
            required_tools=frozenset(
                EntityRef(EntityKind.TOOL, t) for t in raw.get("required_tools", [])),
            required_parts=frozenset(
                EntityRef(EntityKind.PART, p) for p in raw.get("required_parts", [])),
            required_accreditation=Accreditation(raw.get("required_accreditation", "Trainee")),
            learning_unit_refs=tuple(raw.get("learning_unit_refs", [])),
        ))
    indices = [s.index for s in steps]
    if indices != list(range(1, len(steps) + 1)):
        raise MalformedProcedure(
            f"procedure {proc_id!r} step indices {indices} are not contiguous 1..n")
    return Procedure(
        id=proc_id,
        appliance_model=model,
        title=definition.get("title", proc_id),
        min_accreditation=Accreditation(definition.get("min_accreditation", "Trainee")),
        steps=tuple(steps),
    )


class ProcedureRegistry:
    def __init__(self):
        self._procedures: dict[str, Procedure] = {}

    def load(self, definition: dict) -> Procedure:
        proc = build_procedure(definition)
        self._procedures[proc.id] = proc
        return proc

    def add(self, procedure: Procedure) -> Procedure:
        self._procedures[procedure.id] = procedure
        return procedure

    def get(self, procedure_id: str) -> Procedure:
        proc = self._procedures.get(procedure_id)
        if proc is None:
            raise UnknownProcedure(f"procedure {procedure_id!r} is not loaded")
        return proc

    def has(self, procedure_id: str) -> bool:
        return procedure_id in self._procedures

    def has_step(self, procedure_id: str, index: int) -> bool:
        proc = self._procedures.get(procedure_id)
        return proc is not None and 1 <= index <= len(proc.steps)

    def by_model(self, model: str) -> list[Procedure]:
        return sorted((p for p in self._procedures.values() if p.appliance_model == model),
                      key=lambda p: p.id)

    def all(self) -> list[Procedure]:
        return sorted(self._procedures.values(), key=lambda p: p.id)


class SessionManager:
    def __init__(self, procedures: ProcedureRegistry, tags: TagRegistry, ledger: Ledger):
        self.procedures = procedures
        self.tags = tags
        self.ledger = ledger
        self._sessions: dict[str, WorkSession] = {}
        self._counter = 0
        self._lock = threading.Lock()

    def start_session(self, actor: Actor, appliance: EntityRef, procedure: Procedure,
                      mode: SessionMode) -> WorkSession:
        if not accreditation_at_least(actor.accreditation, procedure.min_accreditation):
            raise InsufficientAccreditation(
                f"{actor.id} is {actor.accreditation.value}; procedure {procedure.id!r} "
                f"requires {procedure.min_accreditation.value}")
        record = self.tags.entities.lookup(appliance)
        model = record.model if record is not None else ""
        if appliance.kind is not EntityKind.APPLIANCE or model != procedure.appliance_model:
            raise ModelMismatch(
                f"procedure {procedure.id!r} targets model {procedure.appliance_model!r}, "
                f"got {appliance.kind.value} {appliance.entity_id!r} (model {model!r})")
        with self._lock:
            self._counter += 1
            session = WorkSession(id=f"S{self._counter}", actor=actor,
                                  appliance=appliance, procedure=procedure, mode=mode)
            self._sessions[session.id] = session
        self.ledger.append(EventKind.SESSION_STARTED, {
            "procedure_id": procedure.id,
            "appliance_id": appliance.entity_id,
            "mode": mode.value,
            "steps_total": len(procedure.steps),
        }, actor=actor.id, session=session.id)
        return session

    def get(self, session_id: str) -> WorkSession:
        session = self._sessions.get(session_id)
        if session is None:
            from .errors import UnknownSession
            raise UnknownSession(f"session {session_id!r} does not exist")
        return session

    def all(self) -> list[WorkSession]:
        return list(self._sessions.values())

    def active_for(self, actor_id: str, appliance_id: str) -> WorkSession | None:
        for session in self._sessions.values():
            if (session.state is SessionState.ACTIVE
                    and session.actor.id == actor_id
                    and session.appliance.entity_id == appliance_id):
                return session
        return None

    def current_prescription(self, session: WorkSession) -> PrescribedAction:
        if session.state is not SessionState.ACTIVE:
            raise SessionClosed(f"session {session.id} is {session.state.value}")
        step = session.procedure.step(session.cursor)
        return PrescribedAction(step=step, required_tools=step.required_tools,
                                required_parts=step.required_parts,
                                learning_unit_refs=step.learning_unit_refs)

    def report_step(self, session: WorkSession, step_index: int,
                    scanned_tool_tags=(), scanned_part_tags=()) -> StepOutcome:
        with session._lock:
            if session.state is not SessionState.ACTIVE:
                raise SessionClosed(f"session {session.id} is {session.state.value}")
            step = session.procedure.step(step_index)  # raises UnknownStep out of range

            deviations: list[DeviationKind] = []
            if step_index != session.cursor:
                deviations.append(DeviationKind.OUT_OF_ORDER)
            if session.step_status[step_index] is not StepStatus.PENDING:
                deviations.append(DeviationKind.ALREADY_DONE)
            tools = self.tags.resolve_entities(scanned_tool_tags, EntityKind.TOOL)
            parts = self.tags.resolve_entities(scanned_part_tags, EntityKind.PART)
            if not step.required_tools <= tools:
                deviations.append(DeviationKind.MISSING_TOOL)
            if not step.required_parts <= parts:
                deviations.append(DeviationKind.MISSING_PART)
            if not accreditation_at_least(session.actor.accreditation, step.required_accreditation):
                deviations.append(DeviationKind.INSUFFICIENT_ACCREDITATION)

            if not deviations:
                session.step_status[step_index] = StepStatus.DONE
                if step_index == session.in_order_count + 1:
                    session.in_order_count += 1
                self._advance(session)
                outcome = StepOutcome(True, (), StepStatus.DONE, session.cursor, session.state)
                self.ledger.append(EventKind.STEP_REPORTED, {
                    "step_index": step_index,
                    "accepted": True,
                    "status": StepStatus.DONE.value,
                }, actor=session.actor.id, session=session.id)
                return outcome

            session.deviation_log.extend(deviations)
            if session.mode is SessionMode.STRICT:
                status = session.step_status[step_index]
                self.ledger.append(EventKind.DEVIATION, {
                    "step_index": step_index,
                    "accepted": False,
                    "deviations": [d.value for d in deviations],
                    "status": status.value,
                }, actor=session.actor.id, session=session.id)
                return StepOutcome(False, tuple(deviations), status, session.cursor, session.state)

            # advisory: the work happened; record it and keep going
            if session.step_status[step_index] is StepStatus.PENDING:
                status = (StepStatus.DONE if step_index == session.cursor
                          else StepStatus.DONE_OUT_OF_ORDER)
                session.step_status[step_index] = status
                if status is StepStatus.DONE and step_index == session.in_order_count + 1:
                    session.in_order_count += 1
            else:
                status = session.step_status[step_index]
            self._advance(session)
            self.ledger.append(EventKind.DEVIATION, {
                "step_index": step_index,
                "accepted": True,
                "deviations": [d.value for d in deviations],
                "status": status.value,
            }, actor=session.actor.id, session=session.id)
            return StepOutcome(True, tuple(deviations), status, session.cursor, session.state)

    def _advance(self, session: WorkSession) -> None:
        pending = [i for i, s in session.step_status.items() if s is StepStatus.PENDING]
        if pending:
            session.cursor = min(pending)
        else:
            session.cursor = len(session.procedure.steps) + 1
            session.state = SessionState.COMPLETED

    def abort_session(self, session: WorkSession, reason: str) -> WorkSession:
        with session._lock:
            if session.state is not SessionState.ACTIVE:
                raise SessionClosed(f"session {session.id} is {session.state.value}")
            session.state = SessionState.ABORTED
        self.ledger.append(EventKind.SESSION_CLOSED, {
            "reason": reason,
            "final_state": SessionState.ABORTED.value,
        }, actor=session.actor.id, session=session.id)
        return session
