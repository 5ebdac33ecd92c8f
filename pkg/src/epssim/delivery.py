"""Context resolution and learning-unit delivery.

Links concrete working situations to stored units: a scan becomes a context
snapshot, the snapshot plus a learning mode becomes an ordered unit list, and
units are adapted to the capabilities of the actor's device before delivery.
Also hosts the simulated appliance endpoints and the three-way communication
link (suggestion only / command dispatch / full state exchange).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from enum import Enum

from .entities import EntityKind, EntityRef, EntityStore
from .errors import (EntityNotAppliance, LinkViolation, NoActiveSession,
                     SessionClosed, UnknownUnit)
from .knowledge import (KnowledgeStore, LearningFragment, LearningUnit, MediaKind,
                        Scope, Specificity, StepRef)
from .ledger import EventKind, Ledger, TraceEvent
from .tags import ScanResult
from .workflow import (Actor, DeviationKind, ProcedureRegistry, SessionManager,
                       SessionState, WorkSession)


class DisplayKind(str, Enum):
    INTEGRATED_SCREEN_GOGGLES = "IntegratedScreenGoggles"
    SEE_THROUGH_GOGGLES = "SeeThroughGoggles"
    TABLET = "Tablet"
    HANDHELD = "Handheld"


_HANDS_FREE_DISPLAYS = (DisplayKind.INTEGRATED_SCREEN_GOGGLES, DisplayKind.SEE_THROUGH_GOGGLES)


@dataclass(frozen=True)
class DeviceProfile:
    id: str
    display: DisplayKind
    max_media: frozenset[MediaKind]
    hands_free: bool

    def __post_init__(self):
        if not self.max_media:
            raise ValueError(f"device {self.id!r} must render at least one media kind")
        if self.display in _HANDS_FREE_DISPLAYS and not self.hands_free:
            raise ValueError(f"goggle display {self.id!r} must be hands-free")


class LearningMode(str, Enum):
    BEFORE_WORK = "BeforeWork"
    DURING_WORK = "DuringWork"
    AFTER_WORK = "AfterWork"


class LinkMode(str, Enum):
    NO_CONNECTION = "NoConnection"
    UNILATERAL = "Unilateral"
    BIDIRECTIONAL = "Bidirectional"


class CommandKind(str, Enum):
    SUGGEST = "suggest"
    DISPATCH = "dispatch"
    STATE_READ = "state-read"


@dataclass(frozen=True)
class ContextSnapshot:
    """Resolved working situation; built from a scan plus ledger reads only."""
    actor: Actor
    appliance: EntityRef
    model: str
    session: WorkSession | None
    history: tuple[TraceEvent, ...]
    network_online: bool
    in_situ: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class FragmentView:
    id: str
    media_kind: MediaKind
    body: str
    locator: str


@dataclass(frozen=True)
class Rendition:
    unit_id: str
    title: str
    fragments: tuple[FragmentView, ...]
    substitutions: tuple[dict, ...]


@dataclass(frozen=True)
class CommandOutcome:
    kind: str  # SuggestionOnly | Dispatched | DispatchedWithState | StateRead
    instruction: str | None = None
    state: dict | None = None


class SimulatedAppliance:
    """Tiny key-value state machine standing in for a real augmented appliance."""

    _TRANSITIONS = {
        "power-off": ("power", "off"),
        "power-on": ("power", "on"),
        "open-panel": ("panel", "open"),
        "close-panel": ("panel", "closed"),
        "clear-fault": ("fault", "none"),
        "raise-fault": ("fault", "raised"),
    }

    def __init__(self, entity_id: str):
        self.entity_id = entity_id
        self._state = {"power": "on", "panel": "closed", "fault": "none"}
        self._lock = threading.Lock()

    def apply(self, action: str) -> dict:
        with self._lock:
            transition = self._TRANSITIONS.get(action)
            if transition is not None:
                key, value = transition
                self._state[key] = value
            self._state["last_command"] = action
            return dict(self._state)

    def state(self) -> dict:
        with self._lock:
            return dict(self._state)


def deviation_topic(kind: DeviationKind) -> str:
    """Topic tag that AfterWork uses to pull remediation units for a deviation."""
    slugs = {
        DeviationKind.OUT_OF_ORDER: "out-of-order",
        DeviationKind.MISSING_TOOL: "missing-tool",
        DeviationKind.MISSING_PART: "missing-part",
        DeviationKind.INSUFFICIENT_ACCREDITATION: "insufficient-accreditation",
        DeviationKind.ALREADY_DONE: "already-done",
    }
    return f"deviation-{slugs[kind]}"


class DeliveryEngine:
    """Stateless over the shared stores; all mutation goes through the ledger
    (UnitDelivered events) and the per-appliance simulators."""

    def __init__(self, entities: EntityStore, knowledge: KnowledgeStore, ledger: Ledger,
                 sessions: SessionManager, procedures: ProcedureRegistry,
                 history_limit: int = 20):
        self.entities = entities
        self.knowledge = knowledge
        self.ledger = ledger
        self.sessions = sessions
        self.procedures = procedures
        self.history_limit = history_limit
        self._appliances: dict[str, SimulatedAppliance] = {}
        self._appliance_lock = threading.Lock()

    def appliance_sim(self, entity_id: str) -> SimulatedAppliance:
        with self._appliance_lock:
            sim = self._appliances.get(entity_id)
            if sim is None:
                sim = self._appliances[entity_id] = SimulatedAppliance(entity_id)
            return sim

    # -- context ---------------------------------------------------------------

    def resolve_context(self, scan: ScanResult, actor: Actor) -> ContextSnapshot:
        if scan.entity.kind is not EntityKind.APPLIANCE:
            raise EntityNotAppliance(
                f"context resolution needs an appliance tag, got "
                f"{scan.entity.kind.value} {scan.entity.entity_id!r}")
        if scan.resolved_online:
            model = (scan.central_record or {}).get("model", "")
            history = tuple(self._appliance_history(scan.entity.entity_id))
        else:
            model = scan.in_situ.get("model", "")
            history = ()
        return ContextSnapshot(
            actor=actor, appliance=scan.entity, model=model,
            session=self.sessions.active_for(actor.id, scan.entity.entity_id),
            history=history, network_online=scan.resolved_online,
            in_situ=dict(scan.in_situ))

    def context_for_session(self, session: WorkSession, network_online: bool = True) -> ContextSnapshot:
        """Context rebuilt from a known session, without a fresh tag scan."""
        record = self.entities.lookup(session.appliance)
        history = tuple(self._appliance_history(session.appliance.entity_id)) if network_online else ()
        return ContextSnapshot(
            actor=session.actor, appliance=session.appliance,
            model=record.model if record else session.procedure.appliance_model,
            session=session if session.state is SessionState.ACTIVE else None,
            history=history, network_online=network_online)

    def _appliance_history(self, entity_id: str) -> list[TraceEvent]:
        hits = [e for e in self.ledger.events()
                if e.payload.get("entity_id") == entity_id
                or e.payload.get("appliance_id") == entity_id]
        return hits[-self.history_limit:]

    # -- unit selection ----------------------------------------------------------

    def select_units(self, context: ContextSnapshot, mode: LearningMode) -> list[str]:
        if mode is LearningMode.BEFORE_WORK:
            return self._select_before(context)
        if mode is LearningMode.DURING_WORK:
            return self._select_during(context)
        return self._select_after(context)

    def _procedures_in_context(self, context: ContextSnapshot):
        if context.session is not None:
            return [context.session.procedure]
        return self.procedures.by_model(context.model)

    def _step_units(self, procedure_id: str, index: int) -> list[str]:
        ref = StepRef(procedure_id, index)
        return [u.id for u in self.knowledge.query_units(Scope.BOTH, step_ref=ref)
                if u.metadata.step_ref == ref]

    def _select_before(self, context: ContextSnapshot) -> list[str]:
        out: list[str] = []
        for proc in self._procedures_in_context(context):
            for step in proc.steps:
                _extend_unique(out, self._step_units(proc.id, step.index))
        generic = [u.id for u in self.knowledge.query_units(Scope.BOTH, model=context.model)
                   if u.metadata.step_ref is None
                   and u.metadata.specificity is Specificity.GENERIC]
        _extend_unique(out, generic)
        return out

    def _select_during(self, context: ContextSnapshot) -> list[str]:
        session = context.session
        if session is None or session.state is not SessionState.ACTIVE:
            raise NoActiveSession("just-in-time selection needs an active session")
        step = session.procedure.step(session.cursor)
        out = self._step_units(session.procedure.id, step.index)
        _extend_unique(out, [uid for uid in step.learning_unit_refs
                             if self.knowledge.has_unit(uid)])
        return out

    def _select_after(self, context: ContextSnapshot) -> list[str]:
        session_id = self._latest_session_id(context)
        if session_id is None:
            return []
        events = self.ledger.query(session=session_id)
        procedure_id = next((e.payload["procedure_id"] for e in events
                             if e.kind is EventKind.SESSION_STARTED), None)
        if procedure_id is None:
            return []
        out: list[str] = []
        deviation_kinds: list[str] = []
        for e in events:
            if e.kind is EventKind.STEP_REPORTED:
                _extend_unique(out, self._step_units(procedure_id, e.payload["step_index"]))
            elif e.kind is EventKind.DEVIATION:
                if e.payload.get("accepted") and e.payload.get("status") in (
                        "Done", "DoneOutOfOrder"):
                    _extend_unique(out, self._step_units(procedure_id, e.payload["step_index"]))
                for kind in e.payload.get("deviations", []):
                    if kind not in deviation_kinds:
                        deviation_kinds.append(kind)
        for kind in deviation_kinds:
            topic = deviation_topic(DeviationKind(kind))
            _extend_unique(out, [u.id for u in self.knowledge.query_units(Scope.BOTH)
                                 if topic in u.metadata.topics])
        return out

    def _latest_session_id(self, context: ContextSnapshot) -> str | None:
        if context.session is not None:
            return context.session.id
        latest = None
        for e in self.ledger.events():
            if (e.kind is EventKind.SESSION_STARTED
                    and e.actor == context.actor.id
                    and e.payload.get("appliance_id") == context.appliance.entity_id):
                latest = e.session
        return latest

    # -- adaptation and delivery ---------------------------------------------------

    def adapt(self, unit: LearningUnit, device: DeviceProfile) -> Rendition:
        fragments = [self.knowledge.get_fragment(fid) for fid in unit.fragments]
        text_fallback = next((f for f in fragments if f.media_kind is MediaKind.TEXT), None)
        included: list[FragmentView] = []
        substitutions: list[dict] = []
        for f in fragments:
            if f.media_kind is MediaKind.TEXT or f.media_kind in device.max_media:
                included.append(FragmentView(f.id, f.media_kind, f.body, f.source_locator))
            elif text_fallback is not None:
                substitutions.append({
                    "fragment_id": f.id, "media_kind": f.media_kind.value,
                    "reason": "text-fallback", "fallback_fragment_id": text_fallback.id})
            else:
                substitutions.append({
                    "fragment_id": f.id, "media_kind": f.media_kind.value,
                    "reason": "omitted"})
        return Rendition(unit_id=unit.id, title=unit.title,
                         fragments=tuple(included), substitutions=tuple(substitutions))

    def deliver(self, session: WorkSession, unit_ids, device: DeviceProfile) -> list[Rendition]:
        units = [self.knowledge.get_unit(uid) for uid in unit_ids]  # UnknownUnit before any event
        renditions = []
        for unit in units:
            rendition = self.adapt(unit, device)
            self.ledger.append(EventKind.UNIT_DELIVERED, {
                "unit_id": unit.id,
                "device_id": device.id,
                "appliance_id": session.appliance.entity_id,
            }, actor=session.actor.id, session=session.id)
            renditions.append(rendition)
        return renditions

    # -- enrichment -------------------------------------------------------------------

    def enrich_on_part(self, session: WorkSession, part: EntityRef) -> list[str]:
        record = self.entities.lookup(part)
        if record is None or part.kind is not EntityKind.PART:
            return []
        out = []
        for unit in self.knowledge.query_units(Scope.OPEN_KB):
            md = unit.metadata
            if (record.model and record.model in md.appliance_models) or (record.topics & md.topics):
                out.append(unit.id)
        return out

    # -- appliance communication ---------------------------------------------------------

    def appliance_command(self, session: WorkSession, link: LinkMode,
                          kind: CommandKind, action: str) -> CommandOutcome:
        if session.state is not SessionState.ACTIVE:
            raise SessionClosed(f"session {session.id} is {session.state.value}")
        if kind is CommandKind.SUGGEST:
            return CommandOutcome(kind="SuggestionOnly",
                                  instruction=f"{action.replace('-', ' ')} the appliance manually")
        if kind is CommandKind.DISPATCH:
            if link is LinkMode.NO_CONNECTION:
                raise LinkViolation("cannot dispatch a command over NoConnection")
            sim = self.appliance_sim(session.appliance.entity_id)
            state = sim.apply(action)
            if link is LinkMode.BIDIRECTIONAL:
                return CommandOutcome(kind="DispatchedWithState", state=state)
            return CommandOutcome(kind="Dispatched")
        # state read
        if link is not LinkMode.BIDIRECTIONAL:
            raise LinkViolation(f"state read requires a Bidirectional link, got {link.value}")
        return CommandOutcome(kind="StateRead",
                              state=self.appliance_sim(session.appliance.entity_id).state())


def _extend_unique(target: list[str], items) -> None:
    for item in items:
        if item not in target:
            target.append(item)
