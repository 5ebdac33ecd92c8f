"""HTTP facade over the assembled system.

Thin by design: endpoints parse JSON, call the same module operations the
scenario harness uses, and serialize the results. Domain errors surface as
4xx responses with a stable machine-readable body: {"code", "message"}.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import lom_xml
from .collab import HelpRequest, Message, MessageKind
from .delivery import CommandKind, LearningMode, LinkMode, Rendition
from .entities import EntityRef
from .errors import ApplianceMismatch, EpssError
from .knowledge import Expertise, LearningUnit, Scope, StepRef, TaskCategory
from .ledger import EventKind, TraceEvent
from .system import System
from .tags import RfidTag, ScanResult
from .workflow import PrescribedAction, SessionMode, StepOutcome, WorkSession

STATUS_BY_CODE = {
    "UnknownTag": 404, "UnknownEntity": 404, "UnknownUnit": 404, "UnknownSession": 404,
    "UnknownStep": 404, "UnknownProcedure": 404, "UnknownActor": 404, "UnknownDevice": 404,
    "UnknownRequest": 404,
    "InsufficientAccreditation": 403,
    "DuplicateTag": 409, "DuplicateLocator": 409, "ModelMismatch": 409, "SessionClosed": 409,
    "AlreadyClaimed": 409, "RequestClosed": 409, "EntityNotAppliance": 409,
    "NoActiveSession": 409, "LinkViolation": 409, "ApplianceMismatch": 409,
    "ConflictingSuggestions": 409, "DanglingFragment": 409, "DanglingReference": 409,
    "CapacityExceeded": 400, "InvalidPayload": 400, "EmptyManifest": 400,
    "MalformedProcedure": 400, "SchemaViolation": 400, "ScriptError": 400,
}


# -- wire serialization -------------------------------------------------------

def entity_to_dict(ref: EntityRef) -> dict:
    return {"kind": ref.kind.value, "entity_id": ref.entity_id}


def tag_to_dict(tag: RfidTag) -> dict:
    return {"tag_id": tag.id, "entity": entity_to_dict(tag.bound_entity),
            "capacity_bytes": tag.capacity_bytes, "payload": dict(tag.payload)}


def scan_to_dict(scan: ScanResult) -> dict:
    return {"tag_id": scan.tag_id, "entity": entity_to_dict(scan.entity),
            "in_situ": dict(scan.in_situ), "central_record": scan.central_record,
            "resolved_online": scan.resolved_online}


def unit_to_dict(unit: LearningUnit) -> dict:
    md = unit.metadata
    return {
        "id": unit.id, "title": unit.title, "fragments": list(unit.fragments),
        "metadata": {
            "expertise": md.expertise.value,
            "task_category": md.task_category.value,
            "appliance_models": sorted(md.appliance_models),
            "step_ref": ({"procedure": md.step_ref.procedure_id, "index": md.step_ref.index}
                         if md.step_ref else None),
            "specificity": md.specificity.value,
            "protection": md.protection.value,
            "topics": sorted(md.topics),
        },
    }


def rendition_to_dict(r: Rendition) -> dict:
    return {"unit_id": r.unit_id, "title": r.title,
            "fragments": [{"id": f.id, "media_kind": f.media_kind.value,
                           "body": f.body, "locator": f.locator} for f in r.fragments],
            "substitutions": [dict(s) for s in r.substitutions]}


def session_to_dict(session: WorkSession) -> dict:
    return {
        "id": session.id,
        "actor_id": session.actor.id,
        "appliance": entity_to_dict(session.appliance),
        "procedure_id": session.procedure.id,
        "procedure_title": session.procedure.title,
        "mode": session.mode.value,
        "cursor": session.cursor,
        "state": session.state.value,
        "steps": [{
            "index": s.index,
            "description": s.description,
            "status": session.step_status[s.index].value,
            "required_tools": sorted(t.entity_id for t in s.required_tools),
            "required_parts": sorted(p.entity_id for p in s.required_parts),
            "required_accreditation": s.required_accreditation.value,
            "learning_unit_refs": list(s.learning_unit_refs),
        } for s in session.procedure.steps],
    }


def prescription_to_dict(p: PrescribedAction) -> dict:
    return {
        "step": {"index": p.step.index, "description": p.step.description,
                 "required_accreditation": p.step.required_accreditation.value},
        "required_tools": sorted(t.entity_id for t in p.required_tools),
        "required_parts": sorted(t.entity_id for t in p.required_parts),
        "learning_unit_refs": list(p.learning_unit_refs),
    }


def outcome_to_dict(o: StepOutcome) -> dict:
    return {"accepted": o.accepted, "deviations": [d.value for d in o.deviations],
            "status": o.status.value, "cursor": o.cursor,
            "session_state": o.session_state.value}


def event_to_dict(e: TraceEvent) -> dict:
    return {"seq": e.seq, "ts": e.ts, "actor": e.actor, "session": e.session,
            "kind": e.kind.value, "payload": e.payload, "chain": e.chain}


def help_to_dict(r: HelpRequest) -> dict:
    return {"id": r.id, "session_id": r.session_id, "problem_text": r.problem_text,
            "status": r.status.value, "claimed_by": r.claimed_by,
            "message_count": len(r.messages)}


def message_to_dict(m: Message) -> dict:
    return {"seq": m.seq, "from_actor": m.from_actor, "kind": m.kind.value,
            "body": m.body, "step_index": m.step_index, "unit_id": m.unit_id}


# -- request bodies --------------------------------------------------------------

class StartSessionBody(BaseModel):
    actor_id: str
    appliance_id: str
    procedure_id: str
    mode: str = "Strict"


class ReportStepBody(BaseModel):
    step_index: int
    tool_tags: list[str] = []
    part_tags: list[str] = []


class ScanBody(BaseModel):
    actor_id: str
    tag_id: str
    online: bool = True


class TagPayloadBody(BaseModel):
    op: str = "write"  # write | erase
    key: str
    value: Optional[str] = None
    actor_id: str = "system"


class AbortBody(BaseModel):
    reason: str = ""


class HelpBody(BaseModel):
    problem: str


class ClaimBody(BaseModel):
    expert_id: str


class MessageBody(BaseModel):
    from_actor: str
    kind: str = "Text"
    body: str = ""
    step_index: Optional[int] = None
    unit_id: Optional[str] = None


class CommandBody(BaseModel):
    session_id: str
    link: str
    kind: str
    command: str


def create_app(system: System | None = None, fixture_dir=None, clock=None) -> FastAPI:
    if system is None:
        system = System.from_fixtures(fixture_dir, clock=clock)

    app = FastAPI(title="epssim service", version="0.1.0")
    app.state.system = system
    # the technician console is a static page; no auth by design (see Non-goals)
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(EpssError)
    async def _domain_error(_: Request, exc: EpssError):
        return JSONResponse(status_code=STATUS_BY_CODE.get(exc.code, 409),
                            content={"code": exc.code, "message": exc.message})

    @app.exception_handler(ValueError)
    async def _value_error(_: Request, exc: ValueError):
        return JSONResponse(status_code=400,
                            content={"code": "InvalidRequest", "message": str(exc)})

    # -- sessions ----------------------------------------------------------

    @app.post("/sessions", status_code=201)
    def start_session(body: StartSessionBody):
        actor = system.actor(body.actor_id)
        appliance = system.entities.get(body.appliance_id).ref
        procedure = system.procedures.get(body.procedure_id)
        session = system.sessions.start_session(actor, appliance, procedure,
                                                SessionMode(body.mode))
        return session_to_dict(session)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return session_to_dict(system.sessions.get(session_id))

    @app.get("/sessions/{session_id}/prescription")
    def get_prescription(session_id: str):
        session = system.sessions.get(session_id)
        return prescription_to_dict(system.sessions.current_prescription(session))

    @app.post("/sessions/{session_id}/steps")
    def report_step(session_id: str, body: ReportStepBody):
        session = system.sessions.get(session_id)
        outcome = system.sessions.report_step(session, body.step_index,
                                              tuple(body.tool_tags), tuple(body.part_tags))
        return outcome_to_dict(outcome)

    @app.post("/sessions/{session_id}/abort")
    def abort_session(session_id: str, body: AbortBody):
        session = system.sessions.get(session_id)
        return session_to_dict(system.sessions.abort_session(session, body.reason))

    @app.get("/sessions/{session_id}/conformance")
    def conformance(session_id: str):
        session = system.sessions.get(session_id)
        return system.ledger.verify_conformance(session_id, session.procedure).to_dict()

    @app.get("/sessions/{session_id}/replay")
    def replay(session_id: str):
        timeline = system.ledger.replay(session_id)
        return {"session_id": session_id,
                "timeline": [{"ts": ts, "kind": kind, "summary": summary}
                             for ts, kind, summary in timeline]}

    # -- tags ------------------------------------------------------------------

    @app.post("/scans")
    def scan(body: ScanBody):
        return scan_to_dict(system.tags.scan(body.actor_id, body.tag_id, body.online))

    @app.post("/tags/{tag_id}/payload")
    def tag_payload(tag_id: str, body: TagPayloadBody):
        if body.op == "erase":
            tag = system.tags.erase(tag_id, body.key, actor_id=body.actor_id)
        elif body.op == "write":
            tag = system.tags.write(tag_id, body.key, body.value or "", actor_id=body.actor_id)
        else:
            raise ValueError(f"op must be 'write' or 'erase', got {body.op!r}")
        return tag_to_dict(tag)

    @app.get("/tags")
    def list_tags():
        return {"tags": [tag_to_dict(t) for t in system.tags.all_tags()]}

    # -- knowledge ----------------------------------------------------------------

    @app.get("/units")
    def units(scope: str = "OpenKB", model: Optional[str] = None,
              task_category: Optional[str] = None, expertise_max: Optional[str] = None,
              step_procedure: Optional[str] = None, step_index: Optional[int] = None,
              mode: Optional[str] = None, session_id: Optional[str] = None,
              online: bool = True):
        if mode is not None:
            if session_id is None:
                raise ValueError("mode queries require session_id")
            session = system.sessions.get(session_id)
            context = system.delivery.context_for_session(session, online)
            ids = system.delivery.select_units(context, LearningMode(mode))
            return {"units": [unit_to_dict(system.knowledge.get_unit(uid)) for uid in ids]}
        step_ref = None
        if step_procedure is not None and step_index is not None:
            step_ref = StepRef(step_procedure, step_index)
        found = system.knowledge.query_units(
            Scope(scope), model=model,
            task_category=TaskCategory(task_category) if task_category else None,
            expertise_max=Expertise(expertise_max) if expertise_max else None,
            step_ref=step_ref)
        return {"units": [unit_to_dict(u) for u in found]}

    @app.get("/units/{unit_id}/rendition")
    def rendition(unit_id: str, device: str, session: Optional[str] = None):
        profile = system.device(device)
        if session is not None:
            live = system.sessions.get(session)
            return rendition_to_dict(system.delivery.deliver(live, [unit_id], profile)[0])
        return rendition_to_dict(system.delivery.adapt(system.knowledge.get_unit(unit_id), profile))

    @app.get("/units/{unit_id}/xml")
    def unit_xml(unit_id: str):
        return JSONResponse(content={"unit_id": unit_id,
                                     "xml": lom_xml.export_unit(system.knowledge, unit_id)})

    # -- help channel ----------------------------------------------------------------

    @app.post("/sessions/{session_id}/help", status_code=201)
    def request_help(session_id: str, body: HelpBody):
        session = system.sessions.get(session_id)
        return help_to_dict(system.helpdesk.request_help(session, body.problem))

    @app.get("/help/{request_id}")
    def get_help(request_id: str):
        return help_to_dict(system.helpdesk.get(request_id))

    @app.post("/help/{request_id}/claim")
    def claim_help(request_id: str, body: ClaimBody):
        return help_to_dict(system.helpdesk.claim(request_id, body.expert_id))

    @app.post("/help/{request_id}/close")
    def close_help(request_id: str):
        return help_to_dict(system.helpdesk.close(request_id))

    @app.post("/help/{request_id}/messages", status_code=201)
    def post_message(request_id: str, body: MessageBody):
        message = system.helpdesk.post_message(
            request_id, body.from_actor, MessageKind(body.kind), body.body,
            step_index=body.step_index, unit_id=body.unit_id)
        return message_to_dict(message)

    @app.get("/help/{request_id}/messages")
    def poll_messages(request_id: str, after: int = 0):
        request = system.helpdesk.get(request_id)
        return {"status": request.status.value,
                "messages": [message_to_dict(m)
                             for m in system.helpdesk.poll_messages(request_id, after)]}

    # -- trace ------------------------------------------------------------------------

    @app.get("/trace")
    def trace(actor: Optional[str] = None, session: Optional[str] = None,
              kind: Optional[str] = None, seq_from: Optional[int] = None,
              seq_to: Optional[int] = None):
        events = system.ledger.query(
            actor=actor, session=session,
            kind=EventKind(kind) if kind else None,
            seq_from=seq_from, seq_to=seq_to)
        return {"events": [event_to_dict(e) for e in events]}

    @app.get("/trace/verify")
    def trace_verify():
        return {"valid": system.ledger.verify_chain(), "events": len(system.ledger)}

    # -- appliance communication ---------------------------------------------------------

    @app.post("/appliances/{appliance_id}/command")
    def appliance_command(appliance_id: str, body: CommandBody):
        session = system.sessions.get(body.session_id)
        if session.appliance.entity_id != appliance_id:
            raise ApplianceMismatch(
                f"session {session.id} works on {session.appliance.entity_id!r}, "
                f"not {appliance_id!r}")
        outcome = system.delivery.appliance_command(
            session, LinkMode(body.link), CommandKind(body.kind), body.command)
        return {"kind": outcome.kind, "instruction": outcome.instruction,
                "state": outcome.state}

    # -- console support (read-only fixture listings) --------------------------------------

    @app.get("/actors")
    def list_actors():
        return {"actors": [{"id": a.id, "name": a.name,
                            "accreditation": a.accreditation.value,
                            "expertise": a.expertise.value, "device": a.device}
                           for a in system.actors.values()]}

    @app.get("/procedures")
    def list_procedures():
        return {"procedures": [{"id": p.id, "title": p.title,
                                "appliance_model": p.appliance_model,
                                "min_accreditation": p.min_accreditation.value,
                                "steps_total": len(p.steps)}
                               for p in system.procedures.all()]}

    @app.get("/devices")
    def list_devices():
        return {"devices": [{"id": d.id, "display": d.display.value,
                             "max_media": sorted(m.value for m in d.max_media),
                             "hands_free": d.hands_free}
                            for d in system.devices.values()]}

    return app
