"""Remote-expert help channel: per-session help requests with an ordered
message thread. Retrieval is poll-based; pushes are a transport concern the
UI may layer on top."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from enum import Enum

from .errors import (AlreadyClaimed, DanglingReference, RequestClosed,
                     SessionClosed, UnknownRequest)
from .knowledge import KnowledgeStore
from .ledger import EventKind, Ledger
from .workflow import SessionState, WorkSession


class HelpStatus(str, Enum):
    OPEN = "Open"
    CLAIMED = "Claimed"
    CLOSED = "Closed"


class MessageKind(str, Enum):
    TEXT = "Text"
    STEP_ANNOTATION = "StepAnnotation"
    UNIT_POINTER = "UnitPointer"


@dataclass(frozen=True)
class Message:
    seq: int
    from_actor: str
    kind: MessageKind
    body: str
    step_index: int | None = None
    unit_id: str | None = None


@dataclass
class HelpRequest:
    id: str
    session_id: str
    problem_text: str
    status: HelpStatus = HelpStatus.OPEN
    claimed_by: str | None = None
    messages: list[Message] = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


class HelpDesk:
    def __init__(self, ledger: Ledger, knowledge: KnowledgeStore):
        self.ledger = ledger
        self.knowledge = knowledge
        self._requests: dict[str, HelpRequest] = {}
        self._sessions: dict[str, WorkSession] = {}
        self._counter = 0
        self._lock = threading.Lock()

    def request_help(self, session: WorkSession, problem_text: str) -> HelpRequest:
        if session.state is not SessionState.ACTIVE:
            raise SessionClosed(f"session {session.id} is {session.state.value}")
        with self._lock:
            self._counter += 1
            request = HelpRequest(id=f"H{self._counter}", session_id=session.id,
                                  problem_text=problem_text)
            self._requests[request.id] = request
            self._sessions[request.id] = session
        self.ledger.append(EventKind.HELP_REQUESTED, {
            "request_id": request.id,
            "problem": problem_text,
        }, actor=session.actor.id, session=session.id)
        return request

    def get(self, request_id: str) -> HelpRequest:
        request = self._requests.get(request_id)
        if request is None:
            raise UnknownRequest(f"help request {request_id!r} does not exist")
        return request

    def claim(self, request_id: str, expert_actor: str) -> HelpRequest:
        request = self.get(request_id)
        with request._lock:
            if request.status is HelpStatus.CLOSED:
                raise RequestClosed(f"request {request.id} is closed")
            if request.status is HelpStatus.CLAIMED:
                raise AlreadyClaimed(f"request {request.id} already claimed by {request.claimed_by}")
            request.status = HelpStatus.CLAIMED
            request.claimed_by = expert_actor
        return request

    def post_message(self, request_id: str, from_actor: str, kind: MessageKind,
                     body: str, step_index: int | None = None,
                     unit_id: str | None = None) -> Message:
        request = self.get(request_id)
        session = self._sessions[request_id]
        if kind is MessageKind.STEP_ANNOTATION:
            if step_index is None or not 1 <= step_index <= len(session.procedure.steps):
                raise DanglingReference(
                    f"annotation references step {step_index} outside procedure "
                    f"{session.procedure.id!r}")
        if kind is MessageKind.UNIT_POINTER:
            if unit_id is None or not self.knowledge.has_unit(unit_id):
                raise DanglingReference(f"pointer references unknown unit {unit_id!r}")
        with request._lock:
            if request.status is HelpStatus.CLOSED:
                raise RequestClosed(f"request {request.id} is closed")
            message = Message(seq=len(request.messages) + 1, from_actor=from_actor,
                              kind=kind, body=body, step_index=step_index, unit_id=unit_id)
            request.messages.append(message)
        self.ledger.append(EventKind.MESSAGE, {
            "request_id": request.id,
            "seq": message.seq,
            "from_actor": from_actor,
            "kind": kind.value,
            "body": body,
            "step_index": step_index,
            "unit_id": unit_id,
        }, actor=from_actor, session=request.session_id)
        return message

    def close(self, request_id: str) -> HelpRequest:
        request = self.get(request_id)
        with request._lock:
            if request.status is HelpStatus.CLOSED:
                raise RequestClosed(f"request {request.id} is already closed")
            request.status = HelpStatus.CLOSED
        return request

    def poll_messages(self, request_id: str, after_seq: int = 0) -> list[Message]:
        request = self.get(request_id)
        return [m for m in request.messages if m.seq > after_seq]
