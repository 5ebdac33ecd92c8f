"""Wires the stores and engines into one deployment.

Construction order matters: entities and tags first, then procedures, then
manifests (step links validate against loaded procedures). Fixture loading
emits no trace events, so a fresh system's ledger starts empty and scripted
runs are reproducible byte for byte.
"""

from __future__ import annotations

from pathlib import Path

from .clock import LogicalClock
from .collab import HelpDesk
from .delivery import DeliveryEngine, DeviceProfile
from .entities import EntityStore
from .errors import UnknownActor, UnknownDevice
from .fixtures import FixtureSet, load_fixture_dir
from .knowledge import KnowledgeStore
from .ledger import Ledger
from .tags import TagRegistry
from .workflow import Actor, ProcedureRegistry, SessionManager

DEFAULT_FIXTURES = Path(__file__).parent / "data" / "fixtures"


class System:
    def __init__(self, clock=None, trace_path=None, strict_tags: bool = True):
        self.clock = clock if clock is not None else LogicalClock()
        self.ledger = Ledger(clock=self.clock, sink=trace_path)
        self.entities = EntityStore()
        self.tags = TagRegistry(self.entities, self.ledger, strict=strict_tags)
        self.procedures = ProcedureRegistry()
        self.knowledge = KnowledgeStore(step_resolver=self.procedures.has_step)
        self.sessions = SessionManager(self.procedures, self.tags, self.ledger)
        self.delivery = DeliveryEngine(self.entities, self.knowledge, self.ledger,
                                       self.sessions, self.procedures)
        self.helpdesk = HelpDesk(self.ledger, self.knowledge)
        self.actors: dict[str, Actor] = {}
        self.devices: dict[str, DeviceProfile] = {}
        self.fixtures: FixtureSet | None = None

    @classmethod
    def from_fixtures(cls, fixture_dir: str | Path | None = None, *,
                      clock=None, trace_path=None, seed_kb: bool = True) -> "System":
        fixtures = load_fixture_dir(fixture_dir or DEFAULT_FIXTURES)
        system = cls(clock=clock, trace_path=trace_path)
        system.load(fixtures, seed_kb=seed_kb)
        return system

    def load(self, fixtures: FixtureSet, seed_kb: bool = True) -> None:
        self.fixtures = fixtures
        for tag in fixtures.tags:
            self.entities.register(tag.record)
        for tag in fixtures.tags:
            self.tags.register(tag.tag_id, tag.entity, tag.capacity_bytes,
                               initial_payload=tag.payload)
        for definition in fixtures.procedures.values():
            self.procedures.load(definition)
        if seed_kb:
            for manifest in fixtures.manifests.values():
                self.knowledge.seed_manifest(manifest)
        self.actors.update(fixtures.actors)
        self.devices.update(fixtures.devices)

    def actor(self, actor_id: str) -> Actor:
        actor = self.actors.get(actor_id)
        if actor is None:
            raise UnknownActor(f"actor {actor_id!r} is not registered")
        return actor

    def device(self, device_id: str) -> DeviceProfile:
        device = self.devices.get(device_id)
        if device is None:
            raise UnknownDevice(f"device profile {device_id!r} is not registered")
        return device

    def device_for(self, actor: Actor) -> DeviceProfile:
        return self.device(actor.device)
