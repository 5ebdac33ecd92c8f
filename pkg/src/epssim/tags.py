"""Simulated RFID workspace: tag registry, scans, and writable in-situ payloads.

Tags carry a bounded key-value payload that survives offline; an online scan
additionally resolves the bound entity's central record and a short operation
history. Network availability is an explicit per-call flag — mobility in a
scenario is expressed by which tags get scanned, not by a radio model.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

from .entities import EntityKind, EntityRef, EntityStore
from .errors import CapacityExceeded, DuplicateTag, InvalidPayload, UnknownEntity, UnknownTag
from .ledger import EventKind, Ledger

DEFAULT_CAPACITY_BYTES = 512
_PAIR_OVERHEAD = 2  # per-pair separator cost in the capacity accounting


def payload_size(payload: dict[str, str]) -> int:
    """Serialized size: UTF-8 bytes of keys + values + 2 per pair."""
    return sum(len(k.encode("utf-8")) + len(v.encode("utf-8")) + _PAIR_OVERHEAD
               for k, v in payload.items())


@dataclass
class RfidTag:
    id: str
    bound_entity: EntityRef
    capacity_bytes: int = DEFAULT_CAPACITY_BYTES
    payload: dict[str, str] = field(default_factory=dict)

    def snapshot(self) -> "RfidTag":
        return RfidTag(self.id, self.bound_entity, self.capacity_bytes, dict(self.payload))


@dataclass(frozen=True)
class ScanResult:
    tag_id: str
    entity: EntityRef
    in_situ: dict[str, str]
    central_record: dict | None
    resolved_online: bool


def _check_pair(key: str, value: str) -> None:
    if not isinstance(key, str) or not key:
        raise InvalidPayload("payload keys must be non-empty strings")
    if not isinstance(value, str):
        raise InvalidPayload("payload values must be strings")
    if not key.isprintable() or (value and not value.isprintable()):
        raise InvalidPayload("payload keys and values must be printable text")


class TagRegistry:
    """Shared registry; writes are serialized per tag, reads are lock-free copies."""

    def __init__(self, entities: EntityStore, ledger: Ledger, strict: bool = True,
                 history_limit: int = 5):
        self.entities = entities
        self.ledger = ledger
        self.strict = strict
        self.history_limit = history_limit
        self._tags: dict[str, RfidTag] = {}
        self._tag_locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def register(self, tag_id: str, entity: EntityRef, capacity_bytes: int = DEFAULT_CAPACITY_BYTES,
                 initial_payload: dict[str, str] | None = None) -> RfidTag:
        if not tag_id:
            raise InvalidPayload("tag id must be a non-empty string")
        if capacity_bytes < 0:
            raise InvalidPayload("capacity_bytes must be non-negative")
        if self.strict and not self.entities.known(entity):
            raise UnknownEntity(f"entity {entity.entity_id!r} ({entity.kind.value}) is not registered")
        payload = dict(initial_payload or {})
        for k, v in payload.items():
            _check_pair(k, v)
        if payload_size(payload) > capacity_bytes:
            raise CapacityExceeded(
                f"initial payload ({payload_size(payload)} B) exceeds capacity {capacity_bytes} B")
        with self._registry_lock:
            existing = self._tags.get(tag_id)
            if existing is not None:
                if existing.bound_entity == entity and existing.capacity_bytes == capacity_bytes:
                    return existing.snapshot()  # idempotent re-registration
                raise DuplicateTag(
                    f"tag {tag_id!r} already bound to "
                    f"{existing.bound_entity.kind.value} {existing.bound_entity.entity_id!r}")
            tag = RfidTag(tag_id, entity, capacity_bytes, payload)
            self._tags[tag_id] = tag
            self._tag_locks[tag_id] = threading.Lock()
            return tag.snapshot()

    def get(self, tag_id: str) -> RfidTag:
        tag = self._tags.get(tag_id)
        if tag is None:
            raise UnknownTag(f"tag {tag_id!r} is not registered")
        return tag.snapshot()

    def all_tags(self) -> list[RfidTag]:
        return [t.snapshot() for t in self._tags.values()]

    def scan(self, actor_id: str, tag_id: str, network_online: bool) -> ScanResult:
        tag = self.get(tag_id)
        central = self._central_record(tag.bound_entity) if network_online else None
        resolved = network_online and central is not None
        self.ledger.append(EventKind.SCAN, {
            "tag_id": tag.id,
            "entity_kind": tag.bound_entity.kind.value,
            "entity_id": tag.bound_entity.entity_id,
            "online": network_online,
        }, actor=actor_id)
        return ScanResult(tag_id=tag.id, entity=tag.bound_entity,
                          in_situ=dict(tag.payload), central_record=central,
                          resolved_online=resolved)

    def _central_record(self, entity: EntityRef) -> dict | None:
        record = self.entities.lookup(entity)
        if record is None:
            return None
        history = []
        for e in reversed(self.ledger.events()):
            p = e.payload
            if p.get("entity_id") == entity.entity_id or p.get("appliance_id") == entity.entity_id:
                history.append(f"t={e.ts} {e.kind.value} by {e.actor}")
                if len(history) >= self.history_limit:
                    break
        history.reverse()
        return {
            "entity_id": record.ref.entity_id,
            "kind": record.ref.kind.value,
            "name": record.name,
            "model": record.model,
            "topics": sorted(record.topics),
            "recent_history": history,
        }

    def write(self, tag_id: str, key: str, value: str, actor_id: str = "system") -> RfidTag:
        _check_pair(key, value)
        if tag_id not in self._tags:
            raise UnknownTag(f"tag {tag_id!r} is not registered")
        with self._tag_locks[tag_id]:
            tag = self._tags[tag_id]
            candidate = dict(tag.payload)
            candidate[key] = value
            size = payload_size(candidate)
            if size > tag.capacity_bytes:
                raise CapacityExceeded(
                    f"write of {key!r} would make payload {size} B, over capacity "
                    f"{tag.capacity_bytes} B; payload unchanged")
            tag.payload = candidate  # single assignment keeps the write atomic
        self.ledger.append(EventKind.TAG_WRITTEN,
                           {"tag_id": tag_id, "op": "write", "key": key, "value": value},
                           actor=actor_id)
        return self.get(tag_id)

    def erase(self, tag_id: str, key: str, actor_id: str = "system") -> RfidTag:
        if tag_id not in self._tags:
            raise UnknownTag(f"tag {tag_id!r} is not registered")
        with self._tag_locks[tag_id]:
            tag = self._tags[tag_id]
            if key in tag.payload:
                candidate = dict(tag.payload)
                del candidate[key]
                tag.payload = candidate
        self.ledger.append(EventKind.TAG_WRITTEN,
                           {"tag_id": tag_id, "op": "erase", "key": key},
                           actor=actor_id)
        return self.get(tag_id)

    def resolve_entities(self, tag_ids, kind: EntityKind | None = None) -> set[EntityRef]:
        """Bound entities of the given tags; unknown tags resolve to nothing."""
        refs = set()
        for tag_id in tag_ids:
            tag = self._tags.get(tag_id)
            if tag is None:
                continue
            if kind is None or tag.bound_entity.kind is kind:
                refs.add(tag.bound_entity)
        return refs
