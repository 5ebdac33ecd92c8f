"""Central registry of physical entities (appliances, tools, parts, locations).

Tags bind to entities; the central record is what an online scan resolves to.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import UnknownEntity


class EntityKind(str, Enum):
    APPLIANCE = "Appliance"
    TOOL = "Tool"
    PART = "Part"
    LOCATION = "Location"


@dataclass(frozen=True)
class EntityRef:
    kind: EntityKind
    entity_id: str


@dataclass(frozen=True)
class EntityRecord:
    """Central-store record for one entity.

    `model` drives procedure matching and enrichment; `topics` are free-form
    tags used by the open-knowledge enrichment path; `link` is the appliance's
    communication capability (ignored for non-appliances).
    """

    ref: EntityRef
    name: str = ""
    model: str = ""
    topics: frozenset[str] = field(default_factory=frozenset)
    link: str = "NoConnection"


class EntityStore:
    def __init__(self):
        self._records: dict[str, EntityRecord] = {}

    def register(self, record: EntityRecord) -> EntityRecord:
        existing = self._records.get(record.ref.entity_id)
        if existing is not None and existing != record:
            raise UnknownEntity(
                f"entity {record.ref.entity_id!r} already registered with a different record"
            )
        self._records[record.ref.entity_id] = record
        return record

    def get(self, entity_id: str) -> EntityRecord:
        try:
            return self._records[entity_id]
        except KeyError:
            raise UnknownEntity(f"no entity record for {entity_id!r}") from None

    def lookup(self, ref: EntityRef) -> EntityRecord | None:
        record = self._records.get(ref.entity_id)
        if record is None or record.ref != ref:
            return None
        return record

    def known(self, ref: EntityRef) -> bool:
        return self.lookup(ref) is not None

    def all(self) -> list[EntityRecord]:
        return list(self._records.values())
