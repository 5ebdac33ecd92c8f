"""Learning-content pipeline: manifests become fragments, fragments are
segmented into units with retrieval metadata, units are indexed and queried.

Firm-protected units live in the protected store scope; generic knowledge is
open. A query's scope decides which side it may see — open-scope queries can
never surface protected units.
"""

from __future__ import annotations

import hashlib
import re
import threading
from dataclasses import dataclass, field
from enum import Enum

from .errors import (ConflictingSuggestions, DanglingFragment, DuplicateLocator,
                     EmptyManifest, UnknownStep, UnknownUnit)


class MediaKind(str, Enum):
    TEXT = "Text"
    DIAGRAM = "Diagram"
    BLUEPRINT = "Blueprint"
    PHOTO = "Photo"
    VIDEO_REF = "VideoRef"
    AUDIO_REF = "AudioRef"


class Expertise(str, Enum):
    BEGINNER = "Beginner"
    BASIC = "Basic"
    ADVANCED = "Advanced"
    EXPERT = "Expert"


EXPERTISE_ORDER = {e: i for i, e in enumerate(Expertise)}


class TaskCategory(str, Enum):
    USE = "Use"
    DYSFUNCTION_IDENTIFICATION = "DysfunctionIdentification"
    DIAGNOSIS = "Diagnosis"
    REPAIR = "Repair"
    DISMANTLING = "Dismantling"
    REASSEMBLY = "Reassembly"


class Specificity(str, Enum):
    GENERIC = "Generic"
    MODEL_SPECIFIC = "ModelSpecific"


class Protection(str, Enum):
    FIRM_PROTECTED = "FirmProtected"
    OPEN = "Open"


class Scope(str, Enum):
    EPSS = "EPSS"
    OPEN_KB = "OpenKB"
    BOTH = "Both"


@dataclass(frozen=True)
class StepRef:
    procedure_id: str
    index: int


@dataclass(frozen=True)
class LearningFragment:
    """Atomic piece of instructional content plus its ingestion hints.

    The hints (expertise, task, step link, models, topic) come from the source
    manifest and drive segmentation; they are not part of the fragment's
    identity, which is (source_doc, source_locator).
    """

    id: str
    media_kind: MediaKind
    body: str
    source_doc: str
    source_locator: str
    expertise_hint: Expertise = Expertise.BASIC
    task_hint: TaskCategory = TaskCategory.USE
    step_ref: StepRef | None = None
    models: frozenset[str] = field(default_factory=frozenset)
    topic: str | None = None
    title: str | None = None
    specificity_hint: Specificity = Specificity.GENERIC
    protection_hint: Protection = Protection.OPEN
    extra_topics: frozenset[str] = field(default_factory=frozenset)


@dataclass(frozen=True)
class UnitMetadata:
    expertise: Expertise
    task_category: TaskCategory
    appliance_models: frozenset[str]
    step_ref: StepRef | None
    specificity: Specificity
    protection: Protection
    topics: frozenset[str] = field(default_factory=frozenset)


@dataclass(frozen=True)
class LearningUnit:
    id: str
    title: str
    fragments: tuple[str, ...]
    metadata: UnitMetadata


@dataclass(frozen=True)
class ManifestEntry:
    locator: str
    media_kind: MediaKind
    body: str
    expertise: Expertise = Expertise.BASIC
    task_category: TaskCategory = TaskCategory.USE
    step_ref: StepRef | None = None
    topic: str | None = None
    title: str | None = None
    specificity: Specificity | None = None
    protection: Protection | None = None
    topics: frozenset[str] = field(default_factory=frozenset)


@dataclass(frozen=True)
class SourceManifest:
    doc_id: str
    appliance_models: frozenset[str]
    entries: tuple[ManifestEntry, ...]
    default_specificity: Specificity = Specificity.GENERIC
    default_protection: Protection = Protection.OPEN


@dataclass(frozen=True)
class SegmentationRules:
    """Grouping policy for segment().

    Fragments sharing (task, step link) form one unit. Fragments without a
    step link group by (task, doc, topic) when `merge_topics` is set,
    otherwise every such fragment becomes its own unit.
    """

    merge_topics: bool = True


def fragment_id(doc_id: str, locator: str) -> str:
    digest = hashlib.sha256(f"{doc_id}\x1f{locator}".encode("utf-8")).hexdigest()
    return f"f-{digest[:12]}"


def slug(text: str) -> str:
    return re.sub(r"-+", "-", re.sub(r"[^a-z0-9]+", "-", text.lower())).strip("-") or "x"


def min_expertise(values) -> Expertise:
    return min(values, key=lambda e: EXPERTISE_ORDER[e])


class KnowledgeStore:
    """Fragment and unit store with an atomic per-unit index.

    Concurrent readers see immutable snapshots; writes are serialized.
    `step_resolver(procedure_id, index) -> bool` validates step links when
    a procedure registry is wired in.
    """

    def __init__(self, step_resolver=None):
        self._fragments: dict[str, LearningFragment] = {}
        self._units: dict[str, LearningUnit] = {}
        self._lock = threading.Lock()
        self.step_resolver = step_resolver

    # -- ingestion ----------------------------------------------------------

    def ingest_manifest(self, manifest: SourceManifest) -> list[LearningFragment]:
        if not manifest.entries:
            raise EmptyManifest(f"manifest {manifest.doc_id!r} has no entries")
        seen: set[str] = set()
        for entry in manifest.entries:
            if entry.locator in seen:
                raise DuplicateLocator(
                    f"locator {entry.locator!r} appears twice in manifest {manifest.doc_id!r}")
            seen.add(entry.locator)
            if not entry.body:
                raise EmptyManifest(
                    f"entry {entry.locator!r} in manifest {manifest.doc_id!r} has an empty body")
        fragments = []
        with self._lock:
            for entry in manifest.entries:
                frag = LearningFragment(
                    id=fragment_id(manifest.doc_id, entry.locator),
                    media_kind=entry.media_kind,
                    body=entry.body,
                    source_doc=manifest.doc_id,
                    source_locator=entry.locator,
                    expertise_hint=entry.expertise,
                    task_hint=entry.task_category,
                    step_ref=entry.step_ref,
                    models=manifest.appliance_models,
                    topic=entry.topic,
                    title=entry.title,
                    specificity_hint=entry.specificity or manifest.default_specificity,
                    protection_hint=entry.protection or manifest.default_protection,
                    extra_topics=entry.topics,
                )
                self._fragments[frag.id] = frag
                fragments.append(frag)
        return fragments

    def register_fragment(self, fragment: LearningFragment) -> LearningFragment:
        with self._lock:
            self._fragments[fragment.id] = fragment
        return fragment

    def get_fragment(self, fragment_id_: str) -> LearningFragment:
        frag = self._fragments.get(fragment_id_)
        if frag is None:
            raise DanglingFragment(f"fragment {fragment_id_!r} is not stored")
        return frag

    def fragments(self) -> list[LearningFragment]:
        return list(self._fragments.values())

    # -- segmentation --------------------------------------------------------

    def segment(self, fragments, rules: SegmentationRules | None = None) -> list[LearningUnit]:
        rules = rules or SegmentationRules()
        groups: dict[tuple, list[LearningFragment]] = {}
        for frag in fragments:
            if frag.step_ref is not None:
                key = ("step", frag.task_hint, frag.step_ref)
            elif rules.merge_topics and frag.topic:
                key = ("topic", frag.task_hint, frag.source_doc, frag.topic)
            else:
                key = ("solo", frag.task_hint, frag.source_doc, frag.source_locator)
            groups.setdefault(key, []).append(frag)

        step_tasks: dict[StepRef, set[TaskCategory]] = {}
        for key in groups:
            if key[0] == "step":
                step_tasks.setdefault(key[2], set()).add(key[1])

        units = []
        for key, members in groups.items():
            model_sets = {m.models for m in members}
            if len(model_sets) > 1:
                raise ConflictingSuggestions(
                    f"fragments grouped together disagree on appliance models: "
                    f"{sorted(s for fs in model_sets for s in fs)}")
            first = members[0]
            if key[0] == "step":
                ref = key[2]
                uid = f"u:{ref.procedure_id}:s{ref.index:02d}"
                if len(step_tasks[ref]) > 1:
                    uid += f":{slug(key[1].value)}"
            else:
                uid = f"u:{first.source_doc}:{slug(first.topic or first.source_locator)}"
            topics = frozenset().union(*(m.extra_topics for m in members))
            if first.topic:
                topics |= {first.topic}
            metadata = UnitMetadata(
                expertise=min_expertise(m.expertise_hint for m in members),
                task_category=first.task_hint,
                appliance_models=first.models,
                step_ref=first.step_ref,
                specificity=(Specificity.MODEL_SPECIFIC
                             if any(m.specificity_hint is Specificity.MODEL_SPECIFIC for m in members)
                             else Specificity.GENERIC),
                protection=(Protection.FIRM_PROTECTED
                            if any(m.protection_hint is Protection.FIRM_PROTECTED for m in members)
                            else Protection.OPEN),
                topics=topics,
            )
            title = first.title or first.topic or f"{first.task_hint.value}: {first.source_locator}"
            units.append(LearningUnit(id=uid, title=title,
                                      fragments=tuple(m.id for m in members),
                                      metadata=metadata))
        return units

    # -- index ----------------------------------------------------------------

    def index_unit(self, unit: LearningUnit) -> LearningUnit:
        for fid in unit.fragments:
            if fid not in self._fragments:
                raise DanglingFragment(f"unit {unit.id!r} references missing fragment {fid!r}")
        ref = unit.metadata.step_ref
        if ref is not None and self.step_resolver is not None and not self.step_resolver(ref.procedure_id, ref.index):
            raise UnknownStep(
                f"unit {unit.id!r} references step {ref.index} of unknown procedure {ref.procedure_id!r}")
        with self._lock:
            self._units[unit.id] = unit
        return unit

    def get_unit(self, unit_id: str) -> LearningUnit:
        unit = self._units.get(unit_id)
        if unit is None:
            raise UnknownUnit(f"unit {unit_id!r} is not indexed")
        return unit

    def has_unit(self, unit_id: str) -> bool:
        return unit_id in self._units

    def units(self) -> list[LearningUnit]:
        return list(self._units.values())

    def seed_manifest(self, manifest: SourceManifest,
                      rules: SegmentationRules | None = None) -> list[LearningUnit]:
        units = self.segment(self.ingest_manifest(manifest), rules)
        for unit in units:
            self.index_unit(unit)
        return units

    # -- query -----------------------------------------------------------------

    def query_units(self, scope: Scope = Scope.BOTH, *, model: str | None = None,
                    task_category: TaskCategory | None = None,
                    expertise_max: Expertise | None = None,
                    step_ref: StepRef | None = None) -> list[LearningUnit]:
        """Filtered, deterministically ranked retrieval.

        Ranking: step-link match, then model-specific over generic, then unit
        id ascending — a total order, so identical stores and queries always
        return identical lists. When a step link is given, units linked to a
        *different* step are excluded; unlinked units remain as generic
        fallback behind the step-linked ones.
        """
        out = []
        for unit in self._units.values():
            md = unit.metadata
            if scope is Scope.EPSS and md.protection is not Protection.FIRM_PROTECTED:
                continue
            if scope is Scope.OPEN_KB and md.protection is not Protection.OPEN:
                continue
            if model is not None and md.appliance_models and model not in md.appliance_models:
                continue
            if task_category is not None and md.task_category is not task_category:
                continue
            if expertise_max is not None and EXPERTISE_ORDER[md.expertise] > EXPERTISE_ORDER[expertise_max]:
                continue
            if step_ref is not None and md.step_ref is not None and md.step_ref != step_ref:
                continue
            out.append(unit)
        out.sort(key=lambda u: (
            0 if (step_ref is not None and u.metadata.step_ref == step_ref) else 1,
            0 if u.metadata.specificity is Specificity.MODEL_SPECIFIC else 1,
            u.id,
        ))
        return out
