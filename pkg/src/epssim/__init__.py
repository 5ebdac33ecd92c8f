"""Desk-scale electronic performance support workbench.

Simulates an RFID-augmented workspace, enforces prescribed repair workflows,
records a hash-chained operation trace, and delivers device-adapted learning
units in before/during/after-work modes.
"""

from .clock import LogicalClock, WallClock
from .entities import EntityKind, EntityRecord, EntityRef, EntityStore
from .knowledge import (Expertise, KnowledgeStore, LearningFragment, LearningUnit,
                        ManifestEntry, MediaKind, Protection, Scope, SegmentationRules,
                        SourceManifest, Specificity, StepRef, TaskCategory, UnitMetadata)
from .ledger import ConformanceReport, EventKind, Ledger, TraceEvent, Verdict
from .system import DEFAULT_FIXTURES, System
from .tags import RfidTag, ScanResult, TagRegistry, payload_size
from .workflow import (Accreditation, Actor, Procedure, SessionMode, SessionState,
                       Step, StepStatus, WorkSession)

__version__ = "0.1.0"
