"""Fixture-directory loading.

Layout (all files UTF-8):
    tags.jsonl          one tag record per line (JSON object); each record
                        carries the bound entity's central-store fields inline
    actors.yaml         list of actor records under `actors:`
    devices.yaml        list of device profiles under `devices:`
    procedures/*.yaml   one procedure definition per file
    manifests/*.yaml    one source manifest per file
    scripts/*.yaml      one scenario script per file

Field-level formats are documented in the README.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .delivery import DeviceProfile, DisplayKind
from .entities import EntityKind, EntityRecord, EntityRef
from .errors import ScriptError
from .knowledge import (Expertise, ManifestEntry, MediaKind, Protection,
                        SourceManifest, Specificity, StepRef, TaskCategory)
from .workflow import Accreditation, Actor


@dataclass(frozen=True)
class TagFixture:
    tag_id: str
    entity: EntityRef
    capacity_bytes: int
    payload: dict[str, str]
    record: EntityRecord


@dataclass(frozen=True)
class ScenarioScript:
    name: str
    declared: dict[str, tuple[str, ...]]  # kind -> fixture ids the script may touch
    actions: tuple[dict, ...]


@dataclass
class FixtureSet:
    root: Path
    tags: list[TagFixture] = field(default_factory=list)
    actors: dict[str, Actor] = field(default_factory=dict)
    devices: dict[str, DeviceProfile] = field(default_factory=dict)
    procedures: dict[str, dict] = field(default_factory=dict)  # raw definitions
    manifests: dict[str, SourceManifest] = field(default_factory=dict)
    scripts: dict[str, ScenarioScript] = field(default_factory=dict)

    def script(self, name: str) -> ScenarioScript:
        script = self.scripts.get(name)
        if script is None:
            raise ScriptError(f"no script named {name!r} in {self.root}")
        return script


def load_fixture_dir(root: str | Path) -> FixtureSet:
    root = Path(root)
    fixtures = FixtureSet(root=root)

    tags_file = root / "tags.jsonl"
    if tags_file.exists():
        for line in tags_file.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fixtures.tags.append(_parse_tag_line(line))

    actors_file = root / "actors.yaml"
    if actors_file.exists():
        for raw in _load_yaml(actors_file).get("actors", []):
            actor = Actor(id=raw["id"], name=raw.get("name", raw["id"]),
                          accreditation=Accreditation(raw["accreditation"]),
                          expertise=Expertise(raw.get("expertise", "Basic")),
                          device=raw.get("device", ""))
            fixtures.actors[actor.id] = actor

    devices_file = root / "devices.yaml"
    if devices_file.exists():
        for raw in _load_yaml(devices_file).get("devices", []):
            profile = DeviceProfile(
                id=raw["id"], display=DisplayKind(raw["display"]),
                max_media=frozenset(MediaKind(m) for m in raw["max_media"]),
                hands_free=bool(raw["hands_free"]))
            fixtures.devices[profile.id] = profile

    for path in sorted((root / "procedures").glob("*.yaml")):
        definition = _load_yaml(path)
        fixtures.procedures[definition["id"]] = definition

    for path in sorted((root / "manifests").glob("*.yaml")):
        manifest = _parse_manifest(_load_yaml(path))
        fixtures.manifests[manifest.doc_id] = manifest

    for path in sorted((root / "scripts").glob("*.yaml")):
        script = _parse_script(_load_yaml(path))
        fixtures.scripts[script.name] = script

    return fixtures


def _load_yaml(path: Path) -> dict:
    with path.open(encoding="utf-8") as fh:
        return yaml.safe_load(fh)


def _parse_tag_line(line: str) -> TagFixture:
    raw = json.loads(line)
    kind = EntityKind(raw["entity_kind"])
    ref = EntityRef(kind, raw["entity_id"])
    entity = raw.get("entity", {})
    return TagFixture(
        tag_id=raw["tag_id"],
        entity=ref,
        capacity_bytes=int(raw.get("capacity_bytes", 512)),
        payload={str(k): str(v) for k, v in raw.get("payload", {}).items()},
        record=EntityRecord(
            ref=ref,
            name=entity.get("name", raw["entity_id"]),
            model=entity.get("model", ""),
            topics=frozenset(entity.get("topics", [])),
            link=entity.get("link", "NoConnection")),
    )


def _parse_manifest(raw: dict) -> SourceManifest:
    entries = []
    for e in raw.get("entries", []):
        step = e.get("step")
        entries.append(ManifestEntry(
            locator=e["locator"],
            media_kind=MediaKind(e.get("media_kind", "Text")),
            body=e.get("body", ""),
            expertise=Expertise(e.get("expertise", raw.get("expertise", "Basic"))),
            task_category=TaskCategory(e.get("task_category", raw.get("task_category", "Use"))),
            step_ref=StepRef(step["procedure"], int(step["index"])) if step else None,
            topic=e.get("topic"),
            title=e.get("title"),
            specificity=Specificity(e["specificity"]) if "specificity" in e else None,
            protection=Protection(e["protection"]) if "protection" in e else None,
            topics=frozenset(e.get("topics", [])),
        ))
    return SourceManifest(
        doc_id=raw["doc_id"],
        appliance_models=frozenset(raw.get("appliance_models", [])),
        entries=tuple(entries),
        default_specificity=Specificity(raw.get("specificity", "Generic")),
        default_protection=Protection(raw.get("protection", "Open")),
    )


_DECLARABLE = ("tags", "procedures", "manifests", "actors", "devices")


def _parse_script(raw: dict) -> ScenarioScript:
    if "name" not in raw:
        raise ScriptError("script file lacks a name")
    declared_raw = raw.get("fixtures", {})
    declared = {kind: tuple(declared_raw.get(kind, [])) for kind in _DECLARABLE}
    actions = raw.get("actions", [])
    if not isinstance(actions, list):
        raise ScriptError(f"script {raw['name']!r}: actions must be a list")
    return ScenarioScript(name=raw["name"], declared=declared,
                          actions=tuple(dict(a) for a in actions))
