"""XML codec for learning units.

The profile is a small learning-object-metadata subset: a `learning-unit`
root with seven mandatory children (title, expertise, task-category,
appliance-models, specificity, protection, fragments) plus optional step-ref
and topics. The machine-readable schema ships as data/learning-unit.xsd; the
validator here enforces the same rules without an external XSD engine.

import(export(u)) reproduces u exactly; fragment element order is
significant, attribute order is not.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

from .errors import DanglingFragment, SchemaViolation
from .knowledge import (Expertise, LearningFragment, LearningUnit, MediaKind,
                        Protection, Specificity, StepRef, TaskCategory, UnitMetadata)

MANDATORY_ELEMENTS = ("title", "expertise", "task-category", "appliance-models",
                      "specificity", "protection", "fragments")


def unit_to_xml(unit: LearningUnit, fragments: list[LearningFragment]) -> str:
    by_id = {f.id: f for f in fragments}
    missing = [fid for fid in unit.fragments if fid not in by_id]
    if missing:
        raise SchemaViolation(f"cannot export unit {unit.id!r}: missing fragments {missing}")

    root = ET.Element("learning-unit", {"id": unit.id})
    ET.SubElement(root, "title").text = unit.title
    ET.SubElement(root, "expertise").text = unit.metadata.expertise.value
    ET.SubElement(root, "task-category").text = unit.metadata.task_category.value
    models = ET.SubElement(root, "appliance-models")
    for m in sorted(unit.metadata.appliance_models):
        ET.SubElement(models, "model").text = m
    ET.SubElement(root, "specificity").text = unit.metadata.specificity.value
    ET.SubElement(root, "protection").text = unit.metadata.protection.value
    frags = ET.SubElement(root, "fragments")
    for fid in unit.fragments:
        f = by_id[fid]
        el = ET.SubElement(frags, "fragment", {
            "id": f.id,
            "media-kind": f.media_kind.value,
            "source-doc": f.source_doc,
            "locator": f.source_locator,
        })
        el.text = f.body
    if unit.metadata.step_ref is not None:
        ET.SubElement(root, "step-ref", {
            "procedure": unit.metadata.step_ref.procedure_id,
            "index": str(unit.metadata.step_ref.index),
        })
    if unit.metadata.topics:
        topics = ET.SubElement(root, "topics")
        for t in sorted(unit.metadata.topics):
            ET.SubElement(topics, "topic").text = t

    # ET.indent only touches whitespace-only text nodes, so bodies survive intact
    ET.indent(root, space="  ")
    return ET.tostring(root, encoding="unicode", xml_declaration=True) + "\n"


def _require(root: ET.Element, name: str) -> ET.Element:
    el = root.find(name)
    if el is None:
        raise SchemaViolation(f"missing mandatory element <{name}>")
    return el


def _enum(cls, text: str | None, element: str):
    try:
        return cls(text)
    except ValueError:
        raise SchemaViolation(f"<{element}> value {text!r} is not one of "
                              f"{[e.value for e in cls]}") from None


def unit_from_xml(text: str) -> tuple[LearningUnit, list[LearningFragment]]:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise SchemaViolation(f"not well-formed XML: {exc}") from None
    if root.tag != "learning-unit":
        raise SchemaViolation(f"root element must be <learning-unit>, got <{root.tag}>")
    unit_id = root.get("id")
    if not unit_id:
        raise SchemaViolation("<learning-unit> requires an id attribute")
    for name in MANDATORY_ELEMENTS:
        _require(root, name)

    title = _require(root, "title").text or ""
    if not title:
        raise SchemaViolation("<title> must be non-empty")
    expertise = _enum(Expertise, _require(root, "expertise").text, "expertise")
    task = _enum(TaskCategory, _require(root, "task-category").text, "task-category")
    models = frozenset(
        m.text for m in _require(root, "appliance-models").findall("model") if m.text)
    specificity = _enum(Specificity, _require(root, "specificity").text, "specificity")
    protection = _enum(Protection, _require(root, "protection").text, "protection")

    fragments = []
    for el in _require(root, "fragments").findall("fragment"):
        fid = el.get("id")
        kind = el.get("media-kind")
        doc = el.get("source-doc")
        locator = el.get("locator")
        if not all([fid, kind, doc, locator]):
            raise SchemaViolation(
                "<fragment> requires id, media-kind, source-doc and locator attributes")
        body = el.text or ""
        if not body:
            raise SchemaViolation(f"fragment {fid!r} has an empty body")
        fragments.append(LearningFragment(
            id=fid, media_kind=_enum(MediaKind, kind, "fragment/@media-kind"),
            body=body, source_doc=doc, source_locator=locator))
    if not fragments:
        raise SchemaViolation("<fragments> must contain at least one <fragment>")

    step_el = root.find("step-ref")
    step_ref = None
    if step_el is not None:
        proc = step_el.get("procedure")
        index = step_el.get("index")
        if not proc or not index or not index.isdigit():
            raise SchemaViolation("<step-ref> requires procedure and integer index attributes")
        step_ref = StepRef(proc, int(index))

    topics_el = root.find("topics")
    topics = frozenset(
        t.text for t in topics_el.findall("topic") if t.text) if topics_el is not None else frozenset()

    unit = LearningUnit(
        id=unit_id, title=title,
        fragments=tuple(f.id for f in fragments),
        metadata=UnitMetadata(expertise=expertise, task_category=task,
                              appliance_models=models, step_ref=step_ref,
                              specificity=specificity, protection=protection,
                              topics=topics))
    return unit, fragments


def validate_unit_xml(text: str) -> None:
    """Raise SchemaViolation unless the document satisfies the profile."""
    unit_from_xml(text)


def export_unit(store, unit_id: str) -> str:
    """Serialize an indexed unit together with its fragment bodies."""
    unit = store.get_unit(unit_id)
    return unit_to_xml(unit, [store.get_fragment(fid) for fid in unit.fragments])


def import_unit(store, text: str) -> LearningUnit:
    """Validate, register any fragments the store lacks, and index the unit.

    Fragments already present keep their stored records (ingestion hints are
    not part of the interchange format and must not be clobbered).
    """
    unit, fragments = unit_from_xml(text)
    for frag in fragments:
        try:
            store.get_fragment(frag.id)
        except DanglingFragment:
            store.register_fragment(frag)
    return store.index_unit(unit)
