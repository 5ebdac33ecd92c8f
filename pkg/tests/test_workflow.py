import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epssim.entities import EntityKind, EntityRecord, EntityRef, EntityStore
from epssim.errors import (InsufficientAccreditation, MalformedProcedure, ModelMismatch,
                           SessionClosed, UnknownStep)
from epssim.knowledge import Expertise
from epssim.ledger import EventKind, Ledger
from epssim.tags import TagRegistry
from epssim.workflow import (Accreditation, Actor, ProcedureRegistry, SessionManager,
                             SessionMode, SessionState, StepStatus, build_procedure)

from refmachine import simulate

APPLIANCE = EntityRef(EntityKind.APPLIANCE, "PC-042")
TOOL = EntityRef(EntityKind.TOOL, "screwdriver-1")
PART = EntityRef(EntityKind.PART, "hdd-new")


def make_actor(accreditation=Accreditation.TECHNICIAN, device="tablet-1"):
    return Actor(id="tech-1", name="Tech", accreditation=accreditation,
                 expertise=Expertise.BASIC, device=device)


def make_env(steps):
    """Fresh manager + registry with one appliance, one tool, one part."""
    entities = EntityStore()
    entities.register(EntityRecord(ref=APPLIANCE, name="PC", model="HDD-SATA"))
    entities.register(EntityRecord(ref=TOOL, name="screwdriver"))
    entities.register(EntityRecord(ref=PART, name="disk", model="HDD-SATA"))
    ledger = Ledger()
    tags = TagRegistry(entities, ledger)
    tags.register("T-PC", APPLIANCE, 512)
    tags.register("T-TOOL", TOOL, 64)
    tags.register("T-PART", PART, 64)
    procedures = ProcedureRegistry()
    proc = procedures.load({"id": "proc", "appliance_model": "HDD-SATA",
                            "title": "test procedure", "min_accreditation": "Technician",
                            "steps": steps})
    return SessionManager(procedures, tags, ledger), proc


def plain_steps(n, **per_step):
    return [{"index": i, "description": f"step {i}", **per_step.get(i, {})}
            for i in range(1, n + 1)]


def plain_steps_kw(n, overrides=None):
    overrides = overrides or {}
    return [{"index": i, "description": f"step {i}", **overrides.get(i, {})}
            for i in range(1, n + 1)]


def test_fixture_procedure_loads_fourteen_steps(fixture_set):
    proc = build_procedure(fixture_set.procedures["hd-replace"])
    assert [s.index for s in proc.steps] == list(range(1, 15))
    assert proc.steps[0].description == "Remove the screws on the case."
    assert proc.steps[1].description == "Remove the case."
    assert proc.steps[2].description == "Pull out the power connector."
    assert proc.steps[13].description == "Fit on the case."


def test_gapped_indices_rejected():
    with pytest.raises(MalformedProcedure):
        build_procedure({"id": "p", "appliance_model": "m", "steps": [
            {"index": 1, "description": "a"},
            {"index": 2, "description": "b"},
            {"index": 4, "description": "c"},
        ]})


def test_single_step_procedure_is_valid():
    proc = build_procedure({"id": "p", "appliance_model": "m",
                            "steps": [{"index": 1, "description": "only"}]})
    assert len(proc.steps) == 1


def test_start_session_accreditation_gate():
    manager, proc = make_env(plain_steps(3))
    # oracle: ordering comparison on the accreditation scale
    order = list(Accreditation)
    for accreditation in order:
        ok = order.index(accreditation) >= order.index(proc.min_accreditation)
        actor = make_actor(accreditation)
        if ok:
            session = manager.start_session(actor, APPLIANCE, proc, SessionMode.STRICT)
            assert session.state is SessionState.ACTIVE and session.cursor == 1
        else:
            with pytest.raises(InsufficientAccreditation):
                manager.start_session(actor, APPLIANCE, proc, SessionMode.STRICT)


def test_start_session_model_mismatch():
    manager, proc = make_env(plain_steps(2))
    other = EntityRef(EntityKind.APPLIANCE, "PC-043")
    manager.tags.entities.register(EntityRecord(ref=other, name="other", model="TOWER-IDE"))
    with pytest.raises(ModelMismatch):
        manager.start_session(make_actor(), other, proc, SessionMode.STRICT)


def test_prescription_walks_the_procedure():
    manager, proc = make_env(plain_steps(14))
    session = manager.start_session(make_actor(), APPLIANCE, proc, SessionMode.STRICT)
    assert manager.current_prescription(session).step.index == 1
    for i in range(1, 14):
        manager.report_step(session, i)
    assert manager.current_prescription(session).step.index == 14
    manager.report_step(session, 14)
    assert session.state is SessionState.COMPLETED
    with pytest.raises(SessionClosed):
        manager.current_prescription(session)


def test_report_with_required_tool_advances():
    manager, proc = make_env(plain_steps_kw(3, {1: {"required_tools": ["screwdriver-1"]}}))
    session = manager.start_session(make_actor(), APPLIANCE, proc, SessionMode.STRICT)
    outcome = manager.report_step(session, 1, scanned_tool_tags=("T-TOOL",))
    assert outcome.accepted and not outcome.deviations
    assert session.cursor == 2


def test_strict_out_of_order_is_rejected():
    manager, proc = make_env(plain_steps(14))
    session = manager.start_session(make_actor(), APPLIANCE, proc, SessionMode.STRICT)
    manager.report_step(session, 1)
    outcome = manager.report_step(session, 3)
    assert not outcome.accepted
    assert [d.value for d in outcome.deviations] == ["OutOfOrder"]
    assert session.cursor == 2
    assert session.step_status[3] is StepStatus.PENDING


def test_advisory_missing_tool_is_recorded_not_blocked():
    manager, proc = make_env(plain_steps_kw(3, {2: {"required_tools": ["screwdriver-1"]}}))
    session = manager.start_session(make_actor(), APPLIANCE, proc, SessionMode.ADVISORY)
    manager.report_step(session, 1)
    outcome = manager.report_step(session, 2)  # no tool scanned
    assert outcome.accepted
    assert [d.value for d in outcome.deviations] == ["MissingTool"]
    assert session.step_status[2] is StepStatus.DONE


def test_extra_scans_are_ignored():
    manager, proc = make_env(plain_steps(2))
    session = manager.start_session(make_actor(), APPLIANCE, proc, SessionMode.STRICT)
    outcome = manager.report_step(session, 1, scanned_tool_tags=("T-TOOL",),
                                  scanned_part_tags=("T-PART",))
    assert outcome.accepted and not outcome.deviations


def test_unknown_step_index():
    manager, proc = make_env(plain_steps(3))
    session = manager.start_session(make_actor(), APPLIANCE, proc, SessionMode.STRICT)
    with pytest.raises(UnknownStep):
        manager.report_step(session, 99)


def test_abort_lifecycle():
    manager, proc = make_env(plain_steps(3))
    session = manager.start_session(make_actor(), APPLIANCE, proc, SessionMode.STRICT)
    manager.abort_session(session, "tool broke")
    assert session.state is SessionState.ABORTED
    with pytest.raises(SessionClosed):
        manager.report_step(session, 1)
    with pytest.raises(SessionClosed):
        manager.abort_session(session, "again")
    closing = manager.ledger.query(session=session.id, kind=EventKind.SESSION_CLOSED)
    assert len(closing) == 1 and closing[0].payload["reason"] == "tool broke"


# -- randomized agreement with the reference machine ------------------------------

@st.composite
def report_plans(draw):
    n = draw(st.integers(1, 8))
    tooled = draw(st.sets(st.integers(1, n)))
    mode = draw(st.sampled_from(["Strict", "Advisory"]))
    length = draw(st.integers(0, 20))
    reports = [{"step": draw(st.integers(1, n)), "with_tool": draw(st.booleans())}
               for _ in range(length)]
    return n, tooled, mode, reports


def run_engine_and_reference(n, tooled, mode, reports):
    steps = plain_steps_kw(n, {i: {"required_tools": ["screwdriver-1"]} for i in tooled})
    manager, proc = make_env(steps)
    session = manager.start_session(make_actor(), APPLIANCE, proc, SessionMode(mode))
    engine_outcomes = []
    for r in reports:
        if session.state is not SessionState.ACTIVE:
            engine_outcomes.append({"error": "closed"})
            continue
        tags = ("T-TOOL",) if r["with_tool"] else ()
        outcome = manager.report_step(session, r["step"], scanned_tool_tags=tags)
        engine_outcomes.append({"accepted": outcome.accepted,
                                "deviations": [d.value for d in outcome.deviations],
                                "status": outcome.status.value})
    ref = simulate(n, mode, [
        {"step": r["step"], "tools_ok": r["with_tool"] or r["step"] not in tooled}
        for r in reports])
    return manager, session, engine_outcomes, ref


@given(plan=report_plans())
@settings(max_examples=120, deadline=None)
def test_engine_agrees_with_reference_machine(plan):
    n, tooled, mode, reports = plan
    manager, session, engine_outcomes, ref = run_engine_and_reference(n, tooled, mode, reports)

    assert engine_outcomes == ref["outcomes"]
    assert {i: s.value for i, s in session.step_status.items()} == ref["statuses"]
    assert session.state.value == ref["state"]
    if session.state is SessionState.ACTIVE:
        assert session.cursor == ref["cursor"]

    # completion soundness: Completed iff every step is done (both modes)
    done = all(s in (StepStatus.DONE, StepStatus.DONE_OUT_OF_ORDER)
               for s in session.step_status.values())
    assert (session.state is SessionState.COMPLETED) == done

    # strict-mode safety: accepted reports form exactly 1..k in order
    if mode == "Strict":
        accepted = [e.payload["step_index"] for e in
                    manager.ledger.query(session=session.id, kind=EventKind.STEP_REPORTED)]
        assert accepted == list(range(1, len(accepted) + 1))

    # single-event discipline: one trace event per non-erroring report call
    report_events = manager.ledger.query(session=session.id, kind=EventKind.STEP_REPORTED) \
        + manager.ledger.query(session=session.id, kind=EventKind.DEVIATION)
    valid_calls = sum(1 for o in engine_outcomes if "error" not in o)
    assert len(report_events) == valid_calls


def test_thousand_randomized_sequences_agree_with_reference():
    rng = random.Random(20090718)
    disagreements = 0
    for _ in range(1000):
        n = rng.randint(1, 8)
        tooled = {i for i in range(1, n + 1) if rng.random() < 0.3}
        mode = rng.choice(["Strict", "Advisory"])
        reports = [{"step": rng.randint(1, n), "with_tool": rng.random() < 0.7}
                   for _ in range(rng.randint(0, 2 * n))]
        manager, session, engine_outcomes, ref = run_engine_and_reference(
            n, tooled, mode, reports)
        if engine_outcomes != ref["outcomes"] or session.state.value != ref["state"]:
            disagreements += 1
            continue
        report = manager.ledger.verify_conformance(session.id, session.procedure)
        if report.verdict.value != ref["verdict"]:
            disagreements += 1
    assert disagreements == 0


def test_accreditation_monotonicity():
    # raising accreditation never turns an accepted start into a rejection
    order = list(Accreditation)
    for min_acc in order:
        accepted_below = False
        for actor_acc in order:
            manager, proc = make_env(plain_steps(1))
            proc = manager.procedures.load({
                "id": "proc-acc", "appliance_model": "HDD-SATA", "title": "t",
                "min_accreditation": min_acc.value,
                "steps": [{"index": 1, "description": "s"}]})
            try:
                manager.start_session(make_actor(actor_acc), APPLIANCE, proc,
                                      SessionMode.STRICT)
                accepted = True
            except InsufficientAccreditation:
                accepted = False
            if accepted_below:
                assert accepted, (min_acc, actor_acc)
            accepted_below = accepted_below or accepted
