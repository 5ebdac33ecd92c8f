import { describe, expect, it } from "vitest";

import { render } from "../src/render";
import { initialState, ConsoleState } from "../src/state";
import { SessionView, StepOutcome } from "../src/api";

function sessionFixture(overrides: Partial<SessionView> = {}): SessionView {
  return {
    id: "S1",
    actor_id: "tech-1",
    appliance: { kind: "Appliance", entity_id: "PC-042" },
    procedure_id: "hd-replace",
    procedure_title: "Replace the hard disk of a desktop computer",
    mode: "Strict",
    cursor: 1,
    state: "Active",
    steps: Array.from({ length: 14 }, (_, i) => ({
      index: i + 1,
      description: `step ${i + 1} description`,
      status: "Pending",
      required_tools: [],
      required_parts: [],
      required_accreditation: "Trainee",
      learning_unit_refs: [],
    })),
    ...overrides,
  };
}

function stateWithSession(): ConsoleState {
  const state = initialState();
  state.session = sessionFixture();
  state.prescription = {
    step: { index: 1, description: "step 1 description", required_accreditation: "Trainee" },
    required_tools: [],
    required_parts: [],
    learning_unit_refs: [],
  };
  return state;
}

describe("snapshot-render property", () => {
  it("same state renders byte-identical markup", () => {
    const state = stateWithSession();
    state.lastOutcome = { accepted: false, deviations: ["OutOfOrder"], status: "Pending",
                          cursor: 2, session_state: "Active" };
    expect(render(state)).toEqual(render(state));
    const copy = JSON.parse(JSON.stringify(state));
    expect(render(copy)).toEqual(render(state));
  });
});

describe("step list", () => {
  it("renders all 14 steps with the cursor highlighted", () => {
    const state = stateWithSession();
    const html = render(state);
    for (let i = 1; i <= 14; i++) {
      expect(html).toContain(`data-test="step-${i}"`);
    }
    expect(html).toMatch(/class="step status-Pending current"\s+data-test="step-1"/);
    expect(html).not.toMatch(/current"\s+data-test="step-2"/);
  });

  it("shows statuses verbatim from the service", () => {
    const state = stateWithSession();
    state.session!.steps[0].status = "Done";
    state.session!.steps[2].status = "DoneOutOfOrder";
    const html = render(state);
    expect(html).toContain('data-test="step-1" data-status="Done"');
    expect(html).toContain('data-test="step-3" data-status="DoneOutOfOrder"');
  });
});

describe("deviation banner", () => {
  it("absent when there are no deviations", () => {
    expect(render(stateWithSession())).not.toContain("deviation-banner");
  });

  it("appears on a rejected out-of-order report", () => {
    const state = stateWithSession();
    const outcome: StepOutcome = { accepted: false, deviations: ["OutOfOrder"],
                                   status: "Pending", cursor: 2, session_state: "Active" };
    state.lastOutcome = outcome;
    const html = render(state);
    expect(html).toContain('data-test="deviation-banner"');
    expect(html).toContain("rejected: OutOfOrder");
  });

  it("counts recorded deviation events from the trace", () => {
    const state = stateWithSession();
    state.deviationEvents = [{ seq: 5, ts: 5, actor: "tech-1", session: "S1",
                               kind: "Deviation", payload: {}, chain: "00" }];
    expect(render(state)).toContain("1 deviation event(s) in the trace");
  });
});

describe("help panel", () => {
  it("renders step annotations next to the referenced step", () => {
    const state = stateWithSession();
    state.helpRequest = { id: "H1", session_id: "S1", problem_text: "stuck",
                          status: "Claimed", claimed_by: "super-1", message_count: 1 };
    state.helpMessages = [{ seq: 1, from_actor: "super-1", kind: "StepAnnotation",
                            body: "support the disk", step_index: 5, unit_id: null }];
    const html = render(state);
    expect(html).toContain('data-test="annotation-5"');
    expect(html).not.toContain('data-test="annotation-4"');
    expect(html).toContain("support the disk");
  });

  it("freezes the thread when the request is closed", () => {
    const state = stateWithSession();
    state.helpRequest = { id: "H1", session_id: "S1", problem_text: "stuck",
                          status: "Closed", claimed_by: null, message_count: 0 };
    const html = render(state);
    expect(html).toMatch(/data-field="help-draft"[^>]*disabled/);
    expect(html).toMatch(/data-action="post-message"[^>]*disabled/);
  });
});

describe("service text passthrough", () => {
  it("shows error code and message verbatim", () => {
    const state = stateWithSession();
    state.lastError = { code: "RequestClosed", message: "request H1 is closed" };
    const html = render(state);
    expect(html).toContain("RequestClosed: request H1 is closed");
  });

  it("escapes markup in service-provided text", () => {
    const state = stateWithSession();
    state.session!.steps[0].description = '<img src=x onerror="boom">';
    const html = render(state);
    expect(html).not.toContain("<img");
    expect(html).toContain("&lt;img");
  });

  it("offline scan shows the unresolved central record state", () => {
    const state = stateWithSession();
    state.lastScan = { tag_id: "T-PC042", entity: { kind: "Appliance", entity_id: "PC-042" },
                       in_situ: { model: "HDD-SATA" }, central_record: null,
                       resolved_online: false };
    const html = render(state);
    expect(html).toContain('data-test="scan-online">false');
    expect(html).toContain("(offline — not resolved)");
  });
});
