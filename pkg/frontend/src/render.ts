/**
 * Pure view: ConsoleState in, HTML string out. Same state, same markup —
 * there is deliberately no logic here beyond showing what the service said.
 */

import { Message, StepView } from "./api";
import { ConsoleState, tagsForEntities } from "./state";

function esc(text: unknown): string {
  return String(text)
    .replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function options(values: { value: string; label: string }[], selected: string): string {
  return values.map(({ value, label }) =>
    `<option value="${esc(value)}"${value === selected ? " selected" : ""}>${esc(label)}</option>`,
  ).join("");
}

function connectionBanner(state: ConsoleState): string {
  if (!state.connectionError) return "";
  return `<div class="banner error" data-test="connection-error">
    service unreachable: ${esc(state.connectionError)}
    <button data-action="retry">retry</button>
  </div>`;
}

function errorBanner(state: ConsoleState): string {
  if (!state.lastError) return "";
  return `<div class="banner error" data-test="service-error">
    ${esc(state.lastError.code)}: ${esc(state.lastError.message)}
  </div>`;
}

function deviationBanner(state: ConsoleState): string {
  const outcome = state.lastOutcome;
  const fromOutcome = outcome && outcome.deviations.length > 0;
  const recorded = state.deviationEvents.length;
  if (!fromOutcome && recorded === 0) return "";
  const parts: string[] = [];
  if (fromOutcome) {
    const verdict = outcome.accepted ? "recorded" : "rejected";
    parts.push(`step report ${verdict}: ${outcome.deviations.join(", ")}`);
  }
  if (recorded > 0) parts.push(`${recorded} deviation event(s) in the trace`);
  return `<div class="banner deviation" data-test="deviation-banner">${esc(parts.join(" — "))}</div>`;
}

function startForm(state: ConsoleState): string {
  return `<section class="panel" data-test="start-form">
    <h2>Start session</h2>
    <label>actor <select data-field="actor">${options(
      state.actors.map((a) => ({ value: a.id, label: `${a.id} (${a.accreditation})` })),
      state.selectedActor)}</select></label>
    <label>procedure <select data-field="procedure">${options(
      state.procedures.map((p) => ({ value: p.id, label: `${p.id} — ${p.title}` })),
      state.selectedProcedure)}</select></label>
    <label>mode <select data-field="session-mode">${options(
      [{ value: "Strict", label: "Strict" }, { value: "Advisory", label: "Advisory" }],
      state.sessionMode)}</select></label>
    <button data-action="start-session">start</button>
    <p class="hint">scan the appliance tag first, then start</p>
  </section>`;
}

function scanPanel(state: ConsoleState): string {
  const scan = state.lastScan;
  const result = scan === null ? "" : `
    <dl class="scan-result" data-test="scan-result">
      <dt>tag</dt><dd>${esc(scan.tag_id)} → ${esc(scan.entity.kind)} ${esc(scan.entity.entity_id)}</dd>
      <dt>resolved online</dt><dd data-test="scan-online">${scan.resolved_online}</dd>
      <dt>in-situ</dt><dd>${esc(JSON.stringify(scan.in_situ))}</dd>
      <dt>central record</dt><dd data-test="scan-central">${
        scan.central_record ? esc(JSON.stringify(scan.central_record)) : "(offline — not resolved)"}</dd>
    </dl>`;
  return `<section class="panel" data-test="scan-panel">
    <h2>Simulate scan</h2>
    <label>tag <select data-field="tag">${options(
      state.tags.map((t) => ({ value: t.tag_id, label: `${t.tag_id} (${t.entity.kind} ${t.entity.entity_id})` })),
      state.selectedTag)}</select></label>
    <label><input type="checkbox" data-field="online"${state.online ? " checked" : ""}> network online</label>
    <button data-action="scan">scan</button>
    ${result}
  </section>`;
}

function annotationsFor(messages: Message[], stepIndex: number): Message[] {
  return messages.filter((m) => m.kind === "StepAnnotation" && m.step_index === stepIndex);
}

function stepRow(state: ConsoleState, step: StepView, cursor: number): string {
  const active = state.session?.state === "Active";
  const current = step.index === cursor && active;
  const badges = annotationsFor(state.helpMessages, step.index)
    .map((m) => `<span class="badge annotation" data-test="annotation-${step.index}" title="${esc(m.body)}">✎ ${esc(m.from_actor)}</span>`)
    .join(" ");
  // every step stays reportable: order enforcement is the service's job
  const report = active
    ? `<button data-action="report-step" data-step="${step.index}" data-test="report-${step.index}">report</button>`
    : "";
  return `<li class="step status-${esc(step.status)}${current ? " current" : ""}"
      data-test="step-${step.index}" data-status="${esc(step.status)}">
    <span class="index">${step.index}</span>
    <span class="description">${esc(step.description)}</span>
    <span class="status">${esc(step.status)}</span>
    ${badges} ${report}
  </li>`;
}

function checklist(state: ConsoleState, kind: "tools" | "parts", entityIds: string[],
                   checked: string[]): string {
  if (entityIds.length === 0) return `<p class="hint">no required ${kind}</p>`;
  const rows = tagsForEntities(state.tags, entityIds).map((tag) => `
    <label><input type="checkbox" data-field="${kind}" value="${esc(tag.tag_id)}"${
      checked.includes(tag.tag_id) ? " checked" : ""}>
      ${esc(tag.entity.entity_id)} (scan ${esc(tag.tag_id)})</label>`);
  return rows.join("");
}

function sessionPanel(state: ConsoleState): string {
  const session = state.session;
  if (!session) return "";
  const prescription = state.prescription;
  const presc = prescription === null ? "<p>session closed</p>" : `
    <div class="prescription" data-test="prescription">
      <h3>step ${prescription.step.index}: ${esc(prescription.step.description)}</h3>
      <div class="checklist" data-test="tool-checklist">
        <h4>required tools</h4>
        ${checklist(state, "tools", prescription.required_tools, state.checkedTools)}
      </div>
      <div class="checklist" data-test="part-checklist">
        <h4>required parts</h4>
        ${checklist(state, "parts", prescription.required_parts, state.checkedParts)}
      </div>
      <button data-action="report-step" data-step="${prescription.step.index}">
        report step ${prescription.step.index}</button>
    </div>`;
  return `<section class="panel" data-test="session-panel">
    <h2>${esc(session.procedure_title)}</h2>
    <p data-test="session-meta">session ${esc(session.id)} — ${esc(session.mode)} —
      <span data-test="session-state">${esc(session.state)}</span></p>
    <ol class="steps" data-test="step-list">
      ${session.steps.map((s) => stepRow(state, s, session.cursor)).join("\n")}
    </ol>
    ${presc}
  </section>`;
}

function learningPanel(state: ConsoleState): string {
  if (!state.session) return "";
  const units = state.selectedUnits.map((u) =>
    `<li data-test="unit-${esc(u.id)}">${esc(u.id)} — ${esc(u.title)}</li>`).join("");
  const renditions = state.renditions.map((r) => `
    <article class="rendition" data-test="rendition-${esc(r.unit_id)}">
      <h4>${esc(r.title)}</h4>
      ${r.fragments.map((f) => f.media_kind === "Text"
        ? `<p class="fragment text">${esc(f.body)}</p>`
        : `<p class="fragment media">[${esc(f.media_kind)}] ${esc(f.body)}</p>`).join("")}
      ${r.substitutions.map((s) =>
        `<p class="substitution">(${esc(s.media_kind)} fragment ${esc(s.reason)})</p>`).join("")}
    </article>`).join("");
  return `<section class="panel" data-test="learning-panel">
    <h2>Learning</h2>
    <label>mode <select data-field="learning-mode">${options(
      ["BeforeWork", "DuringWork", "AfterWork"].map((m) => ({ value: m, label: m })),
      state.learningMode)}</select></label>
    <label>device <select data-field="device">${options(
      state.devices.map((d) => ({ value: d.id, label: `${d.id} (${d.display})` })),
      state.selectedDevice)}</select></label>
    <button data-action="learn">learn</button>
    <ul class="units" data-test="unit-list">${units}</ul>
    <div class="renditions">${renditions}</div>
  </section>`;
}

function helpPanel(state: ConsoleState): string {
  if (!state.session) return "";
  const request = state.helpRequest;
  if (!request) {
    return `<section class="panel" data-test="help-panel">
      <h2>Remote help</h2>
      <input data-field="help-problem" placeholder="describe the problem"
             value="${esc(state.helpProblem)}">
      <button data-action="request-help">ask for help</button>
    </section>`;
  }
  const closed = request.status === "Closed";
  const thread = state.helpMessages.map((m) => `
    <li data-test="message-${m.seq}">
      <b>${esc(m.from_actor)}</b> [${esc(m.kind)}${m.step_index != null ? ` → step ${m.step_index}` : ""}]:
      ${esc(m.body)}
    </li>`).join("");
  return `<section class="panel" data-test="help-panel">
    <h2>Remote help — ${esc(request.status)}${request.claimed_by ? ` by ${esc(request.claimed_by)}` : ""}</h2>
    <p data-test="help-problem">${esc(request.problem_text)}</p>
    <ol class="thread" data-test="help-thread">${thread}</ol>
    <input data-field="help-draft" value="${esc(state.helpDraft)}"${closed ? " disabled" : ""}
           placeholder="${closed ? "request closed" : "message the expert"}">
    <button data-action="post-message"${closed ? " disabled" : ""}>send</button>
  </section>`;
}

export function render(state: ConsoleState): string {
  return `
  ${connectionBanner(state)}
  ${errorBanner(state)}
  ${deviationBanner(state)}
  ${state.session ? "" : startForm(state)}
  ${scanPanel(state)}
  ${sessionPanel(state)}
  ${learningPanel(state)}
  ${helpPanel(state)}
  `;
}
