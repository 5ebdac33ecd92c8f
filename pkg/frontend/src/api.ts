/**
 * Typed client for the workbench service. Every call returns the parsed JSON
 * body; non-2xx responses throw ServiceError carrying the service's own
 * machine-readable code and message verbatim.
 */

export interface EntityRef {
  kind: string;
  entity_id: string;
}

export interface TagRecord {
  tag_id: string;
  entity: EntityRef;
  capacity_bytes: number;
  payload: Record<string, string>;
}

export interface ScanResult {
  tag_id: string;
  entity: EntityRef;
  in_situ: Record<string, string>;
  central_record: Record<string, unknown> | null;
  resolved_online: boolean;
}

export interface StepView {
  index: number;
  description: string;
  status: string;
  required_tools: string[];
  required_parts: string[];
  required_accreditation: string;
  learning_unit_refs: string[];
}

export interface SessionView {
  id: string;
  actor_id: string;
  appliance: EntityRef;
  procedure_id: string;
  procedure_title: string;
  mode: string;
  cursor: number;
  state: string;
  steps: StepView[];
}

export interface Prescription {
  step: { index: number; description: string; required_accreditation: string };
  required_tools: string[];
  required_parts: string[];
  learning_unit_refs: string[];
}

export interface StepOutcome {
  accepted: boolean;
  deviations: string[];
  status: string;
  cursor: number;
  session_state: string;
}

export interface UnitSummary {
  id: string;
  title: string;
  fragments: string[];
  metadata: {
    expertise: string;
    task_category: string;
    appliance_models: string[];
    step_ref: { procedure: string; index: number } | null;
    specificity: string;
    protection: string;
    topics: string[];
  };
}

export interface FragmentView {
  id: string;
  media_kind: string;
  body: string;
  locator: string;
}

export interface Rendition {
  unit_id: string;
  title: string;
  fragments: FragmentView[];
  substitutions: { fragment_id: string; media_kind: string; reason: string }[];
}

export interface HelpRequestView {
  id: string;
  session_id: string;
  problem_text: string;
  status: string;
  claimed_by: string | null;
  message_count: number;
}

export interface Message {
  seq: number;
  from_actor: string;
  kind: string;
  body: string;
  step_index: number | null;
  unit_id: string | null;
}

export interface TraceEvent {
  seq: number;
  ts: number;
  actor: string;
  session: string | null;
  kind: string;
  payload: Record<string, unknown>;
  chain: string;
}

export interface ActorView {
  id: string;
  name: string;
  accreditation: string;
  expertise: string;
  device: string;
}

export interface ProcedureSummary {
  id: string;
  title: string;
  appliance_model: string;
  min_accreditation: string;
  steps_total: number;
}

export interface DeviceView {
  id: string;
  display: string;
  max_media: string[];
  hands_free: boolean;
}

export class ServiceError extends Error {
  constructor(readonly code: string, message: string, readonly status: number) {
    super(message);
  }
}

export class ApiClient {
  constructor(private baseUrl: string,
              private fetchFn: typeof fetch = fetch.bind(globalThis)) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    const parsed = text ? JSON.parse(text) : {};
    if (!response.ok) {
      throw new ServiceError(parsed.code ?? "Unknown", parsed.message ?? text, response.status);
    }
    return parsed as T;
  }

  listTags(): Promise<{ tags: TagRecord[] }> {
    return this.call("GET", "/tags");
  }

  listActors(): Promise<{ actors: ActorView[] }> {
    return this.call("GET", "/actors");
  }

  listProcedures(): Promise<{ procedures: ProcedureSummary[] }> {
    return this.call("GET", "/procedures");
  }

  listDevices(): Promise<{ devices: DeviceView[] }> {
    return this.call("GET", "/devices");
  }

  scan(actorId: string, tagId: string, online: boolean): Promise<ScanResult> {
    return this.call("POST", "/scans", { actor_id: actorId, tag_id: tagId, online });
  }

  startSession(actorId: string, applianceId: string, procedureId: string,
               mode: string): Promise<SessionView> {
    return this.call("POST", "/sessions", {
      actor_id: actorId, appliance_id: applianceId, procedure_id: procedureId, mode,
    });
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.call("GET", `/sessions/${sessionId}`);
  }

  getPrescription(sessionId: string): Promise<Prescription> {
    return this.call("GET", `/sessions/${sessionId}/prescription`);
  }

  reportStep(sessionId: string, stepIndex: number, toolTags: string[],
             partTags: string[]): Promise<StepOutcome> {
    return this.call("POST", `/sessions/${sessionId}/steps`, {
      step_index: stepIndex, tool_tags: toolTags, part_tags: partTags,
    });
  }

  selectUnits(sessionId: string, mode: string, online: boolean): Promise<{ units: UnitSummary[] }> {
    const params = new URLSearchParams({ mode, session_id: sessionId, online: String(online) });
    return this.call("GET", `/units?${params}`);
  }

  rendition(unitId: string, device: string, sessionId?: string): Promise<Rendition> {
    const params = new URLSearchParams({ device });
    if (sessionId !== undefined) params.set("session", sessionId);
    return this.call("GET", `/units/${unitId}/rendition?${params}`);
  }

  requestHelp(sessionId: string, problem: string): Promise<HelpRequestView> {
    return this.call("POST", `/sessions/${sessionId}/help`, { problem });
  }

  getHelp(requestId: string): Promise<HelpRequestView> {
    return this.call("GET", `/help/${requestId}`);
  }

  postMessage(requestId: string, fromActor: string, body: string): Promise<Message> {
    return this.call("POST", `/help/${requestId}/messages`, {
      from_actor: fromActor, kind: "Text", body,
    });
  }

  pollMessages(requestId: string, after: number):
      Promise<{ status: string; messages: Message[] }> {
    return this.call("GET", `/help/${requestId}/messages?after=${after}`);
  }

  traceDeviations(sessionId: string): Promise<{ events: TraceEvent[] }> {
    const params = new URLSearchParams({ session: sessionId, kind: "Deviation" });
    return this.call("GET", `/trace?${params}`);
  }
}
