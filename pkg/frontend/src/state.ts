/**
 * Console state: the latest service responses plus the user's current form
 * inputs. No derived business facts live here — everything the screen shows
 * is computed in render() as a pure function of this snapshot.
 */

import {
  ActorView, DeviceView, HelpRequestView, Message, Prescription, ProcedureSummary,
  Rendition, ScanResult, SessionView, StepOutcome, TagRecord, TraceEvent, UnitSummary,
} from "./api";

export interface ConsoleState {
  // fixture listings (loaded once)
  tags: TagRecord[];
  actors: ActorView[];
  procedures: ProcedureSummary[];
  devices: DeviceView[];

  // user inputs
  selectedActor: string;
  selectedProcedure: string;
  selectedTag: string;
  selectedDevice: string;
  sessionMode: string;        // Strict | Advisory
  learningMode: string;       // BeforeWork | DuringWork | AfterWork
  online: boolean;
  checkedTools: string[];     // tag ids ticked on the checklist
  checkedParts: string[];
  helpProblem: string;
  helpDraft: string;

  // latest service responses
  session: SessionView | null;
  prescription: Prescription | null;
  lastScan: ScanResult | null;
  lastOutcome: StepOutcome | null;
  deviationEvents: TraceEvent[];
  selectedUnits: UnitSummary[];
  renditions: Rendition[];
  helpRequest: HelpRequestView | null;
  helpMessages: Message[];

  // connection status
  connectionError: string | null;
  lastError: { code: string; message: string } | null;
}

export function initialState(): ConsoleState {
  return {
    tags: [],
    actors: [],
    procedures: [],
    devices: [],
    selectedActor: "",
    selectedProcedure: "",
    selectedTag: "",
    selectedDevice: "",
    sessionMode: "Strict",
    learningMode: "DuringWork",
    online: true,
    checkedTools: [],
    checkedParts: [],
    helpProblem: "",
    helpDraft: "",
    session: null,
    prescription: null,
    lastScan: null,
    lastOutcome: null,
    deviationEvents: [],
    selectedUnits: [],
    renditions: [],
    helpRequest: null,
    helpMessages: [],
    connectionError: null,
    lastError: null,
  };
}

/** Tag ids bound to the given entity ids — a data join, not a rule. */
export function tagsForEntities(tags: TagRecord[], entityIds: string[]): TagRecord[] {
  return tags.filter((t) => entityIds.includes(t.entity.entity_id));
}
