/**
 * Console wiring: holds the latest state snapshot, re-renders on every
 * change, and maps DOM events to service calls. All decisions about what to
 * show live in render(); this file only moves data between the service and
 * the state.
 */

import { ApiClient, ServiceError } from "./api";
import { initialState, ConsoleState } from "./state";
import { render } from "./render";

export class ConsoleApp {
  state: ConsoleState = initialState();
  private pending: Promise<void> = Promise.resolve();
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(private root: HTMLElement, private api: ApiClient) {
    root.addEventListener("click", (event) => {
      const target = (event.target as HTMLElement).closest("[data-action]");
      if (!target) return;
      const dataset = { ...(target as HTMLElement).dataset };
      this.pending = this.pending.then(() => this.dispatch(dataset.action!, dataset));
    });
    root.addEventListener("change", (event) => {
      this.onFieldChange(event.target as HTMLInputElement | HTMLSelectElement);
    });
  }

  /** Await all queued actions — used by tests to get a settled DOM. */
  flush(): Promise<void> {
    return this.pending;
  }

  async init(): Promise<void> {
    await this.guard(async () => {
      const [tags, actors, procedures, devices] = await Promise.all([
        this.api.listTags(), this.api.listActors(),
        this.api.listProcedures(), this.api.listDevices(),
      ]);
      this.state.tags = tags.tags;
      this.state.actors = actors.actors;
      this.state.procedures = procedures.procedures;
      this.state.devices = devices.devices;
      this.state.selectedActor ||= this.state.actors[0]?.id ?? "";
      this.state.selectedProcedure ||= this.state.procedures[0]?.id ?? "";
      this.state.selectedTag ||= this.state.tags[0]?.tag_id ?? "";
      this.state.selectedDevice ||= this.state.devices[0]?.id ?? "";
    });
    this.rerender();
  }

  startPolling(intervalMs = 1000): void {
    this.stopPolling();
    this.timer = setInterval(() => {
      this.pending = this.pending.then(() => this.tick());
    }, intervalMs);
  }

  stopPolling(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }

  /** One poll round: refresh the session view, deviations and help thread. */
  async tick(): Promise<void> {
    if (!this.state.session) return;
    await this.guard(async () => {
      await this.refreshSession();
      await this.refreshHelp();
    });
    this.rerender();
  }

  private rerender(): void {
    this.root.innerHTML = render(this.state);
  }

  private onFieldChange(element: HTMLInputElement | HTMLSelectElement): void {
    const field = element.dataset.field;
    if (!field) return;
    const s = this.state;
    switch (field) {
      case "actor": s.selectedActor = element.value; break;
      case "procedure": s.selectedProcedure = element.value; break;
      case "session-mode": s.sessionMode = element.value; break;
      case "tag": s.selectedTag = element.value; break;
      case "device": s.selectedDevice = element.value; break;
      case "learning-mode": s.learningMode = element.value; break;
      case "online": s.online = (element as HTMLInputElement).checked; break;
      case "help-problem": s.helpProblem = element.value; break;
      case "help-draft": s.helpDraft = element.value; break;
      case "tools":
      case "parts": {
        const list = field === "tools" ? s.checkedTools : s.checkedParts;
        const value = element.value;
        const checked = (element as HTMLInputElement).checked;
        const index = list.indexOf(value);
        if (checked && index < 0) list.push(value);
        if (!checked && index >= 0) list.splice(index, 1);
        break;
      }
    }
  }

  async dispatch(action: string, dataset: Record<string, string | undefined> = {}): Promise<void> {
    await this.guard(async () => {
      switch (action) {
        case "retry":
          this.state.connectionError = null;
          await this.init();
          return;
        case "scan":
          this.state.lastScan = await this.api.scan(
            this.actorId(), this.state.selectedTag, this.state.online);
          return;
        case "start-session": {
          this.state.session = await this.api.startSession(
            this.state.selectedActor, this.applianceIdForProcedure(),
            this.state.selectedProcedure, this.state.sessionMode);
          const actor = this.state.actors.find((a) => a.id === this.state.selectedActor);
          if (actor && this.state.devices.some((d) => d.id === actor.device)) {
            this.state.selectedDevice = actor.device;
          }
          await this.refreshSession();
          return;
        }
        case "report-step": {
          if (!this.state.session) return;
          const step = dataset.step !== undefined
            ? Number(dataset.step)
            : this.state.prescription?.step.index;
          if (step === undefined) return;
          this.state.lastOutcome = await this.api.reportStep(
            this.state.session.id, step,
            this.state.checkedTools, this.state.checkedParts);
          this.state.checkedTools = [];
          this.state.checkedParts = [];
          await this.refreshSession();
          return;
        }
        case "learn": {
          if (!this.state.session) return;
          const { units } = await this.api.selectUnits(
            this.state.session.id, this.state.learningMode, this.state.online);
          this.state.selectedUnits = units;
          const renditions = [];
          for (const unit of units) {
            renditions.push(await this.api.rendition(
              unit.id, this.state.selectedDevice, this.state.session.id));
          }
          this.state.renditions = renditions;
          return;
        }
        case "request-help":
          if (!this.state.session) return;
          this.state.helpRequest = await this.api.requestHelp(
            this.state.session.id, this.state.helpProblem);
          this.state.helpMessages = [];
          return;
        case "post-message":
          if (!this.state.helpRequest) return;
          await this.api.postMessage(
            this.state.helpRequest.id, this.actorId(), this.state.helpDraft);
          this.state.helpDraft = "";
          await this.refreshHelp();
          return;
      }
    });
    this.rerender();
  }

  private actorId(): string {
    return this.state.session?.actor_id ?? this.state.selectedActor;
  }

  /** The appliance the last scan resolved; falls back to any tagged appliance
   * whose model matches nothing client-side — the service validates. */
  private applianceIdForProcedure(): string {
    if (this.state.lastScan && this.state.lastScan.entity.kind === "Appliance") {
      return this.state.lastScan.entity.entity_id;
    }
    const tagged = this.state.tags.find((t) => t.entity.kind === "Appliance");
    return tagged ? tagged.entity.entity_id : "";
  }

  private async refreshSession(): Promise<void> {
    if (!this.state.session) return;
    const id = this.state.session.id;
    this.state.session = await this.api.getSession(id);
    if (this.state.session.state === "Active") {
      this.state.prescription = await this.api.getPrescription(id);
    } else {
      this.state.prescription = null;
    }
    this.state.deviationEvents = (await this.api.traceDeviations(id)).events;
  }

  private async refreshHelp(): Promise<void> {
    if (!this.state.helpRequest) return;
    this.state.helpRequest = await this.api.getHelp(this.state.helpRequest.id);
    const { messages } = await this.api.pollMessages(this.state.helpRequest.id, 0);
    this.state.helpMessages = messages;
  }

  private async guard(work: () => Promise<void>): Promise<void> {
    this.state.lastError = null;
    try {
      await work();
      this.state.connectionError = null;
    } catch (error) {
      if (error instanceof ServiceError) {
        this.state.lastError = { code: error.code, message: error.message };
      } else {
        this.state.connectionError = error instanceof Error ? error.message : String(error);
      }
    }
    this.rerender();
  }
}

export function mount(root: HTMLElement, baseUrl: string): ConsoleApp {
  const app = new ConsoleApp(root, new ApiClient(baseUrl));
  void app.init().then(() => app.startPolling());
  return app;
}
