// Controller wiring the session API, the view-model and the DOM together.
// The DOM and fetch implementation are injected so tests can run the whole
// app against a scripted service.

import {
  isSummary,
  ServiceError,
  SessionApi,
  type SessionSummary,
  type ToolName,
} from "./api.js";
import {
  renderRetryBanner,
  renderSession,
  renderTaskList,
  type SessionHandlers,
} from "./render.js";
import {
  applyBudget,
  applySessionView,
  createSessionState,
  describeToolResult,
  finishSession,
  lockSession,
  logEvent,
  openEditor,
  recordAttempt,
  setEditorError,
  updateEditor,
  type SessionState,
} from "./state.js";

export interface AppDeps {
  document: Document;
  root: HTMLElement;
  api: SessionApi;
}

export class SolveApp {
  state: SessionState | null = null;
  private readonly doc: Document;
  private readonly root: HTMLElement;
  private readonly api: SessionApi;
  private readonly handlers: SessionHandlers;
  // last top-level action, replayed by the retry banner after a network error
  private lastAction: () => Promise<void>;

  constructor(deps: AppDeps) {
    this.doc = deps.document;
    this.root = deps.root;
    this.api = deps.api;
    this.lastAction = () => this.showTasks();
    this.handlers = {
      onTool: (tool, args) => void this.invokeTool(tool, args),
      onOpenUnit: (unitId) => void this.openUnit(unitId),
      onEditorInput: (unitId, text) => {
        if (this.state) updateEditor(this.state, unitId, text);
      },
      onSubmit: (unitId) => void this.submitEditor(unitId),
      onClose: () => void this.closeSession(),
      onRefresh: () => void this.refresh(),
    };
  }

  async showTasks(): Promise<void> {
    this.lastAction = () => this.showTasks();
    let tasks;
    try {
      tasks = await this.api.listTasks();
    } catch (err) {
      this.handleError(err);
      return;
    }
    this.state = null;
    this.mount(
      renderTaskList(this.doc, tasks, { onStart: (taskId) => void this.startTask(taskId) }),
    );
  }

  async startTask(taskId: string, budgetPreset = "default"): Promise<void> {
    this.lastAction = () => this.startTask(taskId, budgetPreset);
    try {
      const session = await this.api.createSession({ task_id: taskId, budget_preset: budgetPreset });
      const task = await this.api.getTask(taskId);
      const state = createSessionState(session, task);
      this.state = state;
      if (task.mode === "remove" && task.corruptions && task.corruptions.length > 0) {
        // the broken unit is known up front: open it ready to edit
        const corruption = task.corruptions[0];
        openEditor(state, corruption.target, corruption.corrupted_body);
        logEvent(state, "info", `opened target ${corruption.target}`);
      } else {
        logEvent(state, "info", "discovery task: locate the corrupted function");
      }
      this.rerender();
    } catch (err) {
      this.handleError(err);
    }
  }

  /** Rebuild server-owned parts of the view from the GET endpoints. */
  async refresh(): Promise<void> {
    const state = this.state;
    if (!state) return;
    this.lastAction = () => this.refresh();
    try {
      const view = await this.api.getSession(state.session.session_id);
      if (isSummary(view)) {
        finishSession(state, view);
      } else {
        applySessionView(state, view);
      }
      const task = await this.api.getTask(state.task.task_id);
      state.task = task;
      if (state.attempts.length === 0) {
        state.failing = [...task.failing_tests];
      }
      logEvent(state, "info", "refreshed from server");
      this.rerender();
    } catch (err) {
      this.handleError(err);
    }
  }

  async invokeTool(tool: ToolName, args: Record<string, unknown>): Promise<void> {
    const state = this.state;
    if (!state || state.locked) return;
    this.lastAction = () => this.invokeTool(tool, args);
    try {
      const response = await this.api.invokeTool(state.session.session_id, tool, args);
      applyBudget(state, response.budget_remaining);
      state.workspace = describeToolResult(tool, response.result);
      logEvent(state, "tool", `${tool} ${JSON.stringify(args)}`);
      this.rerender();
    } catch (err) {
      this.handleError(err);
    }
  }

  /** Read a unit through the charged tool and open it in an editor. */
  async openUnit(unitId: string): Promise<void> {
    const state = this.state;
    if (!state || state.locked || !unitId) return;
    this.lastAction = () => this.openUnit(unitId);
    try {
      const response = await this.api.invokeTool(state.session.session_id, "read_function", {
        unit_id: unitId,
      });
      applyBudget(state, response.budget_remaining);
      const text = typeof response.result.text === "string" ? response.result.text : "";
      openEditor(state, unitId, text);
      logEvent(state, "tool", `read_function ${unitId}`);
      this.rerender();
    } catch (err) {
      this.handleError(err);
    }
  }

  async submitEditor(unitId: string): Promise<void> {
    const state = this.state;
    if (!state || state.locked) return;
    const editor = state.editors.find((e) => e.unitId === unitId);
    if (!editor) return;
    this.lastAction = () => this.submitEditor(unitId);
    try {
      const response =
        state.session.mode === "remove"
          ? await this.api.submit(state.session.session_id, editor.text)
          : await this.api.submit(state.session.session_id, editor.text, unitId);
      applyBudget(state, response.budget_remaining);
      const record = recordAttempt(state, response.result);
      logEvent(
        state,
        "submit",
        `attempt ${record.attempt}: ${record.passed ? "passed" : `${record.failingCount} failing`}`,
      );
      if (record.passed) {
        const summary = await this.api.closeSession(state.session.session_id);
        finishSession(state, summary);
      }
      this.rerender();
    } catch (err) {
      if (err instanceof ServiceError && err.code === "unparseable_body") {
        setEditorError(state, unitId, err.message);
        logEvent(state, "error", `attempt rejected: ${err.message}`);
        this.rerender();
        return;
      }
      this.handleError(err);
    }
  }

  async closeSession(): Promise<void> {
    const state = this.state;
    if (!state || state.summary) return;
    this.lastAction = () => this.closeSession();
    try {
      const summary = await this.api.closeSession(state.session.session_id);
      finishSession(state, summary);
      this.rerender();
    } catch (err) {
      this.handleError(err);
    }
  }

  get summary(): SessionSummary | null {
    return this.state?.summary ?? null;
  }

  private handleError(err: unknown): void {
    if (err instanceof ServiceError && this.state) {
      if (err.status === 410) {
        lockSession(this.state, `${err.code}: ${err.message}`);
      }
      logEvent(this.state, "error", `${err.code}: ${err.message}`);
      this.rerender();
      return;
    }
    // no session context, or the fetch itself failed: service unreachable
    this.mount(renderRetryBanner(this.doc, () => void this.lastAction()));
  }

  private rerender(): void {
    if (!this.state) return;
    this.mount(renderSession(this.doc, this.state, this.handlers));
  }

  private mount(node: HTMLElement): void {
    this.root.replaceChildren(node);
  }
}
