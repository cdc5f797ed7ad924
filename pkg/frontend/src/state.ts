// View-model for one solve session. All transitions are pure-ish mutations of
// a single state object; budget numbers are only ever copied from server
// responses, never computed client-side.

import type {
  BudgetRemaining,
  SessionSummary,
  SessionView,
  SubmissionOutcome,
  TaskDetail,
} from "./api.js";

export interface EditorState {
  unitId: string;
  text: string;
  // inline error from the last submit of this editor (e.g. a parse failure)
  error: string | null;
}

export interface AttemptRecord {
  attempt: number;
  passed: boolean;
  failingCount: number;
  // failingCount change vs the previous attempt; null for the first attempt
  delta: number | null;
  suiteExit: string;
  failing: string[];
}

export interface EventEntry {
  kind: "tool" | "submit" | "error" | "info";
  text: string;
}

export interface WorkspaceView {
  title: string;
  lines: string[];
}

export interface SessionState {
  session: SessionView;
  task: TaskDetail;
  failing: string[];
  attempts: AttemptRecord[];
  editors: EditorState[];
  events: EventEntry[];
  workspace: WorkspaceView | null;
  locked: boolean;
  lockReason: string | null;
  summary: SessionSummary | null;
}

export function createSessionState(session: SessionView, task: TaskDetail): SessionState {
  return {
    session,
    task,
    failing: [...task.failing_tests],
    attempts: [],
    editors: [],
    events: [],
    workspace: null,
    locked: false,
    lockReason: null,
    summary: null,
  };
}

/** Overwrite budgets with what the server just reported. */
export function applyBudget(state: SessionState, remaining: BudgetRemaining): void {
  state.session = { ...state.session, budget_remaining: { ...remaining } };
}

export function applySessionView(state: SessionState, view: SessionView): void {
  state.session = { ...view, budget_remaining: { ...view.budget_remaining } };
}

export function recordAttempt(state: SessionState, outcome: SubmissionOutcome): AttemptRecord {
  const previous = state.attempts.at(-1);
  const record: AttemptRecord = {
    attempt: outcome.attempt,
    passed: outcome.passed,
    failingCount: outcome.failing_count,
    delta: previous ? outcome.failing_count - previous.failingCount : null,
    suiteExit: outcome.suite_exit,
    failing: [...outcome.failing],
  };
  state.attempts.push(record);
  state.failing = [...outcome.failing];
  return record;
}

export function openEditor(state: SessionState, unitId: string, text: string): EditorState {
  const existing = state.editors.find((e) => e.unitId === unitId);
  if (existing) {
    return existing;
  }
  const editor: EditorState = { unitId, text, error: null };
  state.editors.push(editor);
  return editor;
}

export function updateEditor(state: SessionState, unitId: string, text: string): void {
  const editor = state.editors.find((e) => e.unitId === unitId);
  if (editor) {
    editor.text = text;
    editor.error = null;
  }
}

export function setEditorError(state: SessionState, unitId: string, message: string): void {
  const editor = state.editors.find((e) => e.unitId === unitId);
  if (editor) {
    editor.error = message;
  }
}

export function logEvent(state: SessionState, kind: EventEntry["kind"], text: string): void {
  state.events.push({ kind, text });
}

export function lockSession(state: SessionState, reason: string): void {
  state.locked = true;
  state.lockReason = reason;
}

export function finishSession(state: SessionState, summary: SessionSummary): void {
  state.summary = summary;
  state.locked = true;
  state.lockReason = summary.state;
  state.session = { ...state.session, state: summary.state };
}

/**
 * Shape a raw tool result into display lines. Only renders fields the
 * documented tool contracts define.
 */
export function describeToolResult(
  tool: string,
  result: Record<string, unknown>,
): WorkspaceView {
  const lines: string[] = [];
  if (Array.isArray(result.entries)) {
    for (const entry of result.entries as { name: string; type: string }[]) {
      lines.push(`${entry.type === "dir" ? "dir " : "file"}  ${entry.name}`);
    }
  } else if (Array.isArray(result.matches)) {
    for (const match of result.matches as { file: string; line: number; text: string }[]) {
      lines.push(`${match.file}:${match.line}: ${match.text}`);
    }
    if (result.truncated) {
      lines.push("... (truncated)");
    }
  } else if (Array.isArray(result.units)) {
    for (const unit of result.units as { id: string; signature: string }[]) {
      lines.push(`${unit.id}  ${unit.signature}`);
    }
  } else if (typeof result.text === "string") {
    lines.push(...result.text.split("\n"));
  } else {
    lines.push(JSON.stringify(result));
  }
  return { title: tool, lines };
}
