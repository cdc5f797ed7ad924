// DOM builders for the solve UI. Every builder is a pure function of the
// state it is given; user-visible data always flows through textContent.

import type { TaskSummary, ToolName } from "./api.js";
import { INFO_TOOLS } from "./api.js";
import type { SessionState } from "./state.js";

export interface TaskListHandlers {
  onStart(taskId: string): void;
}

export interface SessionHandlers {
  onTool(tool: ToolName, args: Record<string, unknown>): void;
  onOpenUnit(unitId: string): void;
  onEditorInput(unitId: string, text: string): void;
  onSubmit(unitId: string): void;
  onClose(): void;
  onRefresh(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  options: { id?: string; className?: string; text?: string } = {},
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (options.id) node.id = options.id;
  if (options.className) node.className = options.className;
  if (options.text !== undefined) node.textContent = options.text;
  return node;
}

export function renderTaskList(
  doc: Document,
  tasks: TaskSummary[],
  handlers: TaskListHandlers,
): HTMLElement {
  const root = el(doc, "section", { id: "task-list" });
  root.appendChild(el(doc, "h1", { text: "Available tasks" }));
  const table = el(doc, "table");
  const head = el(doc, "tr");
  for (const label of ["Task", "Mode", "Corruptions", "Failing tests", ""]) {
    head.appendChild(el(doc, "th", { text: label }));
  }
  table.appendChild(head);
  for (const task of tasks) {
    const row = el(doc, "tr", { className: "task-row" });
    row.appendChild(el(doc, "td", { text: task.task_id }));
    row.appendChild(el(doc, "td", { text: task.mode }));
    row.appendChild(el(doc, "td", { text: String(task.corruption_count) }));
    row.appendChild(el(doc, "td", { text: String(task.failing_count) }));
    const cell = el(doc, "td");
    const button = el(doc, "button", { text: "Start" });
    button.setAttribute("data-start", task.task_id);
    button.addEventListener("click", () => handlers.onStart(task.task_id));
    cell.appendChild(button);
    row.appendChild(cell);
    table.appendChild(row);
  }
  root.appendChild(table);
  return root;
}

export function renderRetryBanner(doc: Document, onRetry: () => void): HTMLElement {
  const banner = el(doc, "div", { id: "retry-banner", className: "banner error" });
  banner.appendChild(el(doc, "span", { text: "Could not reach the session service." }));
  const button = el(doc, "button", { id: "retry-button", text: "Retry" });
  button.addEventListener("click", onRetry);
  banner.appendChild(button);
  return banner;
}

function renderHeader(doc: Document, state: SessionState): HTMLElement {
  const header = el(doc, "header", { className: "session-header" });
  header.appendChild(el(doc, "h1", { text: state.task.task_id }));
  const badge = el(doc, "span", { id: "mode-badge", className: "badge", text: state.session.mode });
  header.appendChild(badge);
  header.appendChild(
    el(doc, "span", {
      id: "corruption-count",
      text: `${state.task.corruption_count} corrupted function(s)`,
    }),
  );
  header.appendChild(el(doc, "span", { id: "session-state", text: state.session.state }));
  return header;
}

function renderBudgets(doc: Document, state: SessionState): HTMLElement {
  const remaining = state.session.budget_remaining;
  const panel = el(doc, "div", { id: "budget-panel" });
  panel.appendChild(
    el(doc, "span", { id: "budget-tools", text: `tool uses left: ${remaining.tool_uses}` }),
  );
  panel.appendChild(
    el(doc, "span", { id: "budget-attempts", text: `attempts left: ${remaining.attempts}` }),
  );
  return panel;
}

function renderFailing(doc: Document, state: SessionState): HTMLElement {
  const panel = el(doc, "section", { id: "failing-panel" });
  panel.appendChild(el(doc, "h2", { text: `Failing tests (${state.failing.length})` }));
  const list = el(doc, "ul");
  for (const testId of state.failing) {
    list.appendChild(el(doc, "li", { className: "failing-test", text: testId }));
  }
  panel.appendChild(list);
  return panel;
}

function renderToolBar(doc: Document, state: SessionState, handlers: SessionHandlers): HTMLElement {
  const bar = el(doc, "section", { id: "tool-bar" });
  bar.appendChild(el(doc, "h2", { text: "Explore" }));
  const pathInput = el(doc, "input", { id: "tool-path" });
  pathInput.setAttribute("placeholder", "path");
  const patternInput = el(doc, "input", { id: "tool-pattern" });
  patternInput.setAttribute("placeholder", "regex pattern");
  bar.appendChild(pathInput);
  bar.appendChild(patternInput);
  const argsFor: Record<ToolName, () => Record<string, unknown>> = {
    list_directory: () => ({ path: pathInput.value || "." }),
    search_code: () => ({ pattern: patternInput.value }),
    read_file: () => ({ path: pathInput.value }),
    list_file_functions: () => ({ path: pathInput.value }),
    read_function: () => ({ unit_id: unitInput.value }),
  };
  for (const tool of INFO_TOOLS) {
    const button = el(doc, "button", { className: "tool-button", text: tool });
    button.setAttribute("data-tool", tool);
    if (state.locked) button.disabled = true;
    button.addEventListener("click", () => handlers.onTool(tool, argsFor[tool]()));
    bar.appendChild(button);
  }
  const unitInput = el(doc, "input", { id: "tool-unit" });
  unitInput.setAttribute("placeholder", "unit id (path.py::name)");
  bar.appendChild(unitInput);
  const openButton = el(doc, "button", { id: "open-unit", text: "Open in editor" });
  if (state.locked) openButton.disabled = true;
  openButton.addEventListener("click", () => handlers.onOpenUnit(unitInput.value));
  bar.appendChild(openButton);
  return bar;
}

function renderWorkspace(doc: Document, state: SessionState): HTMLElement {
  const panel = el(doc, "section", { id: "workspace" });
  panel.appendChild(el(doc, "h2", { text: state.workspace ? state.workspace.title : "Workspace" }));
  const pre = el(doc, "pre", { id: "workspace-body" });
  pre.textContent = state.workspace ? state.workspace.lines.join("\n") : "";
  panel.appendChild(pre);
  return panel;
}

function renderEditors(doc: Document, state: SessionState, handlers: SessionHandlers): HTMLElement {
  const panel = el(doc, "section", { id: "editors" });
  panel.appendChild(el(doc, "h2", { text: "Editors" }));
  for (const editor of state.editors) {
    const box = el(doc, "div", { className: "editor" });
    box.setAttribute("data-editor", editor.unitId);
    box.appendChild(el(doc, "h3", { text: editor.unitId }));
    const area = el(doc, "textarea");
    area.setAttribute("data-unit-id", editor.unitId);
    area.value = editor.text;
    area.addEventListener("input", () => handlers.onEditorInput(editor.unitId, area.value));
    box.appendChild(area);
    if (editor.error) {
      box.appendChild(el(doc, "div", { className: "editor-error", text: editor.error }));
    }
    const submit = el(doc, "button", { className: "submit-button", text: "Submit fix" });
    submit.setAttribute("data-submit", editor.unitId);
    if (state.locked) submit.disabled = true;
    submit.addEventListener("click", () => handlers.onSubmit(editor.unitId));
    box.appendChild(submit);
    panel.appendChild(box);
  }
  return panel;
}

function renderAttempts(doc: Document, state: SessionState): HTMLElement {
  const panel = el(doc, "section", { id: "attempt-history" });
  panel.appendChild(el(doc, "h2", { text: "Attempts" }));
  const list = el(doc, "ol");
  for (const record of state.attempts) {
    const deltaText =
      record.delta === null
        ? ""
        : ` (${record.delta > 0 ? "+" : ""}${record.delta} vs previous)`;
    const status = record.passed ? "all tests pass" : `${record.failingCount} failing${deltaText}`;
    list.appendChild(
      el(doc, "li", {
        className: "attempt-row",
        text: `attempt ${record.attempt}: ${status} [${record.suiteExit}]`,
      }),
    );
  }
  panel.appendChild(list);
  return panel;
}

function renderEvents(doc: Document, state: SessionState): HTMLElement {
  const panel = el(doc, "section", { id: "event-log" });
  panel.appendChild(el(doc, "h2", { text: "Event log" }));
  const list = el(doc, "ul");
  for (const event of state.events) {
    list.appendChild(el(doc, "li", { className: `event event-${event.kind}`, text: event.text }));
  }
  panel.appendChild(list);
  return panel;
}

function renderBanners(doc: Document, state: SessionState): HTMLElement[] {
  const banners: HTMLElement[] = [];
  if (state.summary && state.summary.state === "solved") {
    banners.push(
      el(doc, "div", {
        id: "solved-banner",
        className: "banner success",
        text: `Solved on attempt ${state.summary.solved_at_attempt} — score ${state.summary.score}`,
      }),
    );
  } else if (state.summary) {
    banners.push(
      el(doc, "div", {
        id: "closed-banner",
        className: "banner",
        text: `Session closed (${state.summary.state}) — score ${state.summary.score}`,
      }),
    );
  } else if (state.locked) {
    banners.push(
      el(doc, "div", {
        id: "lock-banner",
        className: "banner warning",
        text: state.lockReason ?? "session locked",
      }),
    );
  }
  return banners;
}

export function renderSession(
  doc: Document,
  state: SessionState,
  handlers: SessionHandlers,
): HTMLElement {
  const root = el(doc, "section", { id: "session" });
  root.appendChild(renderHeader(doc, state));
  for (const banner of renderBanners(doc, state)) {
    root.appendChild(banner);
  }
  root.appendChild(renderBudgets(doc, state));
  const controls = el(doc, "div", { id: "session-controls" });
  const refresh = el(doc, "button", { id: "refresh-button", text: "Refresh" });
  refresh.addEventListener("click", handlers.onRefresh);
  controls.appendChild(refresh);
  const close = el(doc, "button", { id: "close-button", text: "Close session" });
  if (state.summary) close.disabled = true;
  close.addEventListener("click", handlers.onClose);
  controls.appendChild(close);
  root.appendChild(controls);
  root.appendChild(renderFailing(doc, state));
  root.appendChild(renderToolBar(doc, state, handlers));
  root.appendChild(renderWorkspace(doc, state));
  root.appendChild(renderEditors(doc, state, handlers));
  root.appendChild(renderAttempts(doc, state));
  root.appendChild(renderEvents(doc, state));
  return root;
}
