// Typed client for the repairbench session service. Every request the UI
// makes goes through this module, so the documented REST surface is the whole
// network footprint.

export type Mode = "remove" | "discovery";

export type ToolName =
  | "list_directory"
  | "search_code"
  | "read_file"
  | "list_file_functions"
  | "read_function";

export const INFO_TOOLS: readonly ToolName[] = [
  "list_directory",
  "search_code",
  "read_file",
  "list_file_functions",
  "read_function",
];

export interface BudgetRemaining {
  tool_uses: number;
  attempts: number;
}

export interface TaskSummary {
  task_id: string;
  mode: Mode;
  corruption_count: number;
  failing_count: number;
}

export interface CorruptionView {
  target: string;
  method: string;
  corrupted_body: string;
  original_digest: string;
}

// Remove-mode details carry the corruption list; discovery details are
// redacted by the server and never include targets or corrupted bodies.
export interface TaskDetail {
  task_id: string;
  repo_ref: Record<string, string>;
  mode: Mode;
  failing_tests: string[];
  corruption_count: number;
  generator: Record<string, unknown>;
  corruptions?: CorruptionView[];
  metrics?: Record<string, unknown>;
}

export interface SessionView {
  session_id: string;
  task_id: string;
  mode: Mode;
  budget_remaining: BudgetRemaining;
  state: string;
}

export interface SubmissionOutcome {
  passed: boolean;
  failing: string[];
  failing_count: number;
  attempt: number;
  suite_exit: string;
}

export interface SessionSummary {
  score: number;
  solved_at_attempt: number | null;
  used_tools: number;
  used_attempts: number;
  session_id: string;
  task_id: string;
  mode: Mode;
  state: string;
  label: string;
  max_tool_uses: number;
  max_attempts: number;
  failure_reason?: string;
}

export interface ToolResponse {
  result: Record<string, unknown>;
  budget_remaining: BudgetRemaining;
}

export interface SubmitResponse {
  result: SubmissionOutcome;
  budget_remaining: BudgetRemaining;
}

export interface CreateSessionRequest {
  task_id: string;
  budget_preset?: string;
  max_tool_uses?: number;
  max_attempts?: number;
}

export function isSummary(view: SessionView | SessionSummary): view is SessionSummary {
  return "score" in view;
}

/** Error body the service returns for any non-2xx response. */
export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

/** The subset of a fetch Response the client reads. */
export interface FetchResponse {
  ok: boolean;
  status: number;
  text(): Promise<string>;
}

export interface FetchInit {
  method: string;
  headers?: Record<string, string>;
  body?: string;
}

export type FetchLike = (url: string, init: FetchInit) => Promise<FetchResponse>;

export class SessionApi {
  private readonly fetchImpl: FetchLike;

  constructor(
    readonly baseUrl: string,
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: FetchInit = { method };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const text = await response.text();
    let payload: unknown = null;
    if (text) {
      try {
        payload = JSON.parse(text);
      } catch {
        payload = null;
      }
    }
    if (!response.ok) {
      const err = (payload ?? {}) as { code?: string; message?: string };
      throw new ServiceError(
        response.status,
        err.code ?? "unknown_error",
        err.message ?? `request failed with status ${response.status}`,
      );
    }
    return payload as T;
  }

  async listTasks(): Promise<TaskSummary[]> {
    const data = await this.request<{ tasks: TaskSummary[] }>("GET", "/tasks");
    return data.tasks;
  }

  getTask(taskId: string): Promise<TaskDetail> {
    return this.request("GET", `/tasks/${encodeURIComponent(taskId)}`);
  }

  createSession(req: CreateSessionRequest): Promise<SessionView> {
    return this.request("POST", "/sessions", req);
  }

  getSession(sessionId: string): Promise<SessionView | SessionSummary> {
    return this.request("GET", `/sessions/${encodeURIComponent(sessionId)}`);
  }

  invokeTool(
    sessionId: string,
    tool: ToolName,
    args: Record<string, unknown>,
  ): Promise<ToolResponse> {
    return this.request(
      "POST",
      `/sessions/${encodeURIComponent(sessionId)}/tools/${tool}`,
      { args },
    );
  }

  submit(sessionId: string, body: string, unitId?: string): Promise<SubmitResponse> {
    const payload: { body: string; unit_id?: string } = { body };
    if (unitId !== undefined) {
      payload.unit_id = unitId;
    }
    return this.request("POST", `/sessions/${encodeURIComponent(sessionId)}/submit`, payload);
  }

  closeSession(sessionId: string): Promise<SessionSummary> {
    return this.request("DELETE", `/sessions/${encodeURIComponent(sessionId)}`);
  }
}
