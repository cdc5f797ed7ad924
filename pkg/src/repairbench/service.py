"""Local HTTP facade over the evaluation sessions.

Exposes the same tool environment the agent loop uses so external drivers
and the human solver UI produce comparable trajectories.  Sessions are
serialized per session id (concurrent calls wait, or get 409 when the
service is configured not to wait), expire after an idle window, and are
scored exactly once; closing is idempotent.  Discovery-mode task views never
reveal corruption targets.

All errors share one shape: {"code": ..., "message": ...}.
"""

from __future__ import annotations

import threading
import time
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .errors import (
    AttemptsExhausted,
    BudgetExhausted,
    InvalidPattern,
    NotFound,
    PathOutsideSandbox,
    RepairBenchError,
    UnknownUnit,
    UnparseableBody,
    WrongMode,
)
from .evalcore import (
    BUDGET_PRESETS,
    INFO_TOOLS,
    BudgetConfig,
    Clock,
    LogicalClock,
    Session,
    Trajectory,
    WallClock,
    open_session,
    write_trajectory,
)
from .harness import SuiteReport, baseline
from .repo import Repository
from .taskgen import TaskInstance

DEFAULT_IDLE_EXPIRY = 2 * 60 * 60.0


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


class CreateSessionRequest(BaseModel):
    task_id: str
    budget_preset: str = "default"
    max_tool_uses: int | None = None
    max_attempts: int | None = None


class ToolRequest(BaseModel):
    args: dict = {}


class SubmitRequest(BaseModel):
    body: str
    unit_id: str | None = None


class TaskStore:
    """Tasks plus the repository and baseline needed to open sessions."""

    def __init__(
        self,
        repo: Repository,
        tasks: list[TaskInstance],
        cap_seconds: float = 60.0,
        baseline_report: SuiteReport | None = None,
    ):
        self.repo = repo
        self.tasks = {t.task_id: t for t in tasks}
        self.cap_seconds = cap_seconds
        self.baseline_report = baseline_report or baseline(repo, cap_seconds)


class _Handle:
    def __init__(self, session: Session):
        self.session = session
        self.lock = threading.Lock()
        self.last_used = time.monotonic()
        self.summary: dict | None = None
        self.expired = False


def _session_view(session: Session) -> dict:
    remaining = session.remaining()
    return {
        "session_id": session.session_id,
        "task_id": session.task.task_id,
        "mode": session.task.mode,
        "budget_remaining": remaining,
        "state": session.state,
    }


def _task_view(task: TaskInstance, redact: bool) -> dict:
    if redact:
        return {
            "task_id": task.task_id,
            "repo_ref": dict(task.repo_ref),
            "mode": task.mode,
            "failing_tests": sorted(task.failing_tests),
            "corruption_count": len(task.corruptions),
            "generator": dict(task.generator),
        }
    data = task.to_dict()
    data["corruption_count"] = len(task.corruptions)
    return data


def create_app(
    store: TaskStore,
    wait_on_busy: bool = True,
    idle_expiry: float = DEFAULT_IDLE_EXPIRY,
    wall_clock: bool = True,
    trajectory_dir: Path | None = None,
) -> FastAPI:
    app = FastAPI(title="repairbench session service")
    handles: dict[str, _Handle] = {}
    registry_lock = threading.Lock()

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"code": exc.code, "message": exc.message})

    def _clock() -> Clock:
        return WallClock() if wall_clock else LogicalClock()

    def _finalize(handle: _Handle) -> dict:
        # caller holds handle.lock
        if handle.summary is None:
            session = handle.session
            score = session.score()
            trajectory = Trajectory(
                session_id=session.session_id,
                task_id=session.task.task_id,
                mode=session.task.mode,
                events=list(session.events),
                score=score,
                solved_at_attempt=session.solved_at_attempt,
                used_tools=session.used_tools,
                used_attempts=session.used_attempts,
                state=session.state,
                label="human",
                max_tool_uses=session.budget.max_tool_uses,
                max_attempts=session.budget.max_attempts,
            )
            if trajectory_dir is not None:
                trajectory_dir.mkdir(parents=True, exist_ok=True)
                write_trajectory(trajectory, Path(trajectory_dir) / f"trajectory-{session.session_id}.jsonl")
            session.close()
            handle.summary = trajectory.terminal()
        return handle.summary

    def _sweep_expired() -> None:
        now = time.monotonic()
        with registry_lock:
            stale = [h for h in handles.values() if h.summary is None and now - h.last_used > idle_expiry]
        for handle in stale:
            with handle.lock:
                handle.expired = True
                _finalize(handle)

    def _get_handle(session_id: str) -> _Handle:
        _sweep_expired()
        with registry_lock:
            handle = handles.get(session_id)
        if handle is None:
            raise ApiError(404, "unknown_session", f"no session {session_id}")
        return handle

    def _acquire(handle: _Handle):
        if wait_on_busy:
            handle.lock.acquire()
            return
        if not handle.lock.acquire(blocking=False):
            raise ApiError(409, "busy", "another call is in flight for this session")

    @app.get("/tasks")
    def list_tasks():
        return {
            "tasks": [
                {
                    "task_id": t.task_id,
                    "mode": t.mode,
                    "corruption_count": len(t.corruptions),
                    "failing_count": len(t.failing_tests),
                }
                for t in sorted(store.tasks.values(), key=lambda t: t.task_id)
            ]
        }

    @app.get("/tasks/{task_id}")
    def get_task(task_id: str):
        task = store.tasks.get(task_id)
        if task is None:
            raise ApiError(404, "unknown_task", f"no task {task_id}")
        return _task_view(task, redact=(task.mode == "discovery"))

    @app.post("/sessions", status_code=201)
    def create_session(request: CreateSessionRequest):
        _sweep_expired()
        task = store.tasks.get(request.task_id)
        if task is None:
            raise ApiError(404, "unknown_task", f"no task {request.task_id}")
        try:
            if request.max_tool_uses is not None or request.max_attempts is not None:
                tools = request.max_tool_uses if request.max_tool_uses is not None else 16
                attempts = request.max_attempts if request.max_attempts is not None else 4
                budget = BudgetConfig(tools, attempts)
            else:
                budget = BudgetConfig.from_preset(request.budget_preset)
        except ValueError as exc:
            raise ApiError(400, "bad_budget", str(exc)) from exc
        session = open_session(
            task,
            budget,
            store.repo,
            store.baseline_report,
            cap_seconds=store.cap_seconds,
            clock=_clock(),
        )
        handle = _Handle(session)
        with registry_lock:
            handles[session.session_id] = handle
        return _session_view(session)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        handle = _get_handle(session_id)
        with handle.lock:
            if handle.summary is not None:
                return handle.summary
            return _session_view(handle.session)

    @app.post("/sessions/{session_id}/tools/{tool_name}")
    def invoke_tool(session_id: str, tool_name: str, request: ToolRequest):
        handle = _get_handle(session_id)
        if tool_name not in INFO_TOOLS:
            raise ApiError(400, "unknown_tool", f"no tool {tool_name}")
        _acquire(handle)
        try:
            if handle.summary is not None:
                raise ApiError(410, "closed", "session already closed")
            handle.last_used = time.monotonic()
            try:
                result = handle.session.invoke_tool(tool_name, request.args)
            except (BudgetExhausted, AttemptsExhausted) as exc:
                raise ApiError(410, "budget_exhausted", str(exc)) from exc
            except (PathOutsideSandbox, InvalidPattern) as exc:
                raise ApiError(400, type(exc).__name__.lower(), str(exc)) from exc
            except (NotFound, UnknownUnit) as exc:
                raise ApiError(404, "not_found", str(exc)) from exc
            except TypeError as exc:
                raise ApiError(400, "bad_args", str(exc)) from exc
            return {"result": result, "budget_remaining": handle.session.remaining()}
        finally:
            handle.lock.release()

    @app.post("/sessions/{session_id}/submit")
    def submit(session_id: str, request: SubmitRequest):
        handle = _get_handle(session_id)
        _acquire(handle)
        try:
            if handle.summary is not None:
                raise ApiError(410, "closed", "session already closed")
            handle.last_used = time.monotonic()
            session = handle.session
            try:
                if session.task.mode == "remove":
                    target = session.task.corruptions[0].target
                    if request.unit_id is not None and request.unit_id != target:
                        raise ApiError(400, "wrong_target", "remove mode only accepts the task target")
                    result = session.submit_attempt(request.body)
                else:
                    if request.unit_id is None:
                        raise ApiError(400, "missing_unit", "discovery mode requires unit_id")
                    result = session.replace_function(request.unit_id, request.body)
            except (BudgetExhausted, AttemptsExhausted) as exc:
                raise ApiError(410, "budget_exhausted", str(exc)) from exc
            except UnparseableBody as exc:
                raise ApiError(400, "unparseable_body", str(exc)) from exc
            except UnknownUnit as exc:
                raise ApiError(404, "not_found", str(exc)) from exc
            except WrongMode as exc:
                raise ApiError(400, "wrong_mode", str(exc)) from exc
            return {"result": result.to_dict(), "budget_remaining": session.remaining()}
        finally:
            handle.lock.release()

    @app.delete("/sessions/{session_id}")
    def close_session(session_id: str):
        handle = _get_handle(session_id)
        with handle.lock:
            return _finalize(handle)

    return app
