"""Budgeted tool environment where a solver attempts a repair task.

A session owns a disposable snapshot with the task's corruptions applied and
two separate budget pools: information tools (list_directory, search_code,
read_file, list_file_functions, read_function) and submissions
(submit_attempt in remove mode, replace_function in discovery mode).  Every
interaction appends a strictly ordered trajectory event; timestamps come
from an injectable clock so recorded runs replay byte for byte under the
default logical clock.

Budget accounting rules:

* information tools charge the tool pool; submissions charge only the
  attempt pool;
* sandbox-escape paths and malformed regexes are rejected before charging;
* a missing file or unknown unit *does* consume the call (absence is
  information);
* an unparseable submission consumes an attempt and raises UnparseableBody
  with the diagnostic;
* a submission naming an unknown unit is rejected before charging.
"""

from __future__ import annotations

import ast
import hashlib
import json
import re
import secrets
import shutil
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import (
    AttemptsExhausted,
    BudgetExhausted,
    ClientFailure,
    InvalidPattern,
    NotFound,
    PathOutsideSandbox,
    RepairBenchError,
    SnapshotFailure,
    UnknownUnit,
    UnparseableBody,
    WrongMode,
)
from .harness import SuiteReport, failing_diff, run_suite, snapshot_repository
from .repo import Repository, dedent_unit, is_test_path, iter_source_files, parse_file
from .taskgen import TaskInstance, apply_corruptions

BUDGET_PRESETS = {
    "xs": (4, 1),
    "small": (8, 2),
    "default": (16, 4),
    "xl": (32, 8),
}

INFO_TOOLS = ("list_directory", "search_code", "read_file", "list_file_functions", "read_function")
SUBMIT_TOOLS = ("submit_attempt", "replace_function")

SEARCH_HIT_CAP = 200
READ_FILE_THRESHOLD = 10_000


@dataclass(frozen=True)
class BudgetConfig:
    max_tool_uses: int
    max_attempts: int

    def __post_init__(self) -> None:
        if self.max_tool_uses < 1 or self.max_attempts < 1:
            raise ValueError("budgets must be >= 1")

    @classmethod
    def from_preset(cls, name: str) -> "BudgetConfig":
        if name not in BUDGET_PRESETS:
            raise ValueError(f"unknown budget preset: {name} (have {sorted(BUDGET_PRESETS)})")
        tools, attempts = BUDGET_PRESETS[name]
        return cls(tools, attempts)


@dataclass(frozen=True)
class SubmissionResult:
    passed: bool
    failing: tuple[str, ...]
    attempt: int
    suite_exit: str

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "failing": list(self.failing),
            "failing_count": len(self.failing),
            "attempt": self.attempt,
            "suite_exit": self.suite_exit,
        }


class Clock:
    """Supplies the ``t`` field of trajectory events."""

    def now(self) -> float:
        raise NotImplementedError


class LogicalClock(Clock):
    """t equals the event sequence number: replays are byte-identical."""

    def __init__(self) -> None:
        self._next = 0

    def now(self) -> float:
        value = self._next
        self._next += 1
        return float(value)


class WallClock(Clock):
    def now(self) -> float:
        return time.time()


def _digest(payload) -> str:
    text = json.dumps(payload, sort_keys=True, ensure_ascii=False, default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


class Session:
    """One solver's budgeted view of a corrupted snapshot."""

    def __init__(
        self,
        task: TaskInstance,
        repo: Repository,
        budget: BudgetConfig,
        baseline_report: SuiteReport,
        cap_seconds: float = 60.0,
        clock: Clock | None = None,
        session_id: str | None = None,
        read_threshold: int = READ_FILE_THRESHOLD,
    ) -> None:
        self.task = task
        self.repo = repo
        self.budget = budget
        self.baseline_report = baseline_report
        self.cap_seconds = cap_seconds
        self.clock = clock or LogicalClock()
        self.session_id = session_id or secrets.token_hex(16)
        self.read_threshold = read_threshold

        self.sandbox = snapshot_repository(repo.root)
        apply_corruptions(self.sandbox, repo, task.corruptions)

        self.used_tools = 0
        self.used_attempts = 0
        self.state = "active"
        self.solved_at_attempt: int | None = None
        self.edits: dict[str, list[str]] = {}
        self.events: list[dict] = []
        self.last_failing: set[str] | None = None
        self._test_digests = self._digest_test_files()

    # -- plumbing -------------------------------------------------------

    def close(self) -> None:
        shutil.rmtree(self.sandbox.parent, ignore_errors=True)

    def _digest_test_files(self) -> dict[str, str]:
        digests = {}
        for path in iter_source_files(self.sandbox):
            rel = path.relative_to(self.sandbox).as_posix()
            if is_test_path(rel):
                digests[rel] = hashlib.sha256(path.read_bytes()).hexdigest()
        return digests

    def _record(self, kind: str, tool: str, args: dict, result) -> None:
        self.events.append(
            {
                "seq": len(self.events),
                "kind": kind,
                "tool": tool,
                "args_digest": _digest(args),
                "result_digest": _digest(result),
                "t": self.clock.now(),
                "args": args,
            }
        )

    def _resolve(self, rel: str) -> Path:
        candidate = (self.sandbox / rel).resolve()
        root = self.sandbox.resolve()
        if candidate != root and not candidate.is_relative_to(root):
            raise PathOutsideSandbox(rel)
        return candidate

    def _charge_tool(self, tool: str, args: dict) -> None:
        if self.state != "active":
            self._record("rejected", tool, args, {"error": f"session {self.state}"})
            raise BudgetExhausted(f"session is {self.state}")
        if self.used_tools >= self.budget.max_tool_uses:
            self._record("rejected", tool, args, {"error": "tool budget exhausted"})
            raise BudgetExhausted(f"tool budget exhausted ({self.budget.max_tool_uses})")
        self.used_tools += 1

    def remaining(self) -> dict:
        return {
            "tool_uses": self.budget.max_tool_uses - self.used_tools,
            "attempts": self.budget.max_attempts - self.used_attempts,
        }

    def _current_units(self, rel: str) -> dict:
        path = self._resolve(rel)
        if not path.is_file():
            raise NotFound(rel)
        try:
            return {u.id: u for u in parse_file(path, rel)}
        except (SyntaxError, ValueError) as exc:
            raise NotFound(f"cannot parse {rel}: {exc}") from exc

    # -- information tools -----------------------------------------------

    def invoke_tool(self, name: str, args: dict):
        handlers = {
            "list_directory": self._tool_list_directory,
            "search_code": self._tool_search_code,
            "read_file": self._tool_read_file,
            "list_file_functions": self._tool_list_file_functions,
            "read_function": self._tool_read_function,
        }
        if name not in handlers:
            raise NotFound(f"unknown tool: {name}")
        return handlers[name](**args)

    def _tool_list_directory(self, path: str = ".") -> dict:
        args = {"path": path}
        target = self._resolve(path)  # escape attempts do not consume budget
        self._charge_tool("list_directory", args)
        try:
            if not target.is_dir():
                raise NotFound(path)
            entries = [
                {"name": entry.name, "type": "dir" if entry.is_dir() else "file"}
                for entry in sorted(target.iterdir(), key=lambda e: e.name)
                if entry.name not in ("__pycache__", ".pytest_cache")
            ]
            result = {"entries": entries}
        except RepairBenchError as exc:
            self._record("tool", "list_directory", args, {"error": str(exc)})
            raise
        self._record("tool", "list_directory", args, result)
        return result

    def _tool_search_code(self, pattern: str, is_regex: bool = False) -> dict:
        args = {"pattern": pattern, "is_regex": is_regex}
        try:
            compiled = re.compile(pattern if is_regex else re.escape(pattern))
        except re.error as exc:
            raise InvalidPattern(f"bad pattern: {exc}") from exc  # no budget charge
        self._charge_tool("search_code", args)
        matches = []
        truncated = False
        for path in iter_source_files(self.sandbox):
            rel = path.relative_to(self.sandbox).as_posix()
            try:
                text = path.read_text(encoding="utf-8")
            except UnicodeDecodeError:
                continue
            for line_no, line in enumerate(text.splitlines(), start=1):
                if compiled.search(line):
                    if len(matches) >= SEARCH_HIT_CAP:
                        truncated = True
                        break
                    matches.append({"file": rel, "line": line_no, "text": line})
            if truncated:
                break
        result = {"matches": matches, "truncated": truncated}
        self._record("tool", "search_code", args, result)
        return result

    def _tool_read_file(self, path: str) -> dict:
        args = {"path": path}
        target = self._resolve(path)
        self._charge_tool("read_file", args)
        try:
            if not target.is_file():
                raise NotFound(path)
            try:
                text = target.read_text(encoding="utf-8")
            except UnicodeDecodeError as exc:
                raise NotFound(f"not a text file: {path}") from exc
            if len(text) <= self.read_threshold:
                result = {"text": text, "truncated": False}
            else:
                units = self._current_units(path)
                result = {
                    "truncated": True,
                    "units": [
                        {
                            "id": uid,
                            "kind": unit.kind,
                            "span": [unit.span.start, unit.span.end],
                            "signature": unit.signature.strip().splitlines()[0] if unit.signature.strip() else "",
                        }
                        for uid, unit in sorted(units.items())
                    ],
                }
        except RepairBenchError as exc:
            self._record("tool", "read_file", args, {"error": str(exc)})
            raise
        self._record("tool", "read_file", args, result)
        return result

    def _tool_list_file_functions(self, path: str) -> dict:
        args = {"path": path}
        self._resolve(path)
        self._charge_tool("list_file_functions", args)
        try:
            units = self._current_units(path)
            result = {
                "units": [
                    {
                        "id": uid,
                        "kind": unit.kind,
                        "signature": unit.signature.strip().splitlines()[0] if unit.signature.strip() else "",
                    }
                    for uid, unit in sorted(units.items())
                ]
            }
        except RepairBenchError as exc:
            self._record("tool", "list_file_functions", args, {"error": str(exc)})
            raise
        self._record("tool", "list_file_functions", args, result)
        return result

    def _tool_read_function(self, unit_id: str) -> dict:
        args = {"unit_id": unit_id}
        rel = unit_id.split("::", 1)[0]
        self._resolve(rel)
        self._charge_tool("read_function", args)
        try:
            units = self._current_units(rel)
            if unit_id not in units:
                raise NotFound(unit_id)
            result = {"text": units[unit_id].source}
        except RepairBenchError as exc:
            self._record("tool", "read_function", args, {"error": str(exc)})
            raise
        self._record("tool", "read_function", args, result)
        return result

    # -- submissions ------------------------------------------------------

    def _charge_attempt(self, tool: str, args: dict) -> None:
        if self.state not in ("active",):
            self._record("rejected", tool, args, {"error": f"session {self.state}"})
            raise AttemptsExhausted(f"session is {self.state}")
        if self.used_attempts >= self.budget.max_attempts:
            self._record("rejected", tool, args, {"error": "attempts exhausted"})
            raise AttemptsExhausted(f"attempt budget exhausted ({self.budget.max_attempts})")
        self.used_attempts += 1

    def _splice(self, unit_id: str, body: str) -> None:
        rel = unit_id.split("::", 1)[0]
        units = self._current_units(rel)
        if unit_id not in units:
            raise UnknownUnit(unit_id)
        live = units[unit_id]
        path = self._resolve(rel)
        lines = path.read_text(encoding="utf-8").splitlines(keepends=True)
        new_lines = body.splitlines(keepends=True)
        if new_lines and not new_lines[-1].endswith("\n") and live.span.end < len(lines):
            new_lines[-1] += "\n"
        lines[live.span.start - 1 : live.span.end] = new_lines
        path.write_text("".join(lines), encoding="utf-8")

    def _run_and_diff(self) -> tuple[set[str], str]:
        try:
            report = run_suite(self.sandbox, self.repo.test_command, self.cap_seconds)
        except RepairBenchError:
            return set(self.baseline_report.passing_ids()), "crashed"
        if report.exit != "completed":
            return set(self.baseline_report.passing_ids()), report.exit
        return failing_diff(self.baseline_report, report), "completed"

    def _submit_common(self, tool: str, unit_id: str, body: str, args: dict) -> SubmissionResult:
        units = self._current_units(unit_id.split("::", 1)[0])
        if unit_id not in units:
            raise UnknownUnit(unit_id)  # rejected before charging
        self._charge_attempt(tool, args)
        try:
            ast_ok = True
            try:
                ast.parse(dedent_unit(body))
            except SyntaxError as exc:
                ast_ok = False
                parse_error = str(exc)
            if not ast_ok:
                result = {"error": f"unparseable body: {parse_error}", "attempt": self.used_attempts}
                self._record("submit", tool, args, result)
                raise UnparseableBody(parse_error)
            self._splice(unit_id, body)
            self.edits.setdefault(unit_id, []).append(body)
            failing, suite_exit = self._run_and_diff()
            self.last_failing = failing
            result = SubmissionResult(
                passed=(not failing and suite_exit == "completed"),
                failing=tuple(sorted(failing)),
                attempt=self.used_attempts,
                suite_exit=suite_exit,
            )
            self._record("submit", tool, args, result.to_dict())
            if result.passed:
                self.state = "solved"
                self.solved_at_attempt = self.used_attempts
            elif self.used_attempts >= self.budget.max_attempts:
                self.state = "exhausted"
            return result
        except UnparseableBody:
            if self.used_attempts >= self.budget.max_attempts and self.state == "active":
                self.state = "exhausted"
            raise

    def submit_attempt(self, body: str) -> SubmissionResult:
        """Remove mode: substitute ``body`` into the single target and rerun."""
        if self.task.mode != "remove":
            raise WrongMode("submit_attempt is remove-mode only; use replace_function")
        target = self.task.corruptions[0].target
        # full body goes into the event so a recorded run can be re-issued
        args = {"body": body}
        return self._submit_common("submit_attempt", target, body, args)

    def replace_function(self, unit_id: str, body: str) -> SubmissionResult:
        """Discovery mode: persistently rewrite ``unit_id`` and rerun."""
        if self.task.mode != "discovery":
            raise WrongMode("replace_function is discovery-mode only; use submit_attempt")
        args = {"unit_id": unit_id, "body": body}
        return self._submit_common("replace_function", unit_id, body, args)

    # -- scoring -----------------------------------------------------------

    def _tests_untouched(self) -> bool:
        return self._digest_test_files() == self._test_digests

    def _modified_a_corrupted_target(self) -> bool:
        for corruption in self.task.corruptions:
            rel = corruption.target.split("::", 1)[0]
            try:
                units = self._current_units(rel)
            except RepairBenchError:
                continue
            live = units.get(corruption.target)
            if live is None:
                continue
            if live.source != corruption.corrupted_body:
                return True
        return False

    def score(self) -> int:
        """1 iff the last run left no failing tests, tests are untouched, and
        (discovery) some corrupted target was changed from its corrupted form."""
        if self.state == "active":
            self.state = "solved" if self.solved_at_attempt is not None else "failed"
        if self.last_failing is None or self.last_failing:
            return 0
        if not self._tests_untouched():
            return 0
        if self.task.mode == "discovery" and not self._modified_a_corrupted_target():
            return 0
        return 1


def open_session(
    task: TaskInstance,
    budget: BudgetConfig,
    repo: Repository,
    baseline_report: SuiteReport,
    **kwargs,
) -> Session:
    try:
        return Session(task, repo, budget, baseline_report, **kwargs)
    except OSError as exc:
        raise SnapshotFailure(str(exc)) from exc


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    session_id: str
    task_id: str
    mode: str
    events: list[dict] = field(default_factory=list)
    score: int = 0
    solved_at_attempt: int | None = None
    used_tools: int = 0
    used_attempts: int = 0
    state: str = "failed"
    failure_reason: str | None = None
    label: str = ""
    max_tool_uses: int = 0
    max_attempts: int = 0

    def tool_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for event in self.events:
            if event.get("kind") in ("tool", "submit"):
                name = event.get("tool", "")
                counts[name] = counts.get(name, 0) + 1
        return counts

    def terminal(self) -> dict:
        line = {
            "score": self.score,
            "solved_at_attempt": self.solved_at_attempt,
            "used_tools": self.used_tools,
            "used_attempts": self.used_attempts,
            "session_id": self.session_id,
            "task_id": self.task_id,
            "mode": self.mode,
            "state": self.state,
            "label": self.label,
            "max_tool_uses": self.max_tool_uses,
            "max_attempts": self.max_attempts,
        }
        if self.failure_reason:
            line["failure_reason"] = self.failure_reason
        return line


def write_trajectory(trajectory: Trajectory, path: Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for event in trajectory.events:
            fh.write(json.dumps(event, sort_keys=True, ensure_ascii=False) + "\n")
        fh.write(json.dumps(trajectory.terminal(), sort_keys=True, ensure_ascii=False) + "\n")


def read_trajectory(path: Path) -> Trajectory:
    lines = [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
    if not lines:
        raise ValueError(f"empty trajectory file: {path}")
    terminal = lines[-1]
    return Trajectory(
        session_id=terminal.get("session_id", ""),
        task_id=terminal.get("task_id", ""),
        mode=terminal.get("mode", ""),
        events=lines[:-1],
        score=terminal["score"],
        solved_at_attempt=terminal["solved_at_attempt"],
        used_tools=terminal["used_tools"],
        used_attempts=terminal["used_attempts"],
        state=terminal.get("state", "failed"),
        failure_reason=terminal.get("failure_reason"),
        label=terminal.get("label", ""),
        max_tool_uses=terminal.get("max_tool_uses", 0),
        max_attempts=terminal.get("max_attempts", 0),
    )


# ---------------------------------------------------------------------------
# Agent loop
# ---------------------------------------------------------------------------

_TOOL_SCHEMAS = [
    {
        "name": "list_directory",
        "description": "List files and directories at a path inside the repository.",
        "parameters": {"path": "string (default '.')"},
    },
    {
        "name": "search_code",
        "description": "Search for a text or regex pattern across repository source files.",
        "parameters": {"pattern": "string", "is_regex": "bool (default false)"},
    },
    {
        "name": "read_file",
        "description": "Read a file; large files return a function index instead of text.",
        "parameters": {"path": "string"},
    },
    {
        "name": "list_file_functions",
        "description": "List the function and class definitions of one file.",
        "parameters": {"path": "string"},
    },
    {
        "name": "read_function",
        "description": "Read the current text of one function, method, or class by unit id.",
        "parameters": {"unit_id": "string like 'pkg/mod.py::func'"},
    },
]

_SUBMIT_SCHEMAS = {
    "remove": [
        {
            "name": "submit_attempt",
            "description": "Submit the full replacement text for the target function.",
            "parameters": {"body": "string"},
        }
    ],
    "discovery": [
        {
            "name": "replace_function",
            "description": "Persistently replace one unit's full text and rerun the tests.",
            "parameters": {"unit_id": "string", "body": "string"},
        }
    ],
}


def _load_template(name: str) -> str:
    return resources.files("repairbench").joinpath("templates", name).read_text(encoding="utf-8")


def render_system_prompt(task: TaskInstance, budget: BudgetConfig) -> str:
    failing = "\n".join(sorted(task.failing_tests))
    if task.mode == "remove":
        return _load_template("solver_remove.txt").format(
            targets=", ".join(task.targets),
            failing_tests=failing,
            max_tool_uses=budget.max_tool_uses,
            max_attempts=budget.max_attempts,
        )
    return _load_template("solver_discovery.txt").format(
        failing_tests=failing,
        max_tool_uses=budget.max_tool_uses,
        max_attempts=budget.max_attempts,
    )


def run_agent(
    task: TaskInstance,
    budget: BudgetConfig,
    agent,
    repo: Repository,
    baseline_report: SuiteReport,
    cap_seconds: float = 60.0,
    clock: Clock | None = None,
    session_id: str | None = None,
    max_rejections: int = 8,
) -> Trajectory:
    """Drive the agent loop until solved, exhausted, or the agent stops.

    The agent sees a mode-specific system prompt, the tool schemas, and each
    tool result as a message; budget refusals are fed back as errors and
    capped at ``max_rejections`` before the session is closed.
    """
    session = open_session(task, budget, repo, baseline_report, cap_seconds=cap_seconds, clock=clock, session_id=session_id)
    trajectory = Trajectory(
        session_id=session.session_id,
        task_id=task.task_id,
        mode=task.mode,
        max_tool_uses=budget.max_tool_uses,
        max_attempts=budget.max_attempts,
    )
    tools = _TOOL_SCHEMAS + _SUBMIT_SCHEMAS[task.mode]
    messages: list[dict] = [{"role": "system", "content": render_system_prompt(task, budget)}]
    rejections = 0
    try:
        while True:
            if session.state in ("solved",):
                break
            if rejections > max_rejections:
                break
            if (
                session.used_tools >= budget.max_tool_uses
                and session.used_attempts >= budget.max_attempts
            ):
                if session.state == "active":
                    session.state = "exhausted"
                break
            try:
                response = agent.respond({"messages": messages, "tools": tools})
            except ClientFailure as exc:
                trajectory.failure_reason = f"agent failure: {exc}"
                session.state = "failed" if session.solved_at_attempt is None else session.state
                break
            if not isinstance(response, dict) or ("tool_call" not in response and "final_text" not in response):
                trajectory.failure_reason = "agent returned malformed response"
                break
            if "final_text" in response:
                messages.append({"role": "assistant", "content": response["final_text"]})
                break
            call = response["tool_call"]
            name = call.get("name", "")
            args = call.get("args", {}) or {}
            messages.append({"role": "assistant", "tool_call": {"name": name, "args": args}})
            try:
                if name == "submit_attempt":
                    result = session.submit_attempt(**args).to_dict()
                elif name == "replace_function":
                    result = session.replace_function(**args).to_dict()
                elif name in INFO_TOOLS:
                    result = session.invoke_tool(name, args)
                else:
                    result = {"error": f"unknown tool: {name}"}
                    rejections += 1
            except (BudgetExhausted, AttemptsExhausted) as exc:
                result = {"error": str(exc)}
                rejections += 1
            except RepairBenchError as exc:
                result = {"error": f"{type(exc).__name__}: {exc}"}
            except TypeError as exc:
                result = {"error": f"bad arguments: {exc}"}
                rejections += 1
            messages.append({"role": "tool", "name": name, "content": json.dumps(result, sort_keys=True)})
        trajectory.score = session.score()
        trajectory.solved_at_attempt = session.solved_at_attempt
        trajectory.used_tools = session.used_tools
        trajectory.used_attempts = session.used_attempts
        trajectory.state = session.state
        trajectory.events = list(session.events)
        return trajectory
    finally:
        session.close()
