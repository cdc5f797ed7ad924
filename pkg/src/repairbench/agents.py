"""Solver agents that drive the tool environment.

An agent receives {"messages": [...], "tools": [...]} and answers with
either {"tool_call": {"name", "args"}} or {"final_text": str}.  The bundled
agents cover testing and baselines: the oracle replays original function
text, the null agent does nothing, the scripted agent follows a fixed action
list, the replay agent re-issues a recorded trajectory, and the capacity
family repairs at most m targets before giving up.  A live HTTP agent is
configured purely through environment variables.
"""

from __future__ import annotations

import json
import os
from abc import ABC, abstractmethod
from pathlib import Path

from .errors import ClientFailure, UnknownAgent
from .evalcore import Trajectory, read_trajectory
from .repo import Repository
from .taskgen import TaskInstance


class AgentClient(ABC):
    @abstractmethod
    def respond(self, request: dict) -> dict:
        """Return {"tool_call": {"name", "args"}} or {"final_text": str}."""


class NullAgent(AgentClient):
    """Makes no tool calls at all."""

    def respond(self, request: dict) -> dict:
        return {"final_text": "no action taken"}


class ScriptedAgent(AgentClient):
    """Plays a fixed list of actions, then stops.

    Each action is {"tool": name, "args": {...}} or {"final_text": str}.
    """

    def __init__(self, actions: list[dict]):
        self.actions = list(actions)
        self._index = 0

    def respond(self, request: dict) -> dict:
        if self._index >= len(self.actions):
            return {"final_text": "script finished"}
        action = self.actions[self._index]
        self._index += 1
        if "final_text" in action:
            return {"final_text": action["final_text"]}
        return {"tool_call": {"name": action["tool"], "args": action.get("args", {})}}


class OracleAgent(AgentClient):
    """Submits each corrupted target's original text; solves by construction."""

    def __init__(self, task: TaskInstance, repo: Repository):
        self.task = task
        self.repo = repo
        self._index = 0

    def respond(self, request: dict) -> dict:
        if self._index >= len(self.task.corruptions):
            return {"final_text": "all targets restored"}
        corruption = self.task.corruptions[self._index]
        self._index += 1
        original = self.repo.units[corruption.target].source
        if self.task.mode == "remove":
            return {"tool_call": {"name": "submit_attempt", "args": {"body": original}}}
        return {
            "tool_call": {
                "name": "replace_function",
                "args": {"unit_id": corruption.target, "body": original},
            }
        }


class CapacityAgent(AgentClient):
    """Restores at most ``m`` corrupted targets, then stops.

    Solves tasks with k <= m corruptions and fails the rest, so success is
    non-increasing in k for a fixed m.
    """

    def __init__(self, m: int, task: TaskInstance, repo: Repository):
        if m < 0:
            raise ValueError("capacity must be >= 0")
        self.m = m
        self._inner = OracleAgent(task, repo)

    def respond(self, request: dict) -> dict:
        if self._inner._index >= self.m:
            return {"final_text": f"capacity {self.m} reached"}
        return self._inner.respond(request)


class ReplayAgent(AgentClient):
    """Re-issues the agent-side calls of a recorded trajectory in order."""

    def __init__(self, trajectory: Trajectory):
        self.calls = [
            {"name": event["tool"], "args": event.get("args", {})}
            for event in trajectory.events
            if event.get("kind") in ("tool", "submit", "rejected")
        ]
        self._index = 0

    @classmethod
    def from_file(cls, path: Path) -> "ReplayAgent":
        return cls(read_trajectory(path))

    def respond(self, request: dict) -> dict:
        if self._index >= len(self.calls):
            return {"final_text": "replay finished"}
        call = self.calls[self._index]
        self._index += 1
        return {"tool_call": call}


class HttpAgent(AgentClient):
    """OpenAI-style chat endpoint driven from AGENT_API_URL / AGENT_API_KEY /
    AGENT_MODEL environment variables; credentials never reach logs."""

    def __init__(self, timeout: float = 120.0):
        self.url = os.environ.get("AGENT_API_URL")
        self.key = os.environ.get("AGENT_API_KEY")
        self.model = os.environ.get("AGENT_MODEL", "")
        self.timeout = timeout
        if not self.url or not self.key:
            raise ClientFailure("AGENT_API_URL and AGENT_API_KEY must be set")

    def respond(self, request: dict) -> dict:
        import httpx

        try:
            response = httpx.post(
                self.url,
                json={
                    "model": self.model,
                    "messages": request["messages"],
                    "tools": request["tools"],
                },
                headers={"Authorization": f"Bearer {self.key}"},
                timeout=self.timeout,
            )
            response.raise_for_status()
            message = response.json()["choices"][0]["message"]
        except Exception as exc:
            raise ClientFailure(f"agent endpoint failed: {exc}") from exc
        calls = message.get("tool_calls") or []
        if calls:
            fn = calls[0].get("function", {})
            try:
                args = json.loads(fn.get("arguments") or "{}")
            except json.JSONDecodeError as exc:
                raise ClientFailure(f"agent returned malformed arguments: {exc}") from exc
            return {"tool_call": {"name": fn.get("name", ""), "args": args}}
        return {"final_text": message.get("content") or ""}


def make_agent(spec: str, task: TaskInstance, repo: Repository) -> AgentClient:
    """Build an agent from a CLI-style spec string.

    Supported: oracle | null | scripted:<json-path> | replay:<jsonl-path> |
    capacity:<m> | http.
    """
    if spec == "oracle":
        return OracleAgent(task, repo)
    if spec == "null":
        return NullAgent()
    if spec == "http":
        return HttpAgent()
    if spec.startswith("scripted:"):
        actions = json.loads(Path(spec.split(":", 1)[1]).read_text(encoding="utf-8"))
        return ScriptedAgent(actions)
    if spec.startswith("replay:"):
        return ReplayAgent.from_file(Path(spec.split(":", 1)[1]))
    if spec.startswith("capacity:"):
        return CapacityAgent(int(spec.split(":", 1)[1]), task, repo)
    raise UnknownAgent(spec)
