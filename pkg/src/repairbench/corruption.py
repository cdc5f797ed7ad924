"""Clients that propose corrupted function bodies during task generation.

The generation loop renders an instruction prompt, hands it to a client
together with the current function source and the previous round's test
feedback, and expects a complete rewritten function back.  Scripted and
replay clients make generation deterministic for tests and offline runs; the
heuristic client mutates the AST with a seeded RNG; the live client talks to
an HTTP chat endpoint configured through environment variables.
"""

from __future__ import annotations

import ast
import json
import os
import random
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path

from .errors import ClientFailure


@dataclass
class CorruptionRequest:
    prompt: str
    function_source: str
    round: int
    feedback: str | None = None


class CorruptionClient(ABC):
    """Produces candidate replacements for a target function."""

    @abstractmethod
    def propose(self, request: CorruptionRequest) -> str:
        """Return the full rewritten function source for this round."""


class ScriptedCorruptionClient(CorruptionClient):
    """Replays a fixed list of candidate sources, one per round."""

    def __init__(self, candidates: list[str]):
        self.candidates = list(candidates)
        self.calls = 0

    def propose(self, request: CorruptionRequest) -> str:
        if self.calls >= len(self.candidates):
            raise ClientFailure("scripted client exhausted")
        candidate = self.candidates[self.calls]
        self.calls += 1
        return candidate


class ReplayCorruptionClient(CorruptionClient):
    """Replays responses recorded as JSON lines with a "response" field."""

    def __init__(self, path: Path):
        responses = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                responses.append(json.loads(line)["response"])
        self._inner = ScriptedCorruptionClient(responses)

    def propose(self, request: CorruptionRequest) -> str:
        return self._inner.propose(request)


class _MutationFinder(ast.NodeVisitor):
    """Collects (node, kind) pairs the heuristic client knows how to flip."""

    _CMP_SWAP = {ast.Lt: ast.LtE, ast.LtE: ast.Lt, ast.Gt: ast.GtE, ast.GtE: ast.Gt, ast.Eq: ast.NotEq, ast.NotEq: ast.Eq}
    _BIN_SWAP = {
        ast.Add: ast.Sub,
        ast.Sub: ast.Add,
        ast.Mult: ast.Add,
        ast.Div: ast.FloorDiv,
        ast.FloorDiv: ast.Div,
        ast.Pow: ast.Mult,
    }

    def __init__(self) -> None:
        self.sites: list[tuple[ast.AST, str]] = []

    def visit_Compare(self, node: ast.Compare) -> None:
        if type(node.ops[0]) in self._CMP_SWAP:
            self.sites.append((node, "compare"))
        self.generic_visit(node)

    def visit_BinOp(self, node: ast.BinOp) -> None:
        if type(node.op) in self._BIN_SWAP:
            self.sites.append((node, "binop"))
        self.generic_visit(node)

    def visit_BoolOp(self, node: ast.BoolOp) -> None:
        self.sites.append((node, "boolop"))
        self.generic_visit(node)

    def visit_Constant(self, node: ast.Constant) -> None:
        if type(node.value) is int:
            self.sites.append((node, "int"))
        elif type(node.value) is bool:
            self.sites.append((node, "bool"))


class HeuristicCorruptionClient(CorruptionClient):
    """Applies one seeded AST mutation per round: comparison or arithmetic
    operator flips, off-by-one constants, boolean flips."""

    def __init__(self, seed: int = 0):
        self.rng = random.Random(seed)

    def propose(self, request: CorruptionRequest) -> str:
        source = request.function_source
        try:
            tree = ast.parse(source)
        except SyntaxError as exc:
            raise ClientFailure(f"cannot parse target function: {exc}") from exc
        finder = _MutationFinder()
        finder.visit(tree)
        if not finder.sites:
            raise ClientFailure("no mutation site available")
        node, kind = self.rng.choice(finder.sites)
        if kind == "compare":
            node.ops[0] = _MutationFinder._CMP_SWAP[type(node.ops[0])]()
        elif kind == "binop":
            node.op = _MutationFinder._BIN_SWAP[type(node.op)]()
        elif kind == "boolop":
            node.op = ast.Or() if isinstance(node.op, ast.And) else ast.And()
        elif kind == "int":
            node.value = node.value + self.rng.choice((-1, 1))
        elif kind == "bool":
            node.value = not node.value
        return ast.unparse(tree)


class HttpCorruptionClient(CorruptionClient):
    """Talks to an OpenAI-style chat completion endpoint.

    Reads CORRUPTION_API_URL, CORRUPTION_API_KEY, and CORRUPTION_MODEL from
    the environment; never from config files.
    """

    def __init__(self, timeout: float = 120.0):
        self.url = os.environ.get("CORRUPTION_API_URL")
        self.key = os.environ.get("CORRUPTION_API_KEY")
        self.model = os.environ.get("CORRUPTION_MODEL", "")
        self.timeout = timeout
        if not self.url or not self.key:
            raise ClientFailure("CORRUPTION_API_URL and CORRUPTION_API_KEY must be set")

    def propose(self, request: CorruptionRequest) -> str:
        import httpx

        messages = [{"role": "user", "content": request.prompt}]
        if request.feedback:
            messages.append({"role": "user", "content": request.feedback})
        try:
            response = httpx.post(
                self.url,
                json={"model": self.model, "messages": messages},
                headers={"Authorization": f"Bearer {self.key}"},
                timeout=self.timeout,
            )
            response.raise_for_status()
            payload = response.json()
            text = payload["choices"][0]["message"]["content"]
        except Exception as exc:
            raise ClientFailure(f"chat endpoint failed: {exc}") from exc
        return _strip_code_fence(text)


def _strip_code_fence(text: str) -> str:
    stripped = text.strip()
    if stripped.startswith("```"):
        lines = stripped.splitlines()
        lines = lines[1:]
        if lines and lines[-1].strip().startswith("```"):
            lines = lines[:-1]
        return "\n".join(lines) + "\n"
    return text


def make_client(spec: str, seed: int = 0) -> CorruptionClient:
    """Build a client from a CLI-style spec: heuristic | replay:<path> | http."""
    if spec == "heuristic":
        return HeuristicCorruptionClient(seed=seed)
    if spec.startswith("replay:"):
        return ReplayCorruptionClient(Path(spec.split(":", 1)[1]))
    if spec == "http":
        return HttpCorruptionClient()
    raise ClientFailure(f"unknown corruption client: {spec}")
