"""Repository ingestion, function-unit extraction, and static call-graph construction.

A repository is modeled as a set of *units* (top-level functions, classes, and
methods), a test command, and a directed call graph whose edges are produced by
two-pass static name resolution:

  pass 1 — index every qualified name defined in the repo;
  pass 2 — resolve call expressions by (a) same-module scope, (b) explicit
           import aliases, (c) unique global name match.  Ambiguous names
           (two or more candidates) produce edges to every candidate; method
           calls through an unknown receiver resolve by method name only when
           that name is unique repo-wide.

Each unit stores three verbatim text segments (signature, docstring, body)
whose concatenation reproduces the source slice of its line span exactly, so a
unit can be swapped out of a file and restored byte-for-byte.
"""

from __future__ import annotations

import ast
import hashlib
import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

from .errors import NoUnitsFound, PathNotFound, UnknownNode

SNAPSHOT_SCHEMA_VERSION = 1

EXCLUDED_DIRS = {
    ".git",
    "__pycache__",
    ".pytest_cache",
    ".mypy_cache",
    ".tox",
    ".venv",
    "venv",
    "node_modules",
    "build",
    "dist",
}


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Span:
    """1-based inclusive line range of a unit inside its file."""

    start: int
    end: int


@dataclass(frozen=True)
class FunctionUnit:
    """One parsed callable: a top-level function, a class, or a method.

    ``signature`` runs from the first decorator line through the header colon,
    ``docstring`` is the documentation statement verbatim (or empty), and
    ``body`` is the remaining implementation text.  ``signature + docstring +
    body`` equals the file slice covered by ``span``.
    """

    id: str
    kind: str  # "function" | "method" | "class"
    signature: str
    docstring: str
    body: str
    span: Span

    @property
    def path(self) -> str:
        return self.id.split("::", 1)[0]

    @property
    def qualname(self) -> str:
        return self.id.split("::", 1)[1]

    @property
    def name(self) -> str:
        return self.qualname.rsplit(".", 1)[-1]

    @property
    def source(self) -> str:
        return self.signature + self.docstring + self.body

    def digest(self) -> str:
        return _sha256(self.source)


@dataclass
class Repository:
    root: Path
    commit: str
    units: dict[str, FunctionUnit]
    test_command: str
    metadata: dict = field(default_factory=dict)

    def unit(self, unit_id: str) -> FunctionUnit:
        return self.units[unit_id]


@dataclass
class CallGraph:
    nodes: set[str]
    edges: set[tuple[str, str]]
    unresolved: list[tuple[str, str]]

    def out_neighbors(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {n: set() for n in self.nodes}
        for a, b in self.edges:
            adj[a].add(b)
        return adj

    def in_neighbors(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {n: set() for n in self.nodes}
        for a, b in self.edges:
            adj[b].add(a)
        return adj


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _header_colon_offset(text: str) -> int:
    """Offset of the colon that closes a def/class header, skipping brackets
    and string literals (annotation/default/decorator colons sit inside
    brackets and never at depth 0)."""
    depth = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in "\"'":
            quote = ch
            if text[i : i + 3] in ('"""', "'''"):
                quote = text[i : i + 3]
                i += 3
            else:
                i += 1
            while i < n:
                if text[i] == "\\":
                    i += 2
                    continue
                if text.startswith(quote, i):
                    i += len(quote)
                    break
                i += 1
            continue
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        elif ch == ":" and depth == 0:
            return i
        i += 1
    raise ValueError("no header colon found")


def _segment_unit(lines: list[str], node: ast.AST, start_line: int, end_line: int) -> tuple[str, str, str]:
    """Split the span ``start_line..end_line`` (1-based inclusive) into
    verbatim (signature, docstring, body) segments."""
    slice_text = "".join(lines[start_line - 1 : end_line])
    first = node.body[0]  # type: ignore[attr-defined]

    colon_offset = _header_colon_offset(slice_text)
    colon_line = start_line + slice_text[:colon_offset].count("\n")
    if first.lineno <= colon_line:
        # One-liner such as ``def f(): return 1``: split at the header colon.
        return slice_text[: colon_offset + 1], "", slice_text[colon_offset + 1 :]

    has_doc = (
        isinstance(first, ast.Expr)
        and isinstance(first.value, ast.Constant)
        and isinstance(first.value.value, str)
    )
    sig = "".join(lines[start_line - 1 : first.lineno - 1])
    if has_doc:
        doc_end = first.end_lineno
        doc = "".join(lines[first.lineno - 1 : doc_end])
        body = "".join(lines[doc_end:end_line])
    else:
        doc = ""
        body = "".join(lines[first.lineno - 1 : end_line])
    return sig, doc, body


def _node_span(node) -> tuple[int, int]:
    start = node.lineno
    if node.decorator_list:
        start = min(start, min(d.lineno for d in node.decorator_list))
    return start, node.end_lineno


def parse_file(path: Path, rel: str) -> list[FunctionUnit]:
    """Extract the units of one source file.

    Produces top-level functions, top-level classes (one unit covering the
    whole class body), and the classes' methods as additional units.
    """
    source = path.read_text(encoding="utf-8")
    tree = ast.parse(source)
    lines = source.splitlines(keepends=True)
    units: list[FunctionUnit] = []

    def add(node, qualname: str, kind: str) -> None:
        start, end = _node_span(node)
        sig, doc, body = _segment_unit(lines, node, start, end)
        units.append(
            FunctionUnit(
                id=f"{rel}::{qualname}",
                kind=kind,
                signature=sig,
                docstring=doc,
                body=body,
                span=Span(start, end),
            )
        )

    for node in tree.body:
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            add(node, node.name, "function")
        elif isinstance(node, ast.ClassDef):
            add(node, node.name, "class")
            for sub in node.body:
                if isinstance(sub, (ast.FunctionDef, ast.AsyncFunctionDef)):
                    add(sub, f"{node.name}.{sub.name}", "method")
    return units


def iter_source_files(root: Path) -> list[Path]:
    files = []
    for path in sorted(root.rglob("*.py")):
        if any(part in EXCLUDED_DIRS for part in path.relative_to(root).parts):
            continue
        files.append(path)
    return files


def is_test_path(rel: str) -> bool:
    """True for files under a tests directory or named test_*.py / *_test.py."""
    parts = rel.replace("\\", "/").split("/")
    if any(p in ("tests", "test", "testing") for p in parts[:-1]):
        return True
    base = parts[-1]
    return base.startswith("test_") or base.endswith("_test.py")


def dedent_unit(source: str) -> str:
    """Strip a method unit's base indentation so the text parses standalone.

    Lines that do not share the first line's indentation (e.g. multi-line
    string content) are kept as they are.
    """
    first = source.splitlines()[0] if source else ""
    indent = first[: len(first) - len(first.lstrip())]
    if not indent:
        return source
    out = []
    for line in source.splitlines(keepends=True):
        out.append(line[len(indent) :] if line.startswith(indent) else line)
    return "".join(out)


def ingest_repository(root: Path | str, test_command: str, commit: str = "unversioned") -> Repository:
    """Parse every source file under ``root`` into function units.

    Files that fail to parse are skipped and listed under
    ``metadata["parse_failures"]``.
    """
    root = Path(root)
    if not root.exists():
        raise PathNotFound(f"repository root does not exist: {root}")

    units: dict[str, FunctionUnit] = {}
    parse_failures: list[str] = []
    for path in iter_source_files(root):
        rel = path.relative_to(root).as_posix()
        try:
            for unit in parse_file(path, rel):
                units[unit.id] = unit
        except (SyntaxError, ValueError, UnicodeDecodeError):
            parse_failures.append(rel)

    if not units:
        raise NoUnitsFound(f"no function units found under {root}")

    return Repository(
        root=root,
        commit=commit,
        units=units,
        test_command=test_command,
        metadata={"parse_failures": parse_failures},
    )


# ---------------------------------------------------------------------------
# Call-graph construction
# ---------------------------------------------------------------------------


def _module_name(rel_path: str) -> str:
    parts = rel_path[:-3].split("/")  # strip .py
    if parts and parts[-1] == "__init__":
        parts = parts[:-1]
    return ".".join(parts)


class _ImportTable:
    """Per-module alias maps built from import statements."""

    def __init__(self) -> None:
        self.module_aliases: dict[str, str] = {}  # local name -> module name
        self.name_aliases: dict[str, tuple[str, str]] = {}  # local name -> (module, name)


def _collect_imports(tree: ast.Module, module: str) -> _ImportTable:
    table = _ImportTable()
    package = module.rsplit(".", 1)[0] if "." in module else ""
    for node in ast.walk(tree):
        if isinstance(node, ast.Import):
            for alias in node.names:
                if alias.asname:
                    table.module_aliases[alias.asname] = alias.name
                else:
                    head = alias.name.split(".")[0]
                    table.module_aliases[head] = head
        elif isinstance(node, ast.ImportFrom):
            if node.level:
                base = module.split(".")
                base = base[: len(base) - node.level] if len(base) >= node.level else []
                prefix = ".".join(base)
                src = f"{prefix}.{node.module}" if node.module and prefix else (node.module or prefix)
            else:
                src = node.module or package
            for alias in node.names:
                local = alias.asname or alias.name
                table.name_aliases[local] = (src, alias.name)
    return table


class _CallCollector(ast.NodeVisitor):
    """Collect call-expression targets attributed to the innermost unit.

    Nested function/class bodies are excluded from the enclosing unit's scan
    (each call belongs to exactly one unit); calls at class-statement level
    belong to the class unit.
    """

    def __init__(self) -> None:
        self.calls: list[ast.expr] = []

    def visit_FunctionDef(self, node) -> None:
        pass  # inner scope

    visit_AsyncFunctionDef = visit_FunctionDef
    visit_ClassDef = visit_FunctionDef

    def visit_Call(self, node: ast.Call) -> None:
        self.calls.append(node.func)
        self.generic_visit(node)


def _collect_calls(stmts: list[ast.stmt]) -> list[ast.expr]:
    collector = _CallCollector()
    for stmt in stmts:
        if isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
            continue
        collector.visit(stmt)
    return collector.calls


def _attr_chain(expr: ast.Attribute) -> list[str] | None:
    """``pkg.mod.f`` -> ["pkg", "mod", "f"]; None when the base is not a name."""
    parts = [expr.attr]
    node = expr.value
    while isinstance(node, ast.Attribute):
        parts.append(node.attr)
        node = node.value
    if not isinstance(node, ast.Name):
        return None
    parts.append(node.id)
    return list(reversed(parts))


def _attr_text(expr: ast.Attribute) -> str:
    chain = _attr_chain(expr)
    if chain is None:
        return f"<expr>.{expr.attr}"
    return ".".join(chain)


def _find_node(tree: ast.Module, qualname: str):
    parts = qualname.split(".")
    scope = tree.body
    node = None
    for i, part in enumerate(parts):
        node = None
        for stmt in scope:
            if isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)) and stmt.name == part:
                node = stmt
                break
        if node is None:
            return None
        scope = node.body if i < len(parts) - 1 else []
    return node


def build_call_graph(repo: Repository) -> CallGraph:
    """Resolve call expressions in each unit's body to repo units.

    Deterministic for a fixed repository: files, units, and calls are visited
    in sorted order and results live in ordered containers.
    """
    nodes = set(repo.units)
    edges: set[tuple[str, str]] = set()
    unresolved: list[tuple[str, str]] = []

    # pass 1: name indexes
    by_module_and_name: dict[tuple[str, str], str] = {}
    by_name: dict[str, list[str]] = {}
    method_by_name: dict[str, list[str]] = {}
    for uid in sorted(repo.units):
        unit = repo.units[uid]
        module = _module_name(unit.path)
        by_module_and_name[(module, unit.qualname)] = uid
        by_name.setdefault(unit.name, []).append(uid)
        if unit.kind == "method":
            method_by_name.setdefault(unit.name, []).append(uid)

    file_trees: dict[str, ast.Module] = {}
    imports: dict[str, _ImportTable] = {}
    for rel in sorted({u.path for u in repo.units.values()}):
        try:
            tree = ast.parse((repo.root / rel).read_text(encoding="utf-8"))
        except (OSError, SyntaxError):
            continue
        file_trees[rel] = tree
        imports[rel] = _collect_imports(tree, _module_name(rel))

    def resolve_name(name: str, rel: str) -> list[str]:
        module = _module_name(rel)
        table = imports.get(rel, _ImportTable())
        # (a) same-module scope
        uid = by_module_and_name.get((module, name))
        if uid:
            return [uid]
        # (b) explicit import aliases
        if name in table.name_aliases:
            src_module, src_name = table.name_aliases[name]
            uid = by_module_and_name.get((src_module, src_name))
            return [uid] if uid else []
        # (c) unique global name match; ambiguity yields all candidates
        candidates = [u for u in by_name.get(name, []) if repo.units[u].kind != "method"]
        return candidates

    def resolve_attribute(expr: ast.Attribute, rel: str, owner: FunctionUnit) -> list[str]:
        table = imports.get(rel, _ImportTable())
        attr = expr.attr
        base = expr.value
        module = _module_name(rel)

        if isinstance(base, ast.Name):
            base_name = base.id
            # receiver is self/cls: sibling method of the enclosing class
            if base_name in ("self", "cls") and owner.kind in ("method", "class"):
                cls_qual = owner.qualname.rsplit(".", 1)[0] if owner.kind == "method" else owner.qualname
                uid = by_module_and_name.get((module, f"{cls_qual}.{attr}"))
                if uid:
                    return [uid]
            # module alias: mod.f()
            if base_name in table.module_aliases:
                uid = by_module_and_name.get((table.module_aliases[base_name], attr))
                if uid:
                    return [uid]
            # submodule imported via from-import: from pkg import mod; mod.f()
            if base_name in table.name_aliases:
                src_module, src_name = table.name_aliases[base_name]
                dotted = f"{src_module}.{src_name}" if src_module else src_name
                uid = by_module_and_name.get((dotted, attr))
                if uid:
                    return [uid]
            # class attribute: C.m()
            for base_uid in resolve_name(base_name, rel):
                base_unit = repo.units[base_uid]
                if base_unit.kind == "class":
                    uid = by_module_and_name.get(
                        (_module_name(base_unit.path), f"{base_unit.qualname}.{attr}")
                    )
                    if uid:
                        return [uid]

        # dotted module path: pkg.mod.f()
        chain = _attr_chain(expr)
        if chain and len(chain) >= 3 and chain[0] in table.module_aliases:
            dotted = ".".join([table.module_aliases[chain[0]], *chain[1:-1]])
            uid = by_module_and_name.get((dotted, chain[-1]))
            if uid:
                return [uid]

        # dynamic dispatch: resolve by method name when unique repo-wide
        methods = method_by_name.get(attr, [])
        if len(methods) == 1:
            return methods
        return []

    for uid in sorted(repo.units):
        unit = repo.units[uid]
        rel = unit.path
        tree = file_trees.get(rel)
        if tree is None:
            continue
        node = _find_node(tree, unit.qualname)
        if node is None:
            continue
        for call_expr in _collect_calls(node.body):
            if isinstance(call_expr, ast.Name):
                resolved = resolve_name(call_expr.id, rel)
                if resolved:
                    for target in resolved:
                        edges.add((uid, target))
                else:
                    unresolved.append((uid, call_expr.id))
            elif isinstance(call_expr, ast.Attribute):
                resolved = resolve_attribute(call_expr, rel, unit)
                if resolved:
                    for target in resolved:
                        edges.add((uid, target))
                else:
                    unresolved.append((uid, _attr_text(call_expr)))
            # calls on arbitrary expressions (lambdas, subscripts) are skipped

    return CallGraph(nodes=nodes, edges=edges, unresolved=sorted(set(unresolved)))


# ---------------------------------------------------------------------------
# Graph queries
# ---------------------------------------------------------------------------


def chain_distance(g: CallGraph, a: str, b: str) -> float:
    """Shortest-path length between ``a`` and ``b`` on the undirected view of
    the call graph; ``math.inf`` when disconnected."""
    if a not in g.nodes:
        raise UnknownNode(a)
    if b not in g.nodes:
        raise UnknownNode(b)
    if a == b:
        return 0
    adj: dict[str, set[str]] = {n: set() for n in g.nodes}
    for x, y in g.edges:
        adj[x].add(y)
        adj[y].add(x)
    seen = {a}
    frontier = deque([(a, 0)])
    while frontier:
        node, dist = frontier.popleft()
        for nxt in adj[node]:
            if nxt == b:
                return dist + 1
            if nxt not in seen:
                seen.add(nxt)
                frontier.append((nxt, dist + 1))
    return math.inf


# ---------------------------------------------------------------------------
# Snapshot serialization
# ---------------------------------------------------------------------------


def snapshot_dict(repo: Repository, graph: CallGraph) -> dict:
    return {
        "schema_version": SNAPSHOT_SCHEMA_VERSION,
        "commit": repo.commit,
        "test_command": repo.test_command,
        "metadata": repo.metadata,
        "units": [
            {
                "id": uid,
                "kind": unit.kind,
                "span": [unit.span.start, unit.span.end],
                "signature_sha256": _sha256(unit.signature),
                "docstring_sha256": _sha256(unit.docstring),
                "body_sha256": _sha256(unit.body),
            }
            for uid, unit in sorted(repo.units.items())
        ],
        "edges": sorted([a, b] for a, b in graph.edges),
        "unresolved": sorted([a, b] for a, b in graph.unresolved),
    }


def write_snapshot(repo: Repository, graph: CallGraph, path: Path) -> None:
    path.write_text(json.dumps(snapshot_dict(repo, graph), indent=2, sort_keys=True) + "\n", encoding="utf-8")
