"""Task generation: corrupt functions, validate against the suite, pick sets.

A task bundles one or more corruptions of a working repository together with
the tests they break.  Deletion tasks strip a function down to its signature,
docstring, and a ``raise NotImplementedError`` placeholder.  Adversarial
tasks drive a CorruptionClient through a propose-and-test loop until a
candidate breaks at least ``min_tests_failing`` tests.  Multifunction sets
keep all targets within ``max_distance`` hops of each other on the
undirected call graph.
"""

from __future__ import annotations

import ast
import hashlib
import json
import random
import shutil
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .corruption import CorruptionClient, CorruptionRequest
from .errors import (
    ClientFailure,
    NoTasksGenerated,
    NoValidCorruption,
    RunnerCrash,
    UnknownUnit,
    UnsupportedTarget,
)
from .harness import SuiteReport, baseline, failing_diff, run_suite, snapshot_repository
from .metrics import METRIC_COLUMNS, MetricsRecord, NormalizedMetrics, compute_metrics, normalize
from .repo import (
    CallGraph,
    FunctionUnit,
    Repository,
    _node_span,
    _segment_unit,
    dedent_unit,
    is_test_path,
)

GENERATOR_VERSION = "taskgen-1"
MAX_SET_ENUMERATION = 200_000

PLACEHOLDER = "raise NotImplementedError"


@dataclass(frozen=True)
class Corruption:
    target: str
    method: str  # "deletion" | "adversarial"
    corrupted_body: str  # full replacement unit text: signature + docstring + body
    original_digest: str


@dataclass
class TaskInstance:
    task_id: str
    repo_ref: dict  # {"source": ..., "commit": ...}
    mode: str  # "remove" | "discovery"
    corruptions: list[Corruption]
    failing_tests: set[str]
    metrics: dict  # target -> {"raw": {...}, "z": {...}, "pct": {...}}
    generator: dict  # {"version": ..., "seed": ...}

    @property
    def targets(self) -> list[str]:
        return [c.target for c in self.corruptions]

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "repo_ref": dict(self.repo_ref),
            "mode": self.mode,
            "corruptions": [
                {
                    "target": c.target,
                    "method": c.method,
                    "corrupted_body": c.corrupted_body,
                    "original_digest": c.original_digest,
                }
                for c in self.corruptions
            ],
            "failing_tests": sorted(self.failing_tests),
            "metrics": self.metrics,
            "generator": dict(self.generator),
        }


# ---------------------------------------------------------------------------
# Text helpers
# ---------------------------------------------------------------------------


def _leading_ws(line: str) -> str:
    return line[: len(line) - len(line.lstrip())]


def _first_nonblank_indent(text: str) -> str | None:
    for line in text.splitlines():
        if line.strip():
            return _leading_ws(line)
    return None


def _reindent(text: str, old: str, new: str) -> str:
    if old == new:
        return text
    out = []
    for line in text.splitlines(keepends=True):
        if not line.strip():
            out.append(line)
        elif line.startswith(old):
            out.append(new + line[len(old) :])
        else:
            out.append(line)  # under-indented (string content): leave alone
    return "".join(out)


def _parses(unit_text: str) -> bool:
    try:
        ast.parse(dedent_unit(unit_text))
        return True
    except SyntaxError:
        return False


def _require_unit(repo: Repository, target: str) -> FunctionUnit:
    try:
        return repo.units[target]
    except KeyError:
        raise UnknownUnit(target) from None


# ---------------------------------------------------------------------------
# Deletion
# ---------------------------------------------------------------------------


def delete_function(repo: Repository, target: str) -> Corruption:
    """Strip the implementation: signature + docstring + one placeholder raise."""
    unit = _require_unit(repo, target)
    if unit.kind == "class":
        raise UnsupportedTarget(f"classes cannot be deletion targets: {target}")
    trailing = "\n" if unit.source.endswith("\n") else ""
    if unit.signature.endswith("\n"):
        indent = _first_nonblank_indent(unit.docstring + unit.body)
        if indent is None:
            indent = _leading_ws(unit.signature.splitlines()[-1]) + "    "
        corrupted = unit.signature + unit.docstring + indent + PLACEHOLDER + trailing
    else:
        # inline definition such as ``def f(): return 1``
        corrupted = unit.signature + " " + PLACEHOLDER + trailing
    if corrupted == unit.source:
        raise UnsupportedTarget(f"target is already a stub: {target}")
    if not _parses(corrupted):
        raise UnsupportedTarget(f"deletion result does not parse: {target}")
    return Corruption(target=target, method="deletion", corrupted_body=corrupted, original_digest=unit.digest())


# ---------------------------------------------------------------------------
# Adversarial corruption
# ---------------------------------------------------------------------------


def _load_template(name: str) -> str:
    return resources.files("repairbench").joinpath("templates", name).read_text(encoding="utf-8")


def _signature_fingerprint(source: str) -> tuple[str, str] | None:
    try:
        tree = ast.parse(dedent_unit(source))
    except SyntaxError:
        return None
    for node in tree.body:
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            return node.name, ast.dump(node.args)
        if isinstance(node, ast.ClassDef):
            return node.name, ast.dump(node.bases) if node.bases else ""
    return None


def candidate_to_corruption(repo: Repository, target: str, candidate_source: str) -> tuple[Corruption | None, str | None]:
    """Splice a client-proposed rewrite onto the original signature/docstring.

    Returns (corruption, None) on success or (None, reason) when the
    candidate is rejected: parse failure, changed signature, or a no-op.
    """
    unit = _require_unit(repo, target)
    original_fp = _signature_fingerprint(unit.source)
    candidate_fp = _signature_fingerprint(candidate_source)
    if candidate_fp is None:
        return None, "candidate does not parse"
    if candidate_fp != original_fp:
        return None, "signature changed"

    tree = ast.parse(dedent_unit(candidate_source))
    node = next(n for n in tree.body if isinstance(n, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)))
    lines = dedent_unit(candidate_source).splitlines(keepends=True)
    start, end = _node_span(node)
    _, _, cand_body = _segment_unit(lines, node, start, end)
    if not cand_body.strip():
        return None, "candidate body is empty"

    trailing = "\n" if unit.source.endswith("\n") else ""
    if unit.signature.endswith("\n"):
        target_indent = _first_nonblank_indent(unit.docstring + unit.body)
        if target_indent is None:
            target_indent = _leading_ws(unit.signature.splitlines()[-1]) + "    "
        if not cand_body.startswith("\n") and not _first_nonblank_indent(cand_body):
            # inline candidate (``def f(): return 1``): promote to a block
            cand_block = target_indent + cand_body.strip() + "\n"
        else:
            cand_indent = _first_nonblank_indent(cand_body) or ""
            cand_block = _reindent(cand_body, cand_indent, target_indent)
        corrupted = unit.signature + unit.docstring + cand_block
        if trailing == "" and corrupted.endswith("\n"):
            corrupted = corrupted[:-1]
    else:
        # original is inline: replace the whole line with a block form
        base_indent = _leading_ws(unit.signature.splitlines()[0]) + "    "
        cand_indent = _first_nonblank_indent(cand_body) or ""
        block = _reindent(cand_body, cand_indent, base_indent) if cand_body.endswith("\n") else base_indent + cand_body.strip() + "\n"
        corrupted = unit.signature + "\n" + block
        if trailing == "" and corrupted.endswith("\n"):
            corrupted = corrupted[:-1]

    if corrupted == unit.source:
        return None, "candidate is identical to the original"
    if not _parses(corrupted):
        return None, "spliced candidate does not parse"
    return Corruption(target=target, method="adversarial", corrupted_body=corrupted, original_digest=unit.digest()), None


def _relevant_test_excerpts(repo: Repository, unit: FunctionUnit, cap: int = 5) -> str:
    module = unit.path[:-3].replace("/", ".") if unit.path.endswith(".py") else unit.path
    short = module.rsplit(".", 1)[-1]
    file_cache: dict[str, str] = {}
    chosen: list[FunctionUnit] = []
    for uid in sorted(repo.units):
        test_unit = repo.units[uid]
        if not is_test_path(test_unit.path) or test_unit.kind != "function":
            continue
        if not test_unit.name.startswith("test"):
            continue
        if test_unit.path not in file_cache:
            try:
                file_cache[test_unit.path] = (repo.root / test_unit.path).read_text(encoding="utf-8")
            except OSError:
                file_cache[test_unit.path] = ""
        text = file_cache[test_unit.path]
        if short in text or unit.name in text:
            chosen.append(test_unit)
        if len(chosen) >= cap:
            break
    return "\n\n".join(dedent_unit(t.source) for t in chosen) if chosen else "(no test excerpts available)"


def adversarial_corrupt(
    repo: Repository,
    target: str,
    llm: CorruptionClient,
    test_budget: int = 5,
    max_tool_calls: int = 10,
    baseline_report: SuiteReport | None = None,
    cap_seconds: float = 60.0,
    min_tests_failing: int = 2,
) -> Corruption:
    """Propose-and-test loop: accept the first candidate breaking enough tests.

    ``test_budget`` caps submit-and-observe rounds; ``max_tool_calls`` caps
    client proposals (statically rejected candidates burn a proposal but not
    a test run).
    """
    unit = _require_unit(repo, target)
    if baseline_report is None:
        baseline_report = baseline(repo, cap_seconds)
    prompt = _load_template("corruption_prompt.txt").format(
        function_path=unit.path,
        func_code=dedent_unit(unit.source),
        test_examples=_relevant_test_excerpts(repo, unit),
        test_budget=test_budget,
        max_iterations=max_tool_calls,
    )
    feedback: str | None = None
    runs = 0
    for round_no in range(max_tool_calls):
        if runs >= test_budget:
            break
        try:
            candidate = llm.propose(
                CorruptionRequest(prompt=prompt, function_source=dedent_unit(unit.source), round=round_no, feedback=feedback)
            )
        except ClientFailure:
            break  # the client ran dry; same outcome as exhausting the budget
        corruption, reason = candidate_to_corruption(repo, target, candidate)
        if corruption is None:
            feedback = f"Candidate rejected: {reason}. Submit a corrected full function."
            continue
        runs += 1
        snapshot = snapshot_repository(repo.root)
        try:
            apply_corruptions(snapshot, repo, [corruption])
            try:
                report = run_suite(snapshot, repo.test_command, cap_seconds)
            except RunnerCrash:
                feedback = "The test runner crashed on your candidate; keep the module importable."
                continue
        finally:
            shutil.rmtree(snapshot.parent, ignore_errors=True)
        if report.exit == "timeout":
            feedback = "The suite timed out with your candidate; avoid changes that can hang."
            continue
        diff = failing_diff(baseline_report, report)
        if len(diff) >= min_tests_failing:
            return corruption
        feedback = (
            f"Only {len(diff)} test(s) failed: {sorted(diff)}. "
            f"At least {min_tests_failing} must fail; try a different change."
        )
    raise NoValidCorruption(f"no qualifying corruption for {target} within budget")


# ---------------------------------------------------------------------------
# Applying and reverting corruptions
# ---------------------------------------------------------------------------


def _nested_units(a: str, b: str) -> bool:
    if "::" not in a or "::" not in b:
        return False
    pa, qa = a.split("::", 1)
    pb, qb = b.split("::", 1)
    if pa != pb:
        return False
    return qa.startswith(qb + ".") or qb.startswith(qa + ".")


def apply_corruptions(snapshot_root: Path, repo: Repository, corruptions: list[Corruption]) -> None:
    """Splice corrupted unit text into a snapshot, bottom-up per file."""
    snapshot_root = Path(snapshot_root)
    by_file: dict[str, list[FunctionUnit]] = {}
    body_by_target = {c.target: c.corrupted_body for c in corruptions}
    for corruption in corruptions:
        unit = _require_unit(repo, corruption.target)
        by_file.setdefault(unit.path, []).append(unit)
    for rel, units in by_file.items():
        units = sorted(units, key=lambda u: u.span.start)
        for prev, cur in zip(units, units[1:]):
            if cur.span.start <= prev.span.end:
                raise UnsupportedTarget(f"overlapping targets in {rel}: {prev.id}, {cur.id}")
        file_path = snapshot_root / rel
        lines = file_path.read_text(encoding="utf-8").splitlines(keepends=True)
        for unit in reversed(units):
            new_lines = body_by_target[unit.id].splitlines(keepends=True)
            if new_lines and not new_lines[-1].endswith("\n") and unit.span.end < len(lines):
                new_lines[-1] += "\n"
            lines[unit.span.start - 1 : unit.span.end] = new_lines
        file_path.write_text("".join(lines), encoding="utf-8")


def restore_originals(snapshot_root: Path, repo: Repository, corruptions: list[Corruption]) -> None:
    """Put original unit text back into a corrupted snapshot, one target at a
    time (spans are re-read after every splice)."""
    from .repo import parse_file

    snapshot_root = Path(snapshot_root)
    for corruption in corruptions:
        original = _require_unit(repo, corruption.target)
        if original.digest() != corruption.original_digest:
            raise UnsupportedTarget(f"digest mismatch for {corruption.target}")
        rel = original.path
        file_path = snapshot_root / rel
        current = {u.id: u for u in parse_file(file_path, rel)}
        live = current.get(corruption.target)
        if live is None:
            raise UnknownUnit(f"{corruption.target} not found in corrupted snapshot")
        lines = file_path.read_text(encoding="utf-8").splitlines(keepends=True)
        new_lines = original.source.splitlines(keepends=True)
        if new_lines and not new_lines[-1].endswith("\n") and live.span.end < len(lines):
            new_lines[-1] += "\n"
        lines[live.span.start - 1 : live.span.end] = new_lines
        file_path.write_text("".join(lines), encoding="utf-8")


# ---------------------------------------------------------------------------
# Multifunction set selection
# ---------------------------------------------------------------------------


def select_multifunction_sets(
    g: CallGraph,
    k: int,
    max_distance: int = 4,
    count: int = 10,
    seed: int = 0,
    eligible: set[str] | None = None,
) -> list[set[str]]:
    """Up to ``count`` seeded samples of k units, pairwise within
    ``max_distance`` hops on the undirected graph.  Warns and returns fewer
    when fewer qualifying sets exist."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if count < 1:
        raise ValueError("count must be >= 1")
    nodes = sorted(g.nodes if eligible is None else (g.nodes & eligible))
    rng = random.Random(seed)
    if k == 1:
        sets = [{n} for n in nodes]
        if len(sets) < count:
            warnings.warn(f"only {len(sets)} candidate sets exist (asked for {count})")
            return sets
        return [set(s) for s in rng.sample(sets, count)]

    undirected: dict[str, set[str]] = {n: set() for n in g.nodes}
    for a, b in g.edges:
        if a != b:
            undirected[a].add(b)
            undirected[b].add(a)

    def within(node: str) -> set[str]:
        seen = {node}
        frontier = [node]
        for _ in range(max_distance):
            nxt = []
            for cur in frontier:
                for neighbor in undirected[cur]:
                    if neighbor not in seen:
                        seen.add(neighbor)
                        nxt.append(neighbor)
            frontier = nxt
        seen.discard(node)
        return seen

    near = {n: {m for m in within(n) if m in set(nodes) and not _nested_units(n, m)} for n in nodes}

    results: list[tuple[str, ...]] = []

    def extend(current: list[str], candidates: list[str]) -> None:
        if len(results) >= MAX_SET_ENUMERATION:
            return
        if len(current) == k:
            results.append(tuple(current))
            return
        for i, nxt in enumerate(candidates):
            extend(current + [nxt], [c for c in candidates[i + 1 :] if c in near[nxt]])

    for i, node in enumerate(nodes):
        extend([node], [m for m in nodes[i + 1 :] if m in near[node]])

    if len(results) < count:
        warnings.warn(f"only {len(results)} candidate sets exist (asked for {count})")
        return [set(r) for r in results]
    return [set(r) for r in rng.sample(results, count)]


# ---------------------------------------------------------------------------
# Validation, assembly, selection
# ---------------------------------------------------------------------------


def validate_task(
    repo: Repository,
    corruptions: list[Corruption],
    min_failing: int = 5,
    cap_seconds: float = 60.0,
    baseline_report: SuiteReport | None = None,
) -> tuple[bool, set[str], str | None]:
    """Apply corruptions to a fresh snapshot and check the failure threshold.

    Rejection is a value: (False, failing, reason) with reason in
    {"too_few_failures", "timeout", "crashed"}.
    """
    if baseline_report is None:
        baseline_report = baseline(repo, cap_seconds)
    snapshot = snapshot_repository(repo.root)
    try:
        apply_corruptions(snapshot, repo, corruptions)
        try:
            report = run_suite(snapshot, repo.test_command, cap_seconds)
        except RunnerCrash:
            return False, set(), "crashed"
    finally:
        shutil.rmtree(snapshot.parent, ignore_errors=True)
    if report.exit != "completed":
        return False, set(), report.exit
    failing = failing_diff(baseline_report, report)
    if len(failing) < min_failing:
        return False, failing, "too_few_failures"
    return True, failing, None


def compute_task_id(commit: str, corruptions: list[Corruption]) -> str:
    digest = hashlib.sha256()
    digest.update(commit.encode("utf-8"))
    for corruption in sorted(corruptions, key=lambda c: c.target):
        digest.update(b"\x00")
        digest.update(corruption.target.encode("utf-8"))
        digest.update(b"\x00")
        digest.update(corruption.corrupted_body.encode("utf-8"))
    return digest.hexdigest()[:16]


def metrics_payload(
    targets: list[str],
    records: list[MetricsRecord],
    normalized: list[NormalizedMetrics],
) -> dict:
    by_unit = {r.unit: r for r in records}
    norm_by_unit = {n.unit: n for n in normalized}
    payload = {}
    for target in targets:
        record = by_unit[target]
        norm = norm_by_unit[target]
        payload[target] = {
            "raw": {m: record.value(m) for m in METRIC_COLUMNS},
            "z": dict(norm.zscores),
            "pct": dict(norm.percentiles),
        }
    return payload


def make_task(
    repo: Repository,
    source: str,
    mode: str,
    corruptions: list[Corruption],
    failing_tests: set[str],
    records: list[MetricsRecord],
    normalized: list[NormalizedMetrics],
    seed: int,
) -> TaskInstance:
    return TaskInstance(
        task_id=compute_task_id(repo.commit, corruptions),
        repo_ref={"source": source, "commit": repo.commit},
        mode=mode,
        corruptions=list(corruptions),
        failing_tests=set(failing_tests),
        metrics=metrics_payload([c.target for c in corruptions], records, normalized),
        generator={"version": GENERATOR_VERSION, "seed": seed},
    )


def check_invariants(task: TaskInstance, graph: CallGraph | None = None, min_failing: int = 5, max_distance: int = 4) -> None:
    """Raise ValueError when a stored task violates its structural rules."""
    from .repo import chain_distance

    if len(task.corruptions) < 1:
        raise ValueError("task has no corruptions")
    if len(task.failing_tests) < min_failing:
        raise ValueError(f"task fails only {len(task.failing_tests)} tests (need {min_failing})")
    if task.mode == "remove":
        if len(task.corruptions) != 1 or task.corruptions[0].method != "deletion":
            raise ValueError("remove mode requires exactly one deletion corruption")
    elif task.mode == "discovery":
        if any(c.method != "adversarial" for c in task.corruptions):
            raise ValueError("discovery mode requires adversarial corruptions")
    else:
        raise ValueError(f"unknown mode: {task.mode}")
    if graph is not None and len(task.corruptions) >= 2:
        targets = task.targets
        for i, a in enumerate(targets):
            for b in targets[i + 1 :]:
                if chain_distance(graph, a, b) > max_distance:
                    raise ValueError(f"targets too far apart: {a}, {b}")


def select_hard_set(
    tasks: list[TaskInstance],
    complexity_metric: str = "cyclomatic",
    centrality_metric: str = "pagerank",
    pct: float = 0.90,
) -> list[TaskInstance]:
    """Tasks whose (max-over-targets) percentile is at or above ``pct`` on
    both chosen metrics."""
    selected = []
    for task in tasks:
        comp = max(task.metrics[t]["pct"][complexity_metric] for t in task.targets)
        cent = max(task.metrics[t]["pct"][centrality_metric] for t in task.targets)
        if comp >= pct and cent >= pct:
            selected.append(task)
    return selected


# ---------------------------------------------------------------------------
# Task persistence
# ---------------------------------------------------------------------------


def write_task(task: TaskInstance, path: Path) -> None:
    Path(path).write_text(json.dumps(task.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_task(path: Path) -> TaskInstance:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return TaskInstance(
        task_id=data["task_id"],
        repo_ref=data["repo_ref"],
        mode=data["mode"],
        corruptions=[
            Corruption(
                target=c["target"],
                method=c["method"],
                corrupted_body=c["corrupted_body"],
                original_digest=c["original_digest"],
            )
            for c in data["corruptions"]
        ],
        failing_tests=set(data["failing_tests"]),
        metrics=data["metrics"],
        generator=data["generator"],
    )


# ---------------------------------------------------------------------------
# Batch generation
# ---------------------------------------------------------------------------


def _eligible_targets(repo: Repository) -> list[str]:
    out = []
    for uid in sorted(repo.units):
        unit = repo.units[uid]
        if unit.kind in ("function", "method") and not is_test_path(unit.path) and unit.name != "__init__":
            out.append(uid)
    return out


def generate_deletion_tasks(
    repo: Repository,
    graph: CallGraph,
    source: str = "local",
    count: int = 10,
    min_failing: int = 5,
    cap_seconds: float = 60.0,
    seed: int = 0,
    targets: list[str] | None = None,
    jobs: int = 1,
) -> tuple[list[TaskInstance], dict[str, int]]:
    """Remove-mode tasks: one deleted function each, seeded target order.

    Returns (tasks, stats) where stats counts accepted tasks and rejections
    by reason.
    """
    records = compute_metrics(repo, graph)
    normalized = normalize(records)
    baseline_report = baseline(repo, cap_seconds)
    candidates = list(targets) if targets is not None else _eligible_targets(repo)
    rng = random.Random(seed)
    rng.shuffle(candidates)
    stats: dict[str, int] = {"accepted": 0}

    def attempt(target: str) -> tuple[TaskInstance | None, str]:
        try:
            corruption = delete_function(repo, target)
        except UnsupportedTarget:
            return None, "unsupported_target"
        accepted, failing, reason = validate_task(repo, [corruption], min_failing, cap_seconds, baseline_report)
        if not accepted:
            return None, reason or "rejected"
        return make_task(repo, source, "remove", [corruption], failing, records, normalized, seed), "accepted"

    tasks: list[TaskInstance] = []

    def take(result: tuple[TaskInstance | None, str]) -> None:
        task, reason = result
        stats[reason] = stats.get(reason, 0) + 1
        if task is not None and len(tasks) < count:
            tasks.append(task)

    if jobs <= 1:
        for target in candidates:
            if len(tasks) >= count:
                break
            take(attempt(target))
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for result in pool.map(attempt, candidates):
                take(result)
                if len(tasks) >= count:
                    break
    if not tasks:
        raise NoTasksGenerated(f"no deletion task met the failure threshold: {stats}")
    return tasks[:count], stats


def generate_adversarial_tasks(
    repo: Repository,
    graph: CallGraph,
    client: CorruptionClient,
    source: str = "local",
    count: int = 5,
    k: int = 1,
    min_failing: int = 5,
    max_distance: int = 4,
    cap_seconds: float = 60.0,
    seed: int = 0,
    test_budget: int = 5,
) -> tuple[list[TaskInstance], dict[str, int]]:
    """Discovery-mode tasks: k adversarial corruptions per task, targets
    pairwise within ``max_distance`` hops.  Returns (tasks, stats)."""
    records = compute_metrics(repo, graph)
    normalized = normalize(records)
    baseline_report = baseline(repo, cap_seconds)
    eligible = set(_eligible_targets(repo))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        target_sets = select_multifunction_sets(
            graph, k, max_distance, count=max(count * 4, count), seed=seed, eligible=eligible
        )
    tasks: list[TaskInstance] = []
    stats: dict[str, int] = {"accepted": 0}
    for target_set in target_sets:
        if len(tasks) >= count:
            break
        corruptions = []
        try:
            for target in sorted(target_set):
                corruptions.append(
                    adversarial_corrupt(
                        repo,
                        target,
                        client,
                        test_budget=test_budget,
                        baseline_report=baseline_report,
                        cap_seconds=cap_seconds,
                    )
                )
        except NoValidCorruption:
            stats["no_valid_corruption"] = stats.get("no_valid_corruption", 0) + 1
            continue
        accepted, failing, reason = validate_task(repo, corruptions, min_failing, cap_seconds, baseline_report)
        if not accepted:
            key = reason or "rejected"
            stats[key] = stats.get(key, 0) + 1
            continue
        stats["accepted"] += 1
        tasks.append(make_task(repo, source, "discovery", corruptions, failing, records, normalized, seed))
    if not tasks:
        raise NoTasksGenerated(f"no adversarial task met the failure threshold: {stats}")
    return tasks, stats
