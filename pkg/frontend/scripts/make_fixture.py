#!/usr/bin/env python3
"""Build the task fixtures the solve-ui end-to-end tests serve.

Generates one remove-mode and one discovery-mode task from the bundled
calculator fixture repo, writes them into <outdir>/tasks, and records the
ground-truth targets and original bodies in <outdir>/solutions.json.  The
solutions file is test-side knowledge only; the HTTP service never exposes
it.  Idempotent: a populated outdir is left untouched.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from repairbench.corruption import make_client
from repairbench.repo import build_call_graph, ingest_repository
from repairbench.taskgen import generate_adversarial_tasks, generate_deletion_tasks, write_task

TEST_COMMAND = "python3 -m pytest -q --junitxml={report}"
REMOVE_SEED = 11
DISCOVERY_SEED = 5


def main(argv: list[str]) -> int:
    if len(argv) != 2:
        print("usage: make_fixture.py <outdir>", file=sys.stderr)
        return 2
    out_dir = Path(argv[1])
    solutions_path = out_dir / "solutions.json"
    if solutions_path.exists():
        print(f"fixture already present at {out_dir}")
        return 0

    repo_root = Path(__file__).resolve().parents[2] / "tests" / "fixtures" / "calcrepo"
    repo = ingest_repository(str(repo_root), TEST_COMMAND, commit="ui-fixture-v1")
    graph = build_call_graph(repo)

    remove_tasks, _ = generate_deletion_tasks(
        repo,
        graph,
        source="calcrepo",
        count=1,
        min_failing=5,
        cap_seconds=60.0,
        seed=REMOVE_SEED,
        jobs=1,
    )
    client = make_client("heuristic", seed=DISCOVERY_SEED)
    discovery_tasks, _ = generate_adversarial_tasks(
        repo,
        graph,
        client,
        source="calcrepo",
        count=1,
        k=1,
        min_failing=2,
        max_distance=4,
        cap_seconds=60.0,
        seed=DISCOVERY_SEED,
        test_budget=4,
    )
    if not remove_tasks or not discovery_tasks:
        print("fixture generation produced no tasks", file=sys.stderr)
        return 1

    tasks_dir = out_dir / "tasks"
    tasks_dir.mkdir(parents=True, exist_ok=True)
    solutions = {}
    for label, task in (("remove", remove_tasks[0]), ("discovery", discovery_tasks[0])):
        write_task(task, tasks_dir / f"{task.task_id}.json")
        corruption = task.corruptions[0]
        solutions[label] = {
            "task_id": task.task_id,
            "target": corruption.target,
            "original": repo.units[corruption.target].source,
            "corrupted_body": corruption.corrupted_body,
            "failing_tests": sorted(task.failing_tests),
        }
    solutions_path.write_text(json.dumps(solutions, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"fixture written to {out_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main(sys.argv))
