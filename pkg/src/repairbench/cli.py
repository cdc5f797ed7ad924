"""Command-line pipeline: ingest -> generate -> validate -> evaluate -> report.

Exit codes: 0 success, 2 validation or configuration failure, 3 baseline
failure, 4 corruption/agent client failure.  All randomness flows from the
single --seed; with a deterministic client, rerunning a command reproduces
its outputs byte for byte (trajectory timestamps are logical unless
--wall-clock is given).
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

from . import analysis, plots
from .agents import make_agent
from .corruption import make_client
from .errors import (
    BaselineFailed,
    ClientFailure,
    NoResults,
    RepairBenchError,
    TooFewRecords,
    UnknownAgent,
)
from .evalcore import BudgetConfig, LogicalClock, WallClock, read_trajectory, run_agent, write_trajectory
from .harness import baseline
from .metrics import (
    compute_metrics,
    correlation_matrix,
    normalize,
    write_correlations_csv,
    write_metrics_csv,
)
from .repo import build_call_graph, ingest_repository, write_snapshot
from .service import TaskStore, create_app
from .taskgen import (
    check_invariants,
    generate_adversarial_tasks,
    generate_deletion_tasks,
    read_task,
    select_hard_set,
    validate_task,
    write_task,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BASELINE = 3
EXIT_CLIENT = 4


@dataclass
class PipelineConfig:
    repo_root: str = "."
    test_command: str = "python3 -m pytest -q --junitxml={report}"
    output_dir: str = "out"
    mode: str = "remove"
    corruption_client: str = "heuristic"
    agent: str = "oracle"
    budget_preset: str = "default"
    count: int = 10
    min_failing: int = 5
    cap_seconds: float = 60.0
    test_budget: int = 5
    k: int = 1
    max_distance: int = 4
    hard_pct: float = 0.90
    seed: int = 0
    jobs: int = 1
    normalize_timestamps: bool = True
    commit: str = "unversioned"
    source: str = "local"


def load_config(path: str | None) -> PipelineConfig:
    config = PipelineConfig()
    if path is None:
        return config
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith((".yaml", ".yml")):
        import yaml

        data = yaml.safe_load(text) or {}
    else:
        data = json.loads(text)
    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for key, value in data.items():
        setattr(config, key, value)
    return config


def _apply_overrides(config: PipelineConfig, args: argparse.Namespace) -> PipelineConfig:
    mapping = {
        "repo": "repo_root",
        "test_command": "test_command",
        "out": "output_dir",
        "mode": "mode",
        "client": "corruption_client",
        "agent": "agent",
        "budget": "budget_preset",
        "count": "count",
        "min_failing": "min_failing",
        "cap": "cap_seconds",
        "test_budget": "test_budget",
        "k": "k",
        "max_distance": "max_distance",
        "hard_pct": "hard_pct",
        "seed": "seed",
        "jobs": "jobs",
        "commit": "commit",
        "source": "source",
    }
    for arg_name, field_name in mapping.items():
        value = getattr(args, arg_name, None)
        if value is not None:
            setattr(config, field_name, value)
    if getattr(args, "wall_clock", False):
        config.normalize_timestamps = False
    return config


def _ingest(config: PipelineConfig):
    repo = ingest_repository(config.repo_root, config.test_command, commit=config.commit)
    graph = build_call_graph(repo)
    return repo, graph


def _write_metrics_outputs(repo, graph, out_dir: Path) -> None:
    records = compute_metrics(repo, graph)
    try:
        normalized = normalize(records)
        write_metrics_csv(records, normalized, out_dir / "metrics.csv")
    except TooFewRecords:
        pass
    try:
        names, matrix = correlation_matrix(records)
        write_correlations_csv(names, matrix, out_dir / "correlations.csv")
    except TooFewRecords:
        pass


def cmd_ingest(args: argparse.Namespace) -> int:
    config = _apply_overrides(load_config(args.config), args)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    repo, graph = _ingest(config)
    write_snapshot(repo, graph, out_dir / "repo.snapshot.json")
    _write_metrics_outputs(repo, graph, out_dir)
    print(f"ingested {len(repo.units)} units, {len(graph.edges)} call edges -> {out_dir}")
    return EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    config = _apply_overrides(load_config(args.config), args)
    out_dir = Path(config.output_dir)
    tasks_dir = out_dir / "tasks"
    tasks_dir.mkdir(parents=True, exist_ok=True)
    repo, graph = _ingest(config)
    write_snapshot(repo, graph, out_dir / "repo.snapshot.json")
    _write_metrics_outputs(repo, graph, out_dir)
    if config.mode == "remove":
        tasks, stats = generate_deletion_tasks(
            repo,
            graph,
            source=config.source,
            count=config.count,
            min_failing=config.min_failing,
            cap_seconds=config.cap_seconds,
            seed=config.seed,
            jobs=config.jobs,
        )
    else:
        client = make_client(config.corruption_client, seed=config.seed)
        tasks, stats = generate_adversarial_tasks(
            repo,
            graph,
            client,
            source=config.source,
            count=config.count,
            k=config.k,
            min_failing=config.min_failing,
            max_distance=config.max_distance,
            cap_seconds=config.cap_seconds,
            seed=config.seed,
            test_budget=config.test_budget,
        )
    for task in tasks:
        write_task(task, tasks_dir / f"{task.task_id}.json")
    report = {"mode": config.mode, "seed": config.seed, "requested": config.count, "stats": stats}
    (out_dir / "generation_report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"generated {len(tasks)} task(s) -> {tasks_dir}")
    return EXIT_OK


def _load_tasks(tasks_dir: Path) -> dict:
    tasks = {}
    for path in sorted(Path(tasks_dir).glob("*.json")):
        task = read_task(path)
        tasks[task.task_id] = task
    return tasks


def cmd_validate(args: argparse.Namespace) -> int:
    config = _apply_overrides(load_config(args.config), args)
    tasks = _load_tasks(Path(args.tasks))
    if not tasks:
        print("no tasks found", file=sys.stderr)
        return EXIT_VALIDATION
    repo, graph = _ingest(config)
    baseline_report = baseline(repo, config.cap_seconds)
    failures = 0
    for task_id in sorted(tasks):
        task = tasks[task_id]
        try:
            check_invariants(task, graph, min_failing=config.min_failing, max_distance=config.max_distance)
        except ValueError as exc:
            print(f"{task_id} FAIL invariants: {exc}")
            failures += 1
            continue
        accepted, failing, reason = validate_task(
            repo, task.corruptions, config.min_failing, config.cap_seconds, baseline_report
        )
        if not accepted:
            print(f"{task_id} FAIL revalidation: {reason}")
            failures += 1
        elif failing != task.failing_tests:
            print(f"{task_id} FAIL failing-set drift: {sorted(failing ^ task.failing_tests)}")
            failures += 1
        else:
            print(f"{task_id} OK ({len(failing)} failing tests)")
    return EXIT_VALIDATION if failures else EXIT_OK


def _label_slug(label: str) -> str:
    return label.replace(":", "-").replace("/", "-")


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _apply_overrides(load_config(args.config), args)
    tasks = _load_tasks(Path(args.tasks))
    if not tasks:
        print("no tasks found", file=sys.stderr)
        return EXIT_VALIDATION
    out_dir = Path(args.out or config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    repo, _ = _ingest(config)
    baseline_report = baseline(repo, config.cap_seconds)
    budget = BudgetConfig.from_preset(config.budget_preset)
    label = config.agent
    slug = _label_slug(label)
    selected = [t for t in sorted(tasks) if not args.task_filter or args.task_filter in t]

    def run_one(task_id: str) -> str:
        path = out_dir / f"trajectory-{task_id}-{slug}.jsonl"
        if path.exists():
            return f"{task_id} skipped (exists)"
        task = tasks[task_id]
        agent = make_agent(label, task, repo)
        clock = LogicalClock() if config.normalize_timestamps else WallClock()
        trajectory = run_agent(
            task,
            budget,
            agent,
            repo,
            baseline_report,
            cap_seconds=config.cap_seconds,
            clock=clock,
            session_id=f"{task_id}-{slug}",
        )
        trajectory.label = label
        write_trajectory(trajectory, path)
        return f"{task_id} score={trajectory.score} attempts={trajectory.used_attempts}"

    if config.jobs <= 1:
        for task_id in selected:
            print(run_one(task_id))
    else:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            for line in pool.map(run_one, selected):
                print(line)
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    config = _apply_overrides(load_config(args.config), args)
    tasks = _load_tasks(Path(args.tasks))
    if not tasks:
        print("no tasks found", file=sys.stderr)
        return EXIT_VALIDATION
    repo, _ = _ingest(config)
    store = TaskStore(repo, list(tasks.values()), cap_seconds=config.cap_seconds)
    app = create_app(
        store,
        trajectory_dir=Path(config.output_dir) / "trajectories",
        wall_clock=not config.normalize_timestamps,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    config = _apply_overrides(load_config(args.config), args)
    tasks = _load_tasks(Path(args.tasks))
    trajectory_paths = sorted(Path(args.trajectories).glob("*.jsonl"))
    if not trajectory_paths:
        raise NoResults(f"no trajectories under {args.trajectories}")
    trajectories = [read_trajectory(p) for p in trajectory_paths]
    if args.hard_set:
        hard_ids = {t.task_id for t in select_hard_set(list(tasks.values()), pct=config.hard_pct)}
        tasks = {tid: t for tid, t in tasks.items() if tid in hard_ids}
        trajectories = [t for t in trajectories if t.task_id in hard_ids]
        if not trajectories:
            raise NoResults("hard-set filter left no trajectories")
    rows = analysis.collect_results(tasks, trajectories)
    if not rows:
        raise NoResults("no trajectory matches a stored task")
    out_dir = Path(args.out or config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    analysis.write_results_csv(rows, out_dir / "results.csv")

    predictors = ["z_loc", "z_harmonic"]
    fit = None
    try:
        fit = analysis.fit_logistic(rows, predictors)
        analysis.write_fit_json(fit, out_dir / "fit.json")
    except RepairBenchError as exc:
        payload = {"error": f"{type(exc).__name__}: {exc}", "predictors": predictors}
        (out_dir / "fit.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    curve = analysis.passn_curve(trajectories)
    analysis.write_passn_csv(curve, out_dir / "passn.csv")
    plots.render_passn(curve, out_dir / "passn.png")

    telemetry = analysis.telemetry_summary(trajectories)
    analysis.write_telemetry_csv(telemetry, out_dir / "telemetry.csv")
    plots.render_telemetry(telemetry, out_dir / "telemetry.png")

    if fit is not None:
        grid = analysis.difficulty_grid(rows, "z_loc", "z_harmonic", bins=6, fit=fit)
        analysis.write_grid_csv(grid, out_dir / "grid.csv")
        plots.render_grid(grid, out_dir / "grid.png")
    print(f"report written -> {out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="repairbench", description="Function-repair benchmark pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON or YAML config file")
        p.add_argument("--repo", help="repository root")
        p.add_argument("--test-command", dest="test_command", help="suite command with {report} slot")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--jobs", type=int)
        p.add_argument("--cap", type=float, help="suite wall-clock cap in seconds")
        p.add_argument("--min-failing", dest="min_failing", type=int)
        p.add_argument("--commit")
        p.add_argument("--source")
        p.add_argument("--wall-clock", dest="wall_clock", action="store_true", help="real timestamps in trajectories")

    p_ingest = sub.add_parser("ingest", help="parse a repository and write its snapshot and metrics")
    common(p_ingest)
    p_ingest.set_defaults(func=cmd_ingest)

    p_generate = sub.add_parser("generate", help="generate and validate benchmark tasks")
    common(p_generate)
    p_generate.add_argument("--mode", choices=["remove", "discovery"])
    p_generate.add_argument("--count", type=int)
    p_generate.add_argument("--client", help="corruption client: heuristic | replay:<path> | http")
    p_generate.add_argument("--k", type=int, help="corruptions per task (discovery)")
    p_generate.add_argument("--max-distance", dest="max_distance", type=int)
    p_generate.add_argument("--test-budget", dest="test_budget", type=int)
    p_generate.set_defaults(func=cmd_generate)

    p_validate = sub.add_parser("validate", help="re-validate stored tasks against the suite")
    common(p_validate)
    p_validate.add_argument("--tasks", required=True, help="directory of task.json files")
    p_validate.add_argument("--max-distance", dest="max_distance", type=int)
    p_validate.set_defaults(func=cmd_validate)

    p_evaluate = sub.add_parser("evaluate", help="run an agent over stored tasks")
    common(p_evaluate)
    p_evaluate.add_argument("--tasks", required=True)
    p_evaluate.add_argument("--agent", help="oracle | null | scripted:<path> | replay:<path> | capacity:<m> | http")
    p_evaluate.add_argument("--budget", help="budget preset: xs | small | default | xl")
    p_evaluate.add_argument("--task-filter", dest="task_filter", help="substring filter on task ids")
    p_evaluate.set_defaults(func=cmd_evaluate)

    p_serve = sub.add_parser("serve", help="serve sessions over HTTP")
    common(p_serve)
    p_serve.add_argument("--tasks", required=True)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8777)
    p_serve.set_defaults(func=cmd_serve)

    p_report = sub.add_parser("report", help="aggregate trajectories into tables and figures")
    common(p_report)
    p_report.add_argument("--tasks", required=True)
    p_report.add_argument("--trajectories", required=True)
    p_report.add_argument("--hard-set", dest="hard_set", action="store_true", help="restrict to the hard subset")
    p_report.add_argument("--hard-pct", dest="hard_pct", type=float)
    p_report.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BaselineFailed as exc:
        print(f"baseline failure: {exc}", file=sys.stderr)
        return EXIT_BASELINE
    except (ClientFailure, UnknownAgent) as exc:
        print(f"client failure: {exc}", file=sys.stderr)
        return EXIT_CLIENT
    except (RepairBenchError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
