"""Sandboxed test-suite execution with per-test results and baseline diffs.

Suites run in a disposable copy of the repository, never the original tree.
The runner is asked to emit a machine-readable JUnit XML report; the command
template carries a ``{report}`` slot for its path (commands without the slot
get ``--junitxml=<path>`` appended, which suits pytest).  The whole process
group is killed when the wall-clock cap expires.
"""

from __future__ import annotations

import os
import shutil
import signal
import subprocess
import tempfile
import time
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

from .errors import BaselineFailed, RunnerCrash, SnapshotFailure
from .repo import Repository

SNAPSHOT_IGNORE = ("__pycache__", ".pytest_cache", ".git", "*.pyc", ".hypothesis")


@dataclass(frozen=True)
class TestOutcome:
    __test__ = False  # keep pytest from collecting this as a test class

    test_id: str
    status: str  # pass | fail | error | skipped
    duration: float = 0.0


@dataclass
class SuiteReport:
    outcomes: list[TestOutcome] = field(default_factory=list)
    wall_clock: float = 0.0
    exit: str = "completed"  # completed | timeout | crashed

    def status_map(self) -> dict[str, str]:
        return {o.test_id: o.status for o in self.outcomes}

    def passing_ids(self) -> set[str]:
        return {o.test_id for o in self.outcomes if o.status == "pass"}


def snapshot_repository(root: Path, dest: Path | None = None) -> Path:
    """Copy the repository into a disposable directory and return its path."""
    root = Path(root)
    if not root.is_dir():
        raise SnapshotFailure(f"not a directory: {root}")
    if dest is None:
        dest = Path(tempfile.mkdtemp(prefix="rb-snap-")) / root.name
    try:
        shutil.copytree(root, dest, ignore=shutil.ignore_patterns(*SNAPSHOT_IGNORE))
    except OSError as exc:
        raise SnapshotFailure(str(exc)) from exc
    return dest


def _parse_junit(report_path: Path) -> list[TestOutcome]:
    tree = ET.parse(report_path)
    root = tree.getroot()
    outcomes = []
    for case in root.iter("testcase"):
        classname = case.get("classname") or ""
        name = case.get("name") or ""
        test_id = f"{classname}::{name}" if classname else name
        if not test_id:
            continue
        status = "pass"
        for child in case:
            if child.tag == "failure":
                status = "fail"
                break
            if child.tag == "error":
                status = "error"
                break
            if child.tag == "skipped":
                status = "skipped"
                break
        duration = float(case.get("time") or 0.0)
        outcomes.append(TestOutcome(test_id=test_id, status=status, duration=max(duration, 0.0)))
    return outcomes


def run_suite(
    repo_snapshot: Path,
    test_command: str,
    cap_seconds: float = 60.0,
    env_overrides: dict[str, str] | None = None,
) -> SuiteReport:
    """Run the suite inside ``repo_snapshot`` and parse per-test outcomes.

    Kills the child process group at ``cap_seconds`` (exit=timeout).  A run
    that leaves no parseable report and a nonzero exit status raises
    RunnerCrash.
    """
    repo_snapshot = Path(repo_snapshot)
    report_dir = Path(tempfile.mkdtemp(prefix="rb-report-"))
    report_path = report_dir / "report.xml"
    if "{report}" in test_command:
        command = test_command.replace("{report}", str(report_path))
    else:
        command = f"{test_command} --junitxml={report_path}"
    env = dict(os.environ)
    # sessions edit source in place between runs; cached bytecode keyed on
    # (mtime seconds, size) survives same-size edits within one second, so
    # the sandbox must never write .pyc files
    env["PYTHONDONTWRITEBYTECODE"] = "1"
    if env_overrides:
        env.update(env_overrides)
    started = time.monotonic()
    proc = subprocess.Popen(
        command,
        shell=True,
        cwd=repo_snapshot,
        env=env,
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        start_new_session=True,
    )
    timed_out = False
    try:
        _, stderr = proc.communicate(timeout=cap_seconds)
    except subprocess.TimeoutExpired:
        timed_out = True
        try:
            os.killpg(os.getpgid(proc.pid), signal.SIGKILL)
        except ProcessLookupError:
            pass
        _, stderr = proc.communicate()
    wall_clock = time.monotonic() - started

    outcomes: list[TestOutcome] = []
    parsed = False
    if report_path.exists():
        try:
            outcomes = _parse_junit(report_path)
            parsed = True
        except ET.ParseError:
            parsed = False
    shutil.rmtree(report_dir, ignore_errors=True)

    if timed_out:
        return SuiteReport(outcomes=outcomes, wall_clock=wall_clock, exit="timeout")
    if not parsed:
        tail = (stderr or b"").decode("utf-8", "replace")[-2000:]
        raise RunnerCrash(f"no parseable report (exit status {proc.returncode}): {tail}")
    return SuiteReport(outcomes=outcomes, wall_clock=wall_clock, exit="completed")


def baseline(repo: Repository, cap_seconds: float = 60.0, env_overrides: dict[str, str] | None = None) -> SuiteReport:
    """Run the pristine suite; every non-skipped test must pass within the cap."""
    snapshot = snapshot_repository(repo.root)
    try:
        try:
            report = run_suite(snapshot, repo.test_command, cap_seconds, env_overrides)
        except RunnerCrash as exc:
            raise BaselineFailed(f"baseline run crashed: {exc}", reason=f"crashed: {exc}") from exc
        if report.exit != "completed":
            raise BaselineFailed(f"baseline run ended with {report.exit}", reason=report.exit)
        failing = sorted(o.test_id for o in report.outcomes if o.status in ("fail", "error"))
        if failing:
            raise BaselineFailed(f"{len(failing)} tests failing before corruption", failing, reason="failing_tests")
        if not report.outcomes:
            raise BaselineFailed("suite collected no tests", reason="no_tests_collected")
        return report
    finally:
        shutil.rmtree(snapshot.parent, ignore_errors=True)


def failing_diff(baseline_report: SuiteReport, after: SuiteReport) -> set[str]:
    """Tests passing in the baseline that fail, error, or vanish afterwards."""
    after_status = after.status_map()
    failing = set()
    for test_id in baseline_report.passing_ids():
        status = after_status.get(test_id)
        if status is None or status in ("fail", "error"):
            failing.add(test_id)
    return failing
