import shutil
import sys
import time

import pytest

from conftest import TEST_COMMAND
from repairbench.errors import BaselineFailed, RunnerCrash, SnapshotFailure
from repairbench.harness import (
    SuiteReport,
    TestOutcome,
    baseline,
    failing_diff,
    run_suite,
    snapshot_repository,
)
from repairbench.repo import ingest_repository


def _mini_repo(tmp_path, test_body):
    (tmp_path / "mod.py").write_text("def double(x):\n    return 2 * x\n")
    tests = tmp_path / "tests"
    tests.mkdir()
    (tests / "test_mod.py").write_text(test_body)
    return tmp_path


def test_run_suite_collects_per_test_outcomes(tmp_path, calcrepo):
    snap = snapshot_repository(calcrepo.root)
    try:
        report = run_suite(snap, TEST_COMMAND)
        assert report.exit == "completed"
        assert len(report.outcomes) == 76
        assert report.passing_ids() == {o.test_id for o in report.outcomes}
        sample = next(iter(report.passing_ids()))
        assert "::" in sample
    finally:
        shutil.rmtree(snap.parent, ignore_errors=True)


def test_run_suite_appends_report_flag_when_no_slot(tmp_path):
    root = _mini_repo(
        tmp_path,
        "from mod import double\n\ndef test_double():\n    assert double(2) == 4\n",
    )
    report = run_suite(root, f"{sys.executable} -m pytest -q")
    assert report.exit == "completed"
    assert len(report.outcomes) == 1


def test_run_suite_mixed_statuses(tmp_path):
    root = _mini_repo(
        tmp_path,
        "import pytest\n"
        "from mod import double\n\n"
        "def test_ok():\n    assert double(1) == 2\n\n"
        "def test_bad():\n    assert double(1) == 3\n\n"
        "def test_err():\n    raise RuntimeError('boom')\n\n"
        "@pytest.mark.skip\ndef test_skipped():\n    pass\n",
    )
    report = run_suite(root, TEST_COMMAND)
    status = report.status_map()
    by_suffix = {k.rsplit("::", 1)[-1]: v for k, v in status.items()}
    assert by_suffix["test_ok"] == "pass"
    assert by_suffix["test_bad"] == "fail"
    assert by_suffix["test_err"] in ("fail", "error")
    assert by_suffix["test_skipped"] == "skipped"


def test_run_suite_timeout_kills_process_group(tmp_path):
    root = _mini_repo(
        tmp_path,
        "import time\n\ndef test_hangs():\n    time.sleep(60)\n",
    )
    started = time.monotonic()
    report = run_suite(root, TEST_COMMAND, cap_seconds=1.5)
    elapsed = time.monotonic() - started
    assert report.exit == "timeout"
    assert elapsed < 20


def test_run_suite_crash_raises_with_stderr_tail(tmp_path):
    root = _mini_repo(tmp_path, "def test_ok():\n    pass\n")
    with pytest.raises(RunnerCrash) as exc:
        run_suite(root, f"{sys.executable} -c 'import sys; sys.stderr.write(\"kaput\"); sys.exit(3)'")
    assert "kaput" in str(exc.value)


def test_snapshot_rejects_missing_dir(tmp_path):
    with pytest.raises(SnapshotFailure):
        snapshot_repository(tmp_path / "absent")


def test_snapshot_skips_caches(tmp_path):
    root = _mini_repo(tmp_path, "def test_ok():\n    pass\n")
    cache = root / "__pycache__"
    cache.mkdir()
    (cache / "junk.pyc").write_text("x")
    snap = snapshot_repository(root)
    try:
        assert not (snap / "__pycache__").exists()
    finally:
        shutil.rmtree(snap.parent, ignore_errors=True)


def test_baseline_green_repo(calc_baseline):
    assert calc_baseline.exit == "completed"
    assert len(calc_baseline.passing_ids()) == 76


def test_baseline_red_repo_raises(tmp_path):
    root = _mini_repo(
        tmp_path,
        "from mod import double\n\ndef test_wrong():\n    assert double(2) == 5\n",
    )
    repo = ingest_repository(root, TEST_COMMAND)
    with pytest.raises(BaselineFailed) as exc:
        baseline(repo)
    assert exc.value.reason == "failing_tests"
    assert len(exc.value.failing) == 1


def test_baseline_empty_suite_raises(tmp_path):
    (tmp_path / "mod.py").write_text("def f():\n    return 1\n")
    tests = tmp_path / "tests"
    tests.mkdir()
    (tests / "test_mod.py").write_text("")
    repo = ingest_repository(tmp_path, TEST_COMMAND)
    with pytest.raises(BaselineFailed) as exc:
        baseline(repo)
    assert exc.value.reason == "no_tests_collected"


def test_baseline_timeout_reason(tmp_path):
    root = _mini_repo(tmp_path, "import time\n\ndef test_slow():\n    time.sleep(60)\n")
    repo = ingest_repository(root, TEST_COMMAND)
    with pytest.raises(BaselineFailed) as exc:
        baseline(repo, cap_seconds=1.5)
    assert exc.value.reason == "timeout"


def test_failing_diff_counts_fail_error_and_vanished():
    before = SuiteReport(
        outcomes=[
            TestOutcome("t::a", "pass"),
            TestOutcome("t::b", "pass"),
            TestOutcome("t::c", "pass"),
            TestOutcome("t::d", "pass"),
            TestOutcome("t::e", "skipped"),
        ]
    )
    after = SuiteReport(
        outcomes=[
            TestOutcome("t::a", "pass"),
            TestOutcome("t::b", "fail"),
            TestOutcome("t::c", "error"),
            # t::d vanished (collection error)
            TestOutcome("t::e", "fail"),  # was skipped at baseline: not counted
        ]
    )
    assert failing_diff(before, after) == {"t::b", "t::c", "t::d"}


def test_failing_diff_empty_when_identical(calc_baseline):
    assert failing_diff(calc_baseline, calc_baseline) == set()


def test_env_overrides_reach_the_suite(tmp_path):
    root = _mini_repo(
        tmp_path,
        "import os\n\ndef test_env():\n    assert os.environ.get('RB_PROBE') == 'yes'\n",
    )
    report = run_suite(root, TEST_COMMAND, env_overrides={"RB_PROBE": "yes"})
    assert report.exit == "completed"
    assert report.passing_ids()
