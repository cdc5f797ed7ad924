import math

import pytest

from conftest import TEST_COMMAND, as_callgraph
from repairbench.corruption import ScriptedCorruptionClient
from repairbench.errors import (
    NoTasksGenerated,
    NoValidCorruption,
    UnknownUnit,
    UnsupportedTarget,
)
from repairbench.harness import snapshot_repository
from repairbench.repo import ingest_repository
from repairbench.taskgen import (
    PLACEHOLDER,
    Corruption,
    TaskInstance,
    adversarial_corrupt,
    apply_corruptions,
    candidate_to_corruption,
    check_invariants,
    compute_task_id,
    delete_function,
    generate_deletion_tasks,
    read_task,
    restore_originals,
    select_hard_set,
    select_multifunction_sets,
    validate_task,
    write_task,
)

import shutil


# ---------------------------------------------------------------------------
# Deletion corruption
# ---------------------------------------------------------------------------


def test_delete_keeps_signature_and_docstring_bytes(calcrepo):
    target = "calckit/checksum.py::checksum"
    unit = calcrepo.units[target]
    corruption = delete_function(calcrepo, target)
    assert corruption.method == "deletion"
    assert corruption.corrupted_body.startswith(unit.signature + unit.docstring)
    assert PLACEHOLDER in corruption.corrupted_body
    assert corruption.original_digest == unit.digest()
    # implementation really is gone
    assert "acc" not in corruption.corrupted_body


def test_delete_method_unit(calcrepo):
    corruption = delete_function(calcrepo, "calckit/ledger.py::Ledger.balance")
    lines = [l for l in corruption.corrupted_body.splitlines() if l.strip()]
    assert lines[-1].strip() == PLACEHOLDER
    assert lines[-1].startswith("        ")  # method body indentation


def test_delete_inline_function(tmp_path):
    (tmp_path / "m.py").write_text("def f(): return 1\n\ndef g():\n    return f()\n")
    repo = ingest_repository(tmp_path, TEST_COMMAND)
    corruption = delete_function(repo, "m.py::f")
    assert corruption.corrupted_body == f"def f(): {PLACEHOLDER}\n"


def test_delete_rejects_class_unit(calcrepo):
    with pytest.raises(UnsupportedTarget):
        delete_function(calcrepo, "calckit/ledger.py::Ledger")


def test_delete_unknown_unit(calcrepo):
    with pytest.raises(UnknownUnit):
        delete_function(calcrepo, "calckit/vectors.py::missing")


# ---------------------------------------------------------------------------
# Adversarial candidates
# ---------------------------------------------------------------------------


def test_candidate_splice_preserves_header_bytes(calcrepo):
    target = "calckit/vectors.py::normalize"
    unit = calcrepo.units[target]
    candidate = (
        "def normalize(v):\n"
        "    n = norm(v)\n"
        "    if n == 0:\n"
        "        raise ValueError('cannot normalize a zero vector')\n"
        "    return [x * n for x in v]\n"
    )
    corruption, reason = candidate_to_corruption(calcrepo, target, candidate)
    assert reason is None
    assert corruption.corrupted_body.startswith(unit.signature + unit.docstring)
    assert "x * n" in corruption.corrupted_body


def test_candidate_rejected_on_signature_change(calcrepo):
    target = "calckit/vectors.py::dot"
    candidate = "def dot(a, b, scale=1):\n    return 0\n"
    corruption, reason = candidate_to_corruption(calcrepo, target, candidate)
    assert corruption is None
    assert reason == "signature changed"


def test_candidate_rejected_on_parse_failure(calcrepo):
    corruption, reason = candidate_to_corruption(
        calcrepo, "calckit/vectors.py::dot", "def dot(a, b)\n    return 0\n"
    )
    assert corruption is None
    assert reason == "candidate does not parse"


def test_candidate_rejected_when_identical(calcrepo):
    target = "calckit/vectors.py::dot"
    from repairbench.repo import dedent_unit

    corruption, reason = candidate_to_corruption(
        calcrepo, target, dedent_unit(calcrepo.units[target].source)
    )
    assert corruption is None
    assert reason == "candidate is identical to the original"


def test_candidate_reindents_method_bodies(calcrepo):
    target = "calckit/ledger.py::Ledger.balance"
    candidate = "def balance(self):\n    return 0\n"
    corruption, reason = candidate_to_corruption(calcrepo, target, candidate)
    assert reason is None
    assert "        return 0" in corruption.corrupted_body


def test_adversarial_accepts_first_breaking_candidate(calcrepo, calc_baseline):
    bad = "def dot(a, b):\n    return sum(x + y for x, y in zip(a, b))\n"
    client = ScriptedCorruptionClient([bad])
    corruption = adversarial_corrupt(
        calcrepo,
        "calckit/vectors.py::dot",
        client,
        baseline_report=calc_baseline,
    )
    assert corruption.method == "adversarial"
    assert "x + y" in corruption.corrupted_body


def test_adversarial_retries_then_gives_up(calcrepo, calc_baseline):
    # candidate 1: changes nothing observable; client then runs dry
    harmless = "def dot(a, b):\n    result = sum(x * y for x, y in zip(a, b))\n    return result\n"
    client = ScriptedCorruptionClient([harmless])
    with pytest.raises(NoValidCorruption):
        adversarial_corrupt(
            calcrepo,
            "calckit/vectors.py::dot",
            client,
            test_budget=2,
            max_tool_calls=3,
            baseline_report=calc_baseline,
        )


def test_adversarial_counts_static_rejections_against_proposals(calcrepo, calc_baseline):
    broken = "def dot(a, b:\n    pass\n"
    client = ScriptedCorruptionClient([broken, broken, broken])
    with pytest.raises(NoValidCorruption):
        adversarial_corrupt(
            calcrepo,
            "calckit/vectors.py::dot",
            client,
            test_budget=5,
            max_tool_calls=3,
            baseline_report=calc_baseline,
        )
    assert client.calls == 3


# ---------------------------------------------------------------------------
# Apply / restore
# ---------------------------------------------------------------------------


def test_apply_then_restore_roundtrips_bytes(calcrepo):
    targets = ["calckit/vectors.py::dot", "calckit/vectors.py::normalize"]
    corruptions = [delete_function(calcrepo, t) for t in targets]
    snap = snapshot_repository(calcrepo.root)
    try:
        original = (snap / "calckit/vectors.py").read_text()
        apply_corruptions(snap, calcrepo, corruptions)
        mutated = (snap / "calckit/vectors.py").read_text()
        assert mutated != original
        assert mutated.count(PLACEHOLDER) == 2
        restore_originals(snap, calcrepo, corruptions)
        assert (snap / "calckit/vectors.py").read_text() == original
    finally:
        shutil.rmtree(snap.parent, ignore_errors=True)


def test_apply_rejects_overlapping_targets(tmp_path):
    (tmp_path / "m.py").write_text(
        "class C:\n    def m(self):\n        return 1\n"
    )
    repo = ingest_repository(tmp_path, TEST_COMMAND)
    corruptions = [
        Corruption("m.py::C", "adversarial", "class C:\n    def m(self):\n        return 2\n", repo.units["m.py::C"].digest()),
        Corruption("m.py::C.m", "adversarial", "    def m(self):\n        return 3\n", repo.units["m.py::C.m"].digest()),
    ]
    snap = snapshot_repository(tmp_path)
    try:
        with pytest.raises(UnsupportedTarget):
            apply_corruptions(snap, repo, corruptions)
    finally:
        shutil.rmtree(snap.parent, ignore_errors=True)


def test_restore_checks_digest(calcrepo):
    corruption = delete_function(calcrepo, "calckit/vectors.py::dot")
    tampered = Corruption(corruption.target, corruption.method, corruption.corrupted_body, "0" * 64)
    snap = snapshot_repository(calcrepo.root)
    try:
        apply_corruptions(snap, calcrepo, [corruption])
        with pytest.raises(UnsupportedTarget):
            restore_originals(snap, calcrepo, [tampered])
    finally:
        shutil.rmtree(snap.parent, ignore_errors=True)


# ---------------------------------------------------------------------------
# Multifunction selection
# ---------------------------------------------------------------------------


def test_multifunction_sets_respect_distance(calcgraph, calcrepo):
    from repairbench.repo import chain_distance
    from repairbench.taskgen import _eligible_targets

    eligible = set(_eligible_targets(calcrepo))
    for k in (2, 3, 4):
        for group in select_multifunction_sets(calcgraph, k, max_distance=4, count=6, seed=3, eligible=eligible):
            assert len(group) == k
            members = sorted(group)
            for i, a in enumerate(members):
                for b in members[i + 1 :]:
                    assert chain_distance(calcgraph, a, b) <= 4


def test_multifunction_excludes_nested_pairs():
    g = as_callgraph(
        ["m.py::C", "m.py::C.m", "m.py::f"],
        [("m.py::C.m", "m.py::f"), ("m.py::C", "m.py::C.m")],
    )
    with pytest.warns(UserWarning):  # fewer qualifying sets than asked for
        sets = select_multifunction_sets(g, 2, max_distance=4, count=10, seed=0)
    assert sets  # class/method pairings are excluded, others remain
    assert {"m.py::C", "m.py::C.m"} not in sets


def test_multifunction_warns_when_supply_is_short():
    g = as_callgraph(["a", "b"], [("a", "b")])
    with pytest.warns(UserWarning):
        sets = select_multifunction_sets(g, 2, count=50)
    assert sets == [{"a", "b"}]


def test_multifunction_seeded_determinism(calcgraph):
    first = select_multifunction_sets(calcgraph, 2, count=5, seed=42)
    second = select_multifunction_sets(calcgraph, 2, count=5, seed=42)
    assert first == second


def test_multifunction_k1_and_bad_args(calcgraph):
    with pytest.raises(ValueError):
        select_multifunction_sets(calcgraph, 0)
    with pytest.raises(ValueError):
        select_multifunction_sets(calcgraph, 2, count=0)
    singles = select_multifunction_sets(calcgraph, 1, count=3, seed=1)
    assert all(len(s) == 1 for s in singles)


# ---------------------------------------------------------------------------
# Validation and assembly
# ---------------------------------------------------------------------------


def test_validate_accepts_damaging_corruption(calcrepo, calc_baseline):
    corruption = delete_function(calcrepo, "calckit/checksum.py::checksum")
    accepted, failing, reason = validate_task(calcrepo, [corruption], min_failing=5, baseline_report=calc_baseline)
    assert accepted and reason is None
    assert len(failing) == 7


def test_validate_rejects_weak_corruption(calcrepo, calc_baseline):
    corruption = delete_function(calcrepo, "calckit/checksum.py::tag")
    accepted, failing, reason = validate_task(calcrepo, [corruption], min_failing=5, baseline_report=calc_baseline)
    assert not accepted
    assert reason == "too_few_failures"
    assert len(failing) == 1


def test_validate_reports_timeout(calcrepo, calc_baseline):
    unit = calcrepo.units["calckit/vectors.py::dot"]
    hanging = Corruption(
        target=unit.id,
        method="adversarial",
        corrupted_body="def dot(a, b):\n    __import__('time').sleep(120)\n    return 0\n",
        original_digest=unit.digest(),
    )
    accepted, failing, reason = validate_task(
        calcrepo, [hanging], min_failing=1, cap_seconds=2.0, baseline_report=calc_baseline
    )
    assert not accepted
    assert reason == "timeout"


def test_task_id_deterministic_and_order_insensitive(calcrepo):
    c1 = delete_function(calcrepo, "calckit/vectors.py::dot")
    c2 = delete_function(calcrepo, "calckit/vectors.py::norm")
    a = compute_task_id(calcrepo.commit, [c1, c2])
    b = compute_task_id(calcrepo.commit, [c2, c1])
    assert a == b
    assert len(a) == 16
    assert compute_task_id("other-commit", [c1, c2]) != a


def test_task_serialization_roundtrip(tmp_path, remove_task):
    path = tmp_path / "task.json"
    write_task(remove_task, path)
    loaded = read_task(path)
    assert loaded.task_id == remove_task.task_id
    assert loaded.mode == remove_task.mode
    assert loaded.corruptions == remove_task.corruptions
    assert loaded.failing_tests == remove_task.failing_tests
    assert loaded.metrics == remove_task.metrics


def test_task_dict_schema(remove_task):
    payload = remove_task.to_dict()
    assert set(payload) == {
        "task_id",
        "repo_ref",
        "mode",
        "corruptions",
        "failing_tests",
        "metrics",
        "generator",
    }
    assert payload["failing_tests"] == sorted(payload["failing_tests"])
    assert set(payload["corruptions"][0]) == {"target", "method", "corrupted_body", "original_digest"}
    target = payload["corruptions"][0]["target"]
    assert set(payload["metrics"][target]) == {"raw", "z", "pct"}


def test_check_invariants_passes_for_generated(remove_task, calcgraph):
    check_invariants(remove_task, calcgraph, min_failing=5)


def test_check_invariants_flags_violations(remove_task):
    bad = TaskInstance(
        task_id=remove_task.task_id,
        repo_ref=remove_task.repo_ref,
        mode="remove",
        corruptions=remove_task.corruptions,
        failing_tests={"only::one"},
        metrics=remove_task.metrics,
        generator=remove_task.generator,
    )
    with pytest.raises(ValueError):
        check_invariants(bad, min_failing=5)
    wrong_mode = TaskInstance(
        task_id="x",
        repo_ref={},
        mode="weird",
        corruptions=remove_task.corruptions,
        failing_tests=remove_task.failing_tests,
        metrics={},
        generator={},
    )
    with pytest.raises(ValueError):
        check_invariants(wrong_mode, min_failing=1)


# ---------------------------------------------------------------------------
# Batch generation and hard-set selection
# ---------------------------------------------------------------------------


def test_generate_deletion_tasks_counts_and_stats(deletion_tasks):
    assert len(deletion_tasks) == 3
    ids = {t.task_id for t in deletion_tasks}
    assert len(ids) == 3
    for task in deletion_tasks:
        assert task.mode == "remove"
        assert len(task.failing_tests) >= 5
        assert task.generator["version"]


def test_generate_deletion_tasks_unreachable_threshold(calcrepo, calcgraph):
    with pytest.raises(NoTasksGenerated):
        generate_deletion_tasks(calcrepo, calcgraph, count=1, min_failing=10_000, seed=0)


def _task_with_pcts(task_id, comp, cent):
    return TaskInstance(
        task_id=task_id,
        repo_ref={},
        mode="remove",
        corruptions=[Corruption("f.py::f", "deletion", "x", "d")],
        failing_tests={"a", "b", "c", "d", "e"},
        metrics={"f.py::f": {"raw": {}, "z": {}, "pct": {"cyclomatic": comp, "pagerank": cent}}},
        generator={},
    )


def test_select_hard_set_thresholds():
    tasks = [
        _task_with_pcts("t1", 0.95, 0.99),
        _task_with_pcts("t2", 0.95, 0.10),
        _task_with_pcts("t3", 0.40, 0.99),
        _task_with_pcts("t4", 0.90, 0.90),
    ]
    hard = select_hard_set(tasks, pct=0.90)
    assert [t.task_id for t in hard] == ["t1", "t4"]
    assert select_hard_set(tasks, pct=0.0) == tasks


def test_select_hard_set_uses_max_over_targets():
    task = TaskInstance(
        task_id="multi",
        repo_ref={},
        mode="discovery",
        corruptions=[
            Corruption("f.py::a", "adversarial", "x", "d1"),
            Corruption("f.py::b", "adversarial", "y", "d2"),
        ],
        failing_tests=set("abcde"),
        metrics={
            "f.py::a": {"raw": {}, "z": {}, "pct": {"cyclomatic": 0.99, "pagerank": 0.10}},
            "f.py::b": {"raw": {}, "z": {}, "pct": {"cyclomatic": 0.10, "pagerank": 0.95}},
        },
        generator={},
    )
    assert select_hard_set([task], pct=0.90) == [task]
