import random
import sys
from pathlib import Path

import pytest

from repairbench.corruption import HeuristicCorruptionClient
from repairbench.harness import baseline
from repairbench.repo import CallGraph, build_call_graph, ingest_repository, parse_file
from repairbench.taskgen import generate_adversarial_tasks, generate_deletion_tasks

FIXTURES = Path(__file__).parent / "fixtures"
CALCREPO = FIXTURES / "calcrepo"
GOLDEN = FIXTURES / "golden_corpus"

# The harness shells out; pin the interpreter the suite itself runs under.
TEST_COMMAND = f"{sys.executable} -m pytest -q --junitxml={{report}}"


@pytest.fixture(scope="session")
def calcrepo_path():
    return CALCREPO


@pytest.fixture(scope="session")
def calcrepo(calcrepo_path):
    return ingest_repository(calcrepo_path, TEST_COMMAND, commit="fixture-v1")


@pytest.fixture(scope="session")
def calcgraph(calcrepo):
    return build_call_graph(calcrepo)


@pytest.fixture(scope="session")
def calc_baseline(calcrepo):
    return baseline(calcrepo)


@pytest.fixture(scope="session")
def deletion_tasks(calcrepo, calcgraph):
    tasks, _ = generate_deletion_tasks(calcrepo, calcgraph, count=3, min_failing=5, seed=11)
    return tasks


@pytest.fixture(scope="session")
def remove_task(deletion_tasks):
    return deletion_tasks[0]


@pytest.fixture(scope="session")
def discovery_task(calcrepo, calcgraph):
    tasks, _ = generate_adversarial_tasks(
        calcrepo, calcgraph, HeuristicCorruptionClient(seed=5), count=1, k=1, min_failing=2, seed=5
    )
    return tasks[0]


@pytest.fixture(scope="session")
def golden_units():
    path = GOLDEN / "corpus.py"
    return {u.qualname: u for u in parse_file(path, "corpus.py")}


def random_digraph(seed: int, max_nodes: int = 50) -> tuple[list[str], list[tuple[str, str]]]:
    """Seeded random digraph; self loops allowed, duplicates removed."""
    rng = random.Random(seed)
    n = rng.randint(2, max_nodes)
    nodes = [f"n{i}" for i in range(n)]
    p = rng.uniform(0.5, 2.5) / n
    edges = {
        (a, b)
        for a in nodes
        for b in nodes
        if rng.random() < p
    }
    return nodes, sorted(edges)


def as_callgraph(nodes, edges) -> CallGraph:
    return CallGraph(nodes=set(nodes), edges=set(edges), unresolved=[])
