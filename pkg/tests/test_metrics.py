import csv
import math
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import GOLDEN, as_callgraph, random_digraph
from repairbench.errors import NonConvergence, TooFewRecords, UnknownNode
from repairbench.metrics import (
    METRIC_COLUMNS,
    MetricsRecord,
    betweenness_all,
    compute_metrics,
    correlation_matrix,
    count_code_lines,
    cyclomatic_complexity,
    degrees,
    distance_discount,
    halstead,
    harmonic_centrality,
    nesting_depth,
    normalize,
    pagerank,
    shortest_paths,
    write_metrics_csv,
)


def _golden_rows():
    with (GOLDEN / "golden_metrics.csv").open() as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# Complexity metrics against the hand-tallied table
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("row", _golden_rows(), ids=lambda r: r["qualname"])
def test_golden_complexity(row, golden_units):
    unit = golden_units[row["qualname"]]
    assert count_code_lines(unit) == int(row["loc"])
    assert cyclomatic_complexity(unit) == int(row["cyclomatic"])
    assert nesting_depth(unit) == int(row["nesting_depth"])
    difficulty, volume = halstead(unit)
    assert difficulty == pytest.approx(float(row["halstead_difficulty"]), abs=1e-9)
    assert volume == pytest.approx(float(row["halstead_volume"]), abs=1e-9)


def test_golden_table_covers_every_corpus_unit(golden_units):
    assert {r["qualname"] for r in _golden_rows()} == set(golden_units)


def test_comment_and_blank_lines_not_counted(tmp_path):
    from repairbench.repo import parse_file

    f = tmp_path / "m.py"
    f.write_text(
        "def f():\n"
        "    # setup\n"
        "\n"
        "    x = 1\n"
        "    # tally\n"
        "    return x\n"
    )
    (unit,) = parse_file(f, "m.py")
    assert count_code_lines(unit) == 2


def test_elif_chain_depth_stays_flat(tmp_path):
    from repairbench.repo import parse_file

    f = tmp_path / "m.py"
    f.write_text(
        "def f(x):\n"
        "    if x == 1:\n"
        "        return 1\n"
        "    elif x == 2:\n"
        "        return 2\n"
        "    elif x == 3:\n"
        "        return 3\n"
        "    return 0\n"
    )
    (unit,) = parse_file(f, "m.py")
    assert nesting_depth(unit) == 1
    assert cyclomatic_complexity(unit) == 4  # three branch points


# ---------------------------------------------------------------------------
# Centralities against independent oracles
# ---------------------------------------------------------------------------

SEEDS = range(25)


@pytest.mark.parametrize("seed", SEEDS)
def test_harmonic_matches_oracle(seed):
    nodes, edges = random_digraph(seed)
    g = as_callgraph(nodes, edges)
    for node in nodes:
        for direction in ("out", "in"):
            for normalized in (True, False):
                got = harmonic_centrality(g, node, direction, normalized)
                want = oracles.harmonic_oracle(nodes, edges, node, direction, normalized)
                assert got == pytest.approx(want, abs=1e-8)


@pytest.mark.parametrize("seed", SEEDS)
def test_pagerank_matches_oracle_and_sums_to_one(seed):
    nodes, edges = random_digraph(seed)
    g = as_callgraph(nodes, edges)
    got = pagerank(g)
    want = oracles.pagerank_oracle(nodes, edges)
    assert sum(got.values()) == pytest.approx(1.0, abs=1e-9)
    for node in nodes:
        assert got[node] == pytest.approx(want[node], abs=1e-8)


@pytest.mark.parametrize("seed", SEEDS)
def test_betweenness_matches_path_counting_oracle(seed):
    nodes, edges = random_digraph(seed)
    g = as_callgraph(nodes, edges)
    got = betweenness_all(g)
    want = oracles.betweenness_oracle(nodes, edges)
    for node in nodes:
        assert got[node] == pytest.approx(want[node], abs=1e-8)


@pytest.mark.parametrize("seed", range(12))
def test_betweenness_oracles_agree_on_tiny_graphs(seed):
    nodes, edges = random_digraph(seed * 101 + 7, max_nodes=8)
    counted = oracles.betweenness_oracle(nodes, edges)
    listed = oracles.enumerated_betweenness_oracle(nodes, edges)
    for node in nodes:
        assert counted[node] == pytest.approx(listed[node], abs=1e-10)


@pytest.mark.parametrize("seed", SEEDS)
def test_distance_discount_and_degrees_match_oracle(seed):
    nodes, edges = random_digraph(seed)
    g = as_callgraph(nodes, edges)
    for node in nodes:
        assert distance_discount(g, node) == pytest.approx(
            oracles.discount_oracle(nodes, edges, node), abs=1e-10
        )
        assert degrees(g, node) == oracles.degree_oracle(edges=edges, nodes=nodes, node=node)


def test_self_loop_counts_once_per_direction():
    g = as_callgraph(["a", "b"], [("a", "a"), ("a", "b")])
    assert degrees(g, "a") == (1, 2, 3)


def test_shortest_paths_excludes_source_and_unreachable():
    g = as_callgraph(["a", "b", "c", "d"], [("a", "b"), ("b", "c")])
    dist = shortest_paths(g, "a")
    assert dist == {"b": 1, "c": 2}
    assert shortest_paths(g, "c", direction="in") == {"b": 1, "a": 2}


def test_distance_discount_alpha_guard():
    g = as_callgraph(["a"], [])
    for alpha in (0.0, 1.0, -0.5, 1.5):
        with pytest.raises(ValueError):
            distance_discount(g, "a", alpha=alpha)


def test_unknown_node_raises():
    g = as_callgraph(["a"], [])
    with pytest.raises(UnknownNode):
        harmonic_centrality(g, "zz")


def test_pagerank_nonconvergence_reports_residual():
    nodes, edges = random_digraph(3)
    g = as_callgraph(nodes, edges)
    with pytest.raises(NonConvergence) as exc:
        pagerank(g, tol=0.0, max_iter=2)
    assert exc.value.residual >= 0.0


def test_pagerank_uniform_on_cycle():
    nodes = [f"n{i}" for i in range(5)]
    edges = [(nodes[i], nodes[(i + 1) % 5]) for i in range(5)]
    ranks = pagerank(as_callgraph(nodes, edges))
    for value in ranks.values():
        assert value == pytest.approx(0.2, abs=1e-9)


# ---------------------------------------------------------------------------
# Normalization and correlation
# ---------------------------------------------------------------------------


def _fake_records(values_by_metric: dict[str, list[float]]) -> list[MetricsRecord]:
    n = len(next(iter(values_by_metric.values())))
    records = []
    for i in range(n):
        kwargs = {m: values_by_metric.get(m, [0.0] * n)[i] for m in METRIC_COLUMNS}
        records.append(MetricsRecord(unit=f"u{i}", **kwargs))
    return records


def test_normalize_zscores_and_percentiles_match_oracle():
    values = [3.0, 1.0, 4.0, 1.0, 5.0]
    records = _fake_records({"loc": values})
    normalized = normalize(records)
    want_z = oracles.zscore_oracle(values)
    want_pct = oracles.percentile_oracle(values)
    for i, norm in enumerate(normalized):
        assert norm.zscores["loc"] == pytest.approx(want_z[i], abs=1e-12)
        assert norm.percentiles["loc"] == pytest.approx(want_pct[i], abs=1e-12)


def test_normalize_constant_metric_is_all_zero_z():
    records = _fake_records({"loc": [7.0, 7.0, 7.0]})
    normalized = normalize(records)
    assert all(n.zscores["loc"] == 0.0 for n in normalized)
    assert all(n.percentiles["loc"] == 0.0 for n in normalized)


def test_normalize_ties_share_lower_percentile():
    records = _fake_records({"loc": [2.0, 2.0, 5.0, 9.0]})
    normalized = normalize(records)
    pcts = [n.percentiles["loc"] for n in normalized]
    assert pcts == [0.0, 0.0, 0.5, 0.75]


def test_normalize_needs_two_records():
    with pytest.raises(TooFewRecords):
        normalize(_fake_records({"loc": [1.0]}))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False), min_size=2, max_size=40))
def test_normalize_properties(values):
    records = _fake_records({"loc": values})
    normalized = normalize(records)
    zs = [n.zscores["loc"] for n in normalized]
    assert sum(zs) == pytest.approx(0.0, abs=1e-6)
    for n in normalized:
        assert 0.0 <= n.percentiles["loc"] < 1.0


def test_correlation_matrix_against_oracle():
    records = _fake_records(
        {
            "loc": [1.0, 2.0, 3.0, 4.0],
            "cyclomatic": [2.0, 4.0, 6.0, 8.0],
            "pagerank": [4.0, 1.0, 3.0, 2.0],
        }
    )
    names, matrix = correlation_matrix(records)
    i_loc = names.index("loc")
    i_cc = names.index("cyclomatic")
    i_pr = names.index("pagerank")
    assert matrix[i_loc][i_cc] == pytest.approx(1.0, abs=1e-12)
    want = oracles.pearson_oracle([1.0, 2.0, 3.0, 4.0], [4.0, 1.0, 3.0, 2.0])
    assert matrix[i_loc][i_pr] == pytest.approx(want, abs=1e-12)
    # zero-variance metrics give NaN rows, even on the diagonal
    i_depth = names.index("nesting_depth")
    assert math.isnan(matrix[i_depth][i_depth])
    assert math.isnan(matrix[i_loc][i_depth])


def test_correlation_needs_three_records():
        with pytest.raises(TooFewRecords):
            correlation_matrix(_fake_records({"loc": [1.0, 2.0]}))


def test_compute_metrics_covers_every_unit(calcrepo, calcgraph):
    records = compute_metrics(calcrepo, calcgraph)
    assert [r.unit for r in records] == sorted(calcrepo.units)
    by_unit = {r.unit: r for r in records}
    dot = by_unit["calckit/vectors.py::dot"]
    assert dot.loc == 1
    assert dot.in_degree >= 2  # norm and distance both call it


def test_metrics_csv_roundtrip(tmp_path, calcrepo, calcgraph):
    records = compute_metrics(calcrepo, calcgraph)
    normalized = normalize(records)
    out = tmp_path / "metrics.csv"
    write_metrics_csv(records, normalized, out)
    with out.open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(records)
    first = rows[0]
    record = records[0]
    assert first["unit"] == record.unit
    assert float(first["loc"]) == record.loc
    assert float(first["z_loc"]) == pytest.approx(normalized[0].zscores["loc"], abs=1e-9)
