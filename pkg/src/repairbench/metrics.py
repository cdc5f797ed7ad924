"""Per-function complexity metrics and call-graph centrality measures.

Complexity metrics operate on a unit's *body* (signature and docstring
excluded by construction):

* ``count_code_lines`` — body lines that are neither blank nor comment-only.
* ``cyclomatic_complexity`` — 1 + decision points, where decision points are
  ``if``/``elif``, loop headers (``for``/``while``, incl. async and each
  comprehension clause), exception handlers, conditional expressions,
  comprehension filters, ``match`` cases, and each boolean short-circuit
  operator.  ``else`` clauses do not count.
* ``halstead`` — difficulty D = (eta1 / 2) * (N2 / eta2) and volume
  V = N * log2(eta1 + eta2) over the operator/operand classification below.
* ``nesting_depth`` — maximum nesting level of block statements; an
  ``elif`` continues its chain at the same level.

Halstead token classification (AST-based; the unit's own docstring excluded):

  operators  assignment (``=``, ``:=``, augmented forms), binary arithmetic
             and bitwise symbols, unary ``-``/``+``/``~``/``not``,
             comparisons (incl. ``is``/``in`` variants), ``and``/``or``
             (one per short-circuit), one ``()`` per call, one ``[]`` per
             subscript, one ``.`` per attribute access, ``if-else`` per
             conditional expression, ``lambda``, ``def`` per nested
             definition, and the value keywords ``return``/``yield``/
             ``yield from``/``await``/``raise``/``del``/``assert``.
  operands   identifiers (names and attribute names) and literal constants
             keyed by their repr.  Container displays, slices, keyword-
             argument labels, parameter declarations, and comprehension
             keywords are not counted.

Centrality measures mirror the standard definitions on the directed call
graph: PageRank with uniform dangling redistribution, harmonic centrality
(out-direction, normalized by |V|-1, with the in-direction unnormalized
variant behind flags), exponential distance-discount influence, unnormalized
directed betweenness, and in/out/total degrees.
"""

from __future__ import annotations

import ast
import csv
import math
from bisect import bisect_left
from collections import deque
from dataclasses import dataclass
from pathlib import Path

from .errors import NonConvergence, TooFewRecords, UnknownNode
from .repo import CallGraph, FunctionUnit, Repository, dedent_unit

# ---------------------------------------------------------------------------
# Unit parsing helpers
# ---------------------------------------------------------------------------


def _unit_node(u: FunctionUnit):
    tree = ast.parse(dedent_unit(u.source))
    for node in tree.body:
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
            return node
    raise ValueError(f"unit source does not define a callable: {u.id}")


def _body_statements(node) -> list[ast.stmt]:
    body = list(node.body)
    if body and isinstance(body[0], ast.Expr) and isinstance(body[0].value, ast.Constant) and isinstance(body[0].value.value, str):
        body = body[1:]
    return body


# ---------------------------------------------------------------------------
# Complexity metrics
# ---------------------------------------------------------------------------


def count_code_lines(u: FunctionUnit) -> int:
    """Body lines that are neither blank nor comment-only."""
    count = 0
    for line in u.body.splitlines():
        stripped = line.strip()
        if stripped and not stripped.startswith("#"):
            count += 1
    return count


_BOOL_NAMES = {ast.And: "and", ast.Or: "or"}

_BIN_NAMES = {
    ast.Add: "+",
    ast.Sub: "-",
    ast.Mult: "*",
    ast.Div: "/",
    ast.FloorDiv: "//",
    ast.Mod: "%",
    ast.Pow: "**",
    ast.MatMult: "@",
    ast.LShift: "<<",
    ast.RShift: ">>",
    ast.BitAnd: "&",
    ast.BitOr: "|",
    ast.BitXor: "^",
}

_UNARY_NAMES = {ast.USub: "-", ast.UAdd: "+", ast.Invert: "~", ast.Not: "not"}

_CMP_NAMES = {
    ast.Eq: "==",
    ast.NotEq: "!=",
    ast.Lt: "<",
    ast.LtE: "<=",
    ast.Gt: ">",
    ast.GtE: ">=",
    ast.Is: "is",
    ast.IsNot: "is not",
    ast.In: "in",
    ast.NotIn: "not in",
}


class _CyclomaticVisitor(ast.NodeVisitor):
    def __init__(self) -> None:
        self.points = 0

    def visit_If(self, node: ast.If) -> None:
        self.points += 1
        self.generic_visit(node)

    def visit_For(self, node) -> None:
        self.points += 1
        self.generic_visit(node)

    visit_AsyncFor = visit_For
    visit_While = visit_For
    visit_ExceptHandler = visit_For
    visit_IfExp = visit_For
    visit_match_case = visit_For

    def visit_BoolOp(self, node: ast.BoolOp) -> None:
        self.points += len(node.values) - 1
        self.generic_visit(node)

    def visit_comprehension(self, node: ast.comprehension) -> None:
        self.points += 1 + len(node.ifs)
        for child in ast.iter_child_nodes(node):
            self.visit(child)


def cyclomatic_complexity(u: FunctionUnit) -> int:
    """1 + the number of decision points in the body."""
    visitor = _CyclomaticVisitor()
    for stmt in _body_statements(_unit_node(u)):
        visitor.visit(stmt)
    return 1 + visitor.points


class _HalsteadVisitor(ast.NodeVisitor):
    def __init__(self) -> None:
        self.operators: list[str] = []
        self.operands: list[str] = []

    def _op(self, symbol: str) -> None:
        self.operators.append(symbol)

    # --- operands -----------------------------------------------------
    def visit_Name(self, node: ast.Name) -> None:
        self.operands.append(node.id)

    def visit_Constant(self, node: ast.Constant) -> None:
        self.operands.append(repr(node.value))

    def visit_Attribute(self, node: ast.Attribute) -> None:
        self._op(".")
        self.operands.append(node.attr)
        self.visit(node.value)

    # --- expressions ---------------------------------------------------
    def visit_BinOp(self, node: ast.BinOp) -> None:
        self._op(_BIN_NAMES[type(node.op)])
        self.generic_visit(node)

    def visit_UnaryOp(self, node: ast.UnaryOp) -> None:
        self._op(_UNARY_NAMES[type(node.op)])
        self.generic_visit(node)

    def visit_BoolOp(self, node: ast.BoolOp) -> None:
        self.operators.extend([_BOOL_NAMES[type(node.op)]] * (len(node.values) - 1))
        self.generic_visit(node)

    def visit_Compare(self, node: ast.Compare) -> None:
        for op in node.ops:
            self._op(_CMP_NAMES[type(op)])
        self.generic_visit(node)

    def visit_Call(self, node: ast.Call) -> None:
        self._op("()")
        self.visit(node.func)
        for arg in node.args:
            self.visit(arg)
        for kw in node.keywords:
            self.visit(kw.value)  # keyword labels are not operands

    def visit_Subscript(self, node: ast.Subscript) -> None:
        self._op("[]")
        self.generic_visit(node)

    def visit_Slice(self, node: ast.Slice) -> None:
        self.generic_visit(node)  # covered by the enclosing []

    def visit_IfExp(self, node: ast.IfExp) -> None:
        self._op("if-else")
        self.generic_visit(node)

    def visit_Lambda(self, node: ast.Lambda) -> None:
        self._op("lambda")
        self.visit(node.body)  # parameter declarations are not operands

    # --- statements ----------------------------------------------------
    def visit_Assign(self, node: ast.Assign) -> None:
        self._op("=")
        self.generic_visit(node)

    def visit_AnnAssign(self, node: ast.AnnAssign) -> None:
        if node.value is not None:
            self._op("=")
            self.visit(node.target)
            self.visit(node.value)

    def visit_AugAssign(self, node: ast.AugAssign) -> None:
        self._op(_BIN_NAMES[type(node.op)] + "=")
        self.generic_visit(node)

    def visit_NamedExpr(self, node: ast.NamedExpr) -> None:
        self._op(":=")
        self.generic_visit(node)

    def visit_Return(self, node: ast.Return) -> None:
        self._op("return")
        self.generic_visit(node)

    def visit_Yield(self, node: ast.Yield) -> None:
        self._op("yield")
        self.generic_visit(node)

    def visit_YieldFrom(self, node: ast.YieldFrom) -> None:
        self._op("yield from")
        self.generic_visit(node)

    def visit_Await(self, node: ast.Await) -> None:
        self._op("await")
        self.generic_visit(node)

    def visit_Raise(self, node: ast.Raise) -> None:
        self._op("raise")
        self.generic_visit(node)

    def visit_Delete(self, node: ast.Delete) -> None:
        self._op("del")
        self.generic_visit(node)

    def visit_Assert(self, node: ast.Assert) -> None:
        self._op("assert")
        self.generic_visit(node)

    def visit_FunctionDef(self, node) -> None:
        self._op("def")
        self.operands.append(node.name)
        for stmt in node.body:
            self.visit(stmt)

    visit_AsyncFunctionDef = visit_FunctionDef
    visit_ClassDef = visit_FunctionDef

    def visit_arguments(self, node: ast.arguments) -> None:
        pass


def halstead(u: FunctionUnit) -> tuple[float, float]:
    """(difficulty, volume) for the unit body; empty body yields (0.0, 0.0)."""
    visitor = _HalsteadVisitor()
    for stmt in _body_statements(_unit_node(u)):
        visitor.visit(stmt)
    n1 = len(visitor.operators)
    n2 = len(visitor.operands)
    eta1 = len(set(visitor.operators))
    eta2 = len(set(visitor.operands))
    difficulty = (eta1 / 2.0) * (n2 / eta2) if eta2 else 0.0
    total = n1 + n2
    vocabulary = eta1 + eta2
    volume = total * math.log2(vocabulary) if vocabulary else 0.0
    return difficulty, volume


_BLOCK_TYPES = (
    ast.If,
    ast.For,
    ast.AsyncFor,
    ast.While,
    ast.With,
    ast.AsyncWith,
    ast.Try,
    ast.FunctionDef,
    ast.AsyncFunctionDef,
    ast.ClassDef,
)
if hasattr(ast, "Match"):
    _BLOCK_TYPES = _BLOCK_TYPES + (ast.Match,)


def _stmt_depth(stmt: ast.stmt) -> int:
    if isinstance(stmt, ast.If):
        depth = 1 + _block_depth(stmt.body)
        orelse = stmt.orelse
        if len(orelse) == 1 and isinstance(orelse[0], ast.If):
            depth = max(depth, _stmt_depth(orelse[0]))  # elif: same level
        elif orelse:
            depth = max(depth, 1 + _block_depth(orelse))
        return depth
    if isinstance(stmt, _BLOCK_TYPES):
        inner: list[ast.stmt] = []
        for attr in ("body", "orelse", "finalbody"):
            inner.extend(getattr(stmt, attr, None) or [])
        for handler in getattr(stmt, "handlers", None) or []:
            inner.extend(handler.body)
        for case in getattr(stmt, "cases", None) or []:
            inner.extend(case.body)
        return 1 + _block_depth(inner)
    return 0


def _block_depth(stmts: list[ast.stmt]) -> int:
    return max((_stmt_depth(s) for s in stmts), default=0)


def nesting_depth(u: FunctionUnit) -> int:
    """Maximum nesting level of block statements in the body; flat body is 0."""
    return _block_depth(_body_statements(_unit_node(u)))


# ---------------------------------------------------------------------------
# Graph metrics
# ---------------------------------------------------------------------------


def _require_node(g: CallGraph, node: str) -> None:
    if node not in g.nodes:
        raise UnknownNode(node)


def shortest_paths(g: CallGraph, source: str, direction: str = "out") -> dict[str, int]:
    """BFS distances from ``source`` along (out) or against (in) edges.

    The source itself and unreachable nodes are absent from the map.
    """
    _require_node(g, source)
    adj = g.out_neighbors() if direction == "out" else g.in_neighbors()
    dist: dict[str, int] = {}
    seen = {source}
    frontier = deque([(source, 0)])
    while frontier:
        node, d = frontier.popleft()
        for nxt in adj[node]:
            if nxt not in seen:
                seen.add(nxt)
                dist[nxt] = d + 1
                frontier.append((nxt, d + 1))
    return dist


def harmonic_centrality(g: CallGraph, f: str, direction: str = "out", normalized: bool = True) -> float:
    """Sum of reciprocal shortest-path distances from (out) or to (in) ``f``.

    The normalized form divides by |V|-1; a singleton graph scores 0.
    """
    _require_node(g, f)
    n = len(g.nodes)
    if n < 2:
        return 0.0
    total = sum(1.0 / d for d in shortest_paths(g, f, direction).values())
    return total / (n - 1) if normalized else total


def distance_discount(g: CallGraph, f: str, alpha: float = 0.5) -> float:
    """Sum of alpha**distance over nodes reachable from ``f``."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    _require_node(g, f)
    return sum(alpha**d for d in shortest_paths(g, f, "out").values())


def pagerank(g: CallGraph, damping: float = 0.85, tol: float = 1e-10, max_iter: int = 200) -> dict[str, float]:
    """Power iteration with uniform redistribution of dangling-node mass.

    Stops when the L1 change between sweeps drops below ``tol``; raises
    NonConvergence (with the residual) when ``max_iter`` is exceeded.
    """
    nodes = sorted(g.nodes)
    n = len(nodes)
    if n == 0:
        return {}
    out = g.out_neighbors()
    incoming = g.in_neighbors()
    rank = {node: 1.0 / n for node in nodes}
    base = (1.0 - damping) / n
    for _ in range(max_iter):
        dangling_mass = sum(rank[node] for node in nodes if not out[node])
        new_rank = {}
        for node in nodes:
            inbound = sum(rank[src] / len(out[src]) for src in incoming[node])
            new_rank[node] = base + damping * (inbound + dangling_mass / n)
        residual = sum(abs(new_rank[node] - rank[node]) for node in nodes)
        rank = new_rank
        if residual < tol:
            return rank
    raise NonConvergence(f"pagerank did not converge in {max_iter} iterations", residual=residual)


def betweenness_all(g: CallGraph) -> dict[str, float]:
    """Unnormalized directed betweenness for every node (Brandes accumulation)."""
    nodes = sorted(g.nodes)
    adj = g.out_neighbors()
    centrality = {node: 0.0 for node in nodes}
    for s in nodes:
        # single-source shortest paths with path counts
        dist = {s: 0}
        sigma = {node: 0.0 for node in nodes}
        sigma[s] = 1.0
        preds: dict[str, list[str]] = {node: [] for node in nodes}
        order: list[str] = []
        queue = deque([s])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in adj[v]:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = {node: 0.0 for node in nodes}
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                centrality[w] += delta[w]
    return centrality


def betweenness(g: CallGraph, f: str) -> float:
    _require_node(g, f)
    return betweenness_all(g)[f]


def degrees(g: CallGraph, f: str) -> tuple[int, int, int]:
    """(in, out, total) edge counts; a self-loop adds 1 to each direction."""
    _require_node(g, f)
    in_deg = sum(1 for _, b in g.edges if b == f)
    out_deg = sum(1 for a, _ in g.edges if a == f)
    return in_deg, out_deg, in_deg + out_deg


# ---------------------------------------------------------------------------
# Records, normalization, correlation
# ---------------------------------------------------------------------------

METRIC_COLUMNS = [
    "loc",
    "cyclomatic",
    "halstead_difficulty",
    "halstead_volume",
    "nesting_depth",
    "in_degree",
    "out_degree",
    "total_degree",
    "pagerank",
    "harmonic",
    "distance_discount",
    "betweenness",
]


@dataclass
class MetricsRecord:
    unit: str
    loc: int
    cyclomatic: int
    halstead_difficulty: float
    halstead_volume: float
    nesting_depth: int
    in_degree: int
    out_degree: int
    total_degree: int
    pagerank: float
    harmonic: float
    distance_discount: float
    betweenness: float

    def value(self, metric: str) -> float:
        return float(getattr(self, metric))


@dataclass
class NormalizedMetrics:
    unit: str
    zscores: dict[str, float]
    percentiles: dict[str, float]


def compute_metrics(repo: Repository, graph: CallGraph, alpha: float = 0.5, damping: float = 0.85) -> list[MetricsRecord]:
    """One MetricsRecord per unit, sorted by unit id."""
    ranks = pagerank(graph, damping=damping)
    between = betweenness_all(graph)
    records = []
    for uid in sorted(repo.units):
        unit = repo.units[uid]
        difficulty, volume = halstead(unit)
        in_deg, out_deg, total_deg = degrees(graph, uid)
        records.append(
            MetricsRecord(
                unit=uid,
                loc=count_code_lines(unit),
                cyclomatic=cyclomatic_complexity(unit),
                halstead_difficulty=difficulty,
                halstead_volume=volume,
                nesting_depth=nesting_depth(unit),
                in_degree=in_deg,
                out_degree=out_deg,
                total_degree=total_deg,
                pagerank=ranks[uid],
                harmonic=harmonic_centrality(graph, uid),
                distance_discount=distance_discount(graph, uid, alpha=alpha),
                betweenness=between[uid],
            )
        )
    return records


def _centered_spread(values: list[float]) -> tuple[list[float], float]:
    """Deviations from the mean and their population standard deviation.

    The deviations are re-centered once so their float sum is noise at the
    scale of the spread, not of the raw values.  A spread that is itself
    rounding noise relative to the data's magnitude (a constant column whose
    naive mean lands one ulp off) reports std 0.0.
    """
    n = len(values)
    mean = sum(values) / n
    centered = [v - mean for v in values]
    residue = sum(centered) / n
    centered = [c - residue for c in centered]
    std = math.sqrt(sum(c * c for c in centered) / n)
    scale = max(1.0, max(abs(v) for v in values))
    if std <= 1e-12 * scale:
        return [0.0] * n, 0.0
    return centered, std


def normalize(records: list[MetricsRecord]) -> list[NormalizedMetrics]:
    """Population z-scores and strictly-less percentile ranks per metric.

    A metric with zero (or numerically negligible) variance normalizes to
    all-zero z-scores; tied values share the lower percentile.
    """
    if len(records) < 2:
        raise TooFewRecords("normalization needs at least 2 records")
    n = len(records)
    z_by_metric: dict[str, list[float]] = {}
    pct_by_metric: dict[str, list[float]] = {}
    for metric in METRIC_COLUMNS:
        values = [r.value(metric) for r in records]
        centered, std = _centered_spread(values)
        if std > 0:
            z_by_metric[metric] = [c / std for c in centered]
        else:
            z_by_metric[metric] = [0.0] * n
        sorted_values = sorted(values)
        pct_by_metric[metric] = [bisect_left(sorted_values, v) / n for v in values]
    return [
        NormalizedMetrics(
            unit=record.unit,
            zscores={m: z_by_metric[m][i] for m in METRIC_COLUMNS},
            percentiles={m: pct_by_metric[m][i] for m in METRIC_COLUMNS},
        )
        for i, record in enumerate(records)
    ]


def correlation_matrix(records: list[MetricsRecord]) -> tuple[list[str], list[list[float]]]:
    """Pairwise Pearson correlations over METRIC_COLUMNS.

    Zero-variance metrics yield a NaN row/column; other diagonal entries are
    exactly 1.
    """
    if len(records) < 3:
        raise TooFewRecords("correlation needs at least 3 records")
    n = len(records)
    spreads = {
        m: _centered_spread([r.value(m) for r in records]) for m in METRIC_COLUMNS
    }
    k = len(METRIC_COLUMNS)
    matrix = [[math.nan] * k for _ in range(k)]
    for i, a in enumerate(METRIC_COLUMNS):
        centered_a, std_a = spreads[a]
        for j, b in enumerate(METRIC_COLUMNS):
            centered_b, std_b = spreads[b]
            if std_a == 0.0 or std_b == 0.0:
                continue
            if i == j:
                matrix[i][j] = 1.0
            else:
                cov = sum(x * y for x, y in zip(centered_a, centered_b)) / n
                matrix[i][j] = cov / (std_a * std_b)
    return list(METRIC_COLUMNS), matrix


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------


def write_metrics_csv(records: list[MetricsRecord], normalized: list[NormalizedMetrics], path: Path) -> None:
    header = ["unit"] + METRIC_COLUMNS
    header += [f"z_{m}" for m in METRIC_COLUMNS] + [f"pct_{m}" for m in METRIC_COLUMNS]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for record, norm in zip(records, normalized):
            row: list = [record.unit] + [record.value(m) for m in METRIC_COLUMNS]
            row += [f"{norm.zscores[m]:.12g}" for m in METRIC_COLUMNS]
            row += [f"{norm.percentiles[m]:.12g}" for m in METRIC_COLUMNS]
            writer.writerow(row)


def write_correlations_csv(names: list[str], matrix: list[list[float]], path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric"] + names)
        for name, row in zip(names, matrix):
            writer.writerow([name] + [("" if math.isnan(v) else f"{v:.12g}") for v in row])
