"""Statistics over evaluation results: difficulty models, distribution
comparisons, scaling curves, and tool telemetry.

The logistic fit uses iteratively reweighted least squares with a
log-likelihood convergence tolerance of 1e-10 and reports Wald z tests,
two-sided p values, odds ratios, McFadden's pseudo R-squared, and AIC (the
intercept counts toward k).  Mann-Whitney U comes from midrank sums with an
exact two-sided p (full enumeration) when the combined sample is at most 16
with no ties, otherwise a normal approximation with tie and continuity
corrections.  All figure data leaves this module as plain tables.
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateOutcomes,
    NoResults,
    RankDeficient,
    Separation,
    TooFewRecords,
    ZeroVariance,
)
from .evalcore import Trajectory
from .metrics import METRIC_COLUMNS
from .taskgen import TaskInstance

SEPARATION_COEF_LIMIT = 25.0


@dataclass
class ResultRow:
    task_id: str
    label: str
    mode: str
    score: int
    solved_at_attempt: int | None
    corruption_count: int
    predictors: dict[str, float]
    info_calls: int
    submissions: int
    tool_counts: dict[str, int] = field(default_factory=dict)


def collect_results(tasks: dict[str, TaskInstance], trajectories: list[Trajectory]) -> list[ResultRow]:
    """Join trajectories to their tasks; multifunction predictor values take
    the max over targets."""
    rows = []
    for trajectory in trajectories:
        task = tasks.get(trajectory.task_id)
        if task is None:
            continue
        predictors = {}
        for metric in METRIC_COLUMNS:
            predictors[f"z_{metric}"] = max(task.metrics[t]["z"][metric] for t in task.targets)
        predictors["corruption_count"] = float(len(task.corruptions))
        rows.append(
            ResultRow(
                task_id=task.task_id,
                label=trajectory.label,
                mode=task.mode,
                score=trajectory.score,
                solved_at_attempt=trajectory.solved_at_attempt,
                corruption_count=len(task.corruptions),
                predictors=predictors,
                info_calls=trajectory.used_tools,
                submissions=trajectory.used_attempts,
                tool_counts=trajectory.tool_counts(),
            )
        )
    return rows


# ---------------------------------------------------------------------------
# Logistic regression (IRLS)
# ---------------------------------------------------------------------------


@dataclass
class LogisticFit:
    predictors: list[str]
    coefficients: dict[str, dict]  # name -> {beta, se, z, p, odds_ratio}
    log_likelihood: float
    null_log_likelihood: float
    mcfadden_r2: float
    aic: float
    converged: bool
    n: int
    iterations: int

    def to_dict(self) -> dict:
        return {
            "predictors": list(self.predictors),
            "coefficients": self.coefficients,
            "log_likelihood": self.log_likelihood,
            "null_log_likelihood": self.null_log_likelihood,
            "mcfadden_r2": self.mcfadden_r2,
            "aic": self.aic,
            "converged": self.converged,
            "n": self.n,
            "iterations": self.iterations,
        }

    def linear_predictor(self, values: dict[str, float]) -> float:
        eta = self.coefficients["intercept"]["beta"]
        for name in self.predictors:
            eta += self.coefficients[name]["beta"] * values[name]
        return eta


def _two_sided_p(z: float) -> float:
    return math.erfc(abs(z) / math.sqrt(2.0))


def fit_logistic(rows: list[ResultRow], predictors: list[str], tol: float = 1e-10, max_iter: int = 100) -> LogisticFit:
    """Maximum-likelihood logistic fit of score on the named predictors."""
    # intercept-only fits have a closed-form optimum and stay meaningful on
    # tiny samples; regression proper needs enough rows per coefficient
    minimum = 10 if predictors else 2
    if len(rows) < minimum:
        raise TooFewRecords(f"need >= {minimum} rows, got {len(rows)}")
    y = np.array([row.score for row in rows], dtype=float)
    if y.min() == y.max():
        raise DegenerateOutcomes("all outcomes identical")
    X = np.column_stack(
        [np.ones(len(rows))] + [np.array([row.predictors[p] for row in rows], dtype=float) for p in predictors]
    )
    k = X.shape[1]
    if np.linalg.matrix_rank(X) < k:
        raise RankDeficient("predictor matrix is rank deficient")

    beta = np.zeros(k)
    last_ll = -math.inf
    converged = False
    iterations = 0
    xtwx = None
    for iterations in range(1, max_iter + 1):
        eta = np.clip(X @ beta, -30.0, 30.0)
        mu = 1.0 / (1.0 + np.exp(-eta))
        w = np.clip(mu * (1.0 - mu), 1e-10, None)
        xtwx = X.T @ (X * w[:, None])
        try:
            step = np.linalg.solve(xtwx, X.T @ (y - mu))
        except np.linalg.LinAlgError as exc:
            raise RankDeficient("weighted normal equations are singular") from exc
        beta = beta + step
        mu_new = 1.0 / (1.0 + np.exp(-np.clip(X @ beta, -30.0, 30.0)))
        mu_new = np.clip(mu_new, 1e-12, 1.0 - 1e-12)
        ll = float(np.sum(y * np.log(mu_new) + (1.0 - y) * np.log(1.0 - mu_new)))
        if abs(ll - last_ll) < tol:
            converged = True
            last_ll = ll
            break
        last_ll = ll
    if np.max(np.abs(beta)) > SEPARATION_COEF_LIMIT:
        raise Separation("coefficients diverged; outcomes are (quasi-)separated")

    se = np.sqrt(np.diag(np.linalg.inv(xtwx)))
    names = ["intercept"] + list(predictors)
    coefficients = {}
    for i, name in enumerate(names):
        z = float(beta[i] / se[i]) if se[i] > 0 else math.inf
        coefficients[name] = {
            "beta": float(beta[i]),
            "se": float(se[i]),
            "z": z,
            "p": _two_sided_p(z),
            "odds_ratio": float(math.exp(beta[i])),
        }

    p_bar = float(y.mean())
    null_ll = len(y) * (p_bar * math.log(p_bar) + (1.0 - p_bar) * math.log(1.0 - p_bar))
    return LogisticFit(
        predictors=list(predictors),
        coefficients=coefficients,
        log_likelihood=last_ll,
        null_log_likelihood=null_ll,
        mcfadden_r2=1.0 - last_ll / null_ll,
        aic=2.0 * k - 2.0 * last_ll,
        converged=converged,
        n=len(rows),
        iterations=iterations,
    )


# ---------------------------------------------------------------------------
# Rank and effect-size statistics
# ---------------------------------------------------------------------------


def _midranks(values: list[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2.0 + 1.0
        for idx in order[i : j + 1]:
            ranks[idx] = rank
        i = j + 1
    return ranks


def _exact_u_distribution(n1: int, n2: int) -> list[int]:
    """counts[u] = number of rank assignments with U statistic u."""
    max_u = n1 * n2
    # dp[j][u]: ways to pick j of the ranks seen so far with sum offset u
    dp = [[0] * (max_u + 1) for _ in range(n1 + 1)]
    dp[0][0] = 1
    for rank_index in range(1, n1 + n2 + 1):
        for j in range(min(n1, rank_index), 0, -1):
            for u in range(max_u + 1):
                # picking rank_index as the j-th sample-a member adds
                # rank_index - j to U = R_a - n1(n1+1)/2
                add = rank_index - j
                if u >= add and dp[j - 1][u - add]:
                    dp[j][u] += dp[j - 1][u - add]
    return dp[n1]


def mann_whitney(a: list[float], b: list[float]) -> tuple[float, float, float]:
    """(U, two-sided p, rank-biserial r) comparing sample a against sample b."""
    n1, n2 = len(a), len(b)
    if n1 < 1 or n2 < 1:
        raise TooFewRecords("both samples must be non-empty")
    combined = list(a) + list(b)
    ranks = _midranks(combined)
    r_a = sum(ranks[:n1])
    u = r_a - n1 * (n1 + 1) / 2.0
    r = 1.0 - 2.0 * u / (n1 * n2)

    has_ties = len(set(combined)) != len(combined)
    if n1 + n2 <= 16 and not has_ties:
        counts = _exact_u_distribution(n1, n2)
        total = sum(counts)
        u_int = int(round(u))
        low = min(u_int, n1 * n2 - u_int)
        tail = sum(counts[: low + 1])
        p = min(1.0, 2.0 * tail / total)
        return u, p, r

    n = n1 + n2
    mean_u = n1 * n2 / 2.0
    tie_term = 0.0
    seen: dict[float, int] = {}
    for value in combined:
        seen[value] = seen.get(value, 0) + 1
    for t in seen.values():
        tie_term += t**3 - t
    var_u = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var_u <= 0:
        return u, 1.0, r
    delta = u - mean_u
    if delta > 0:
        delta -= 0.5
    elif delta < 0:
        delta += 0.5
    z = delta / math.sqrt(var_u)
    return u, _two_sided_p(z), r


def cohens_d(a: list[float], b: list[float]) -> float:
    """Standardized mean difference with a pooled (n-1) standard deviation."""
    n1, n2 = len(a), len(b)
    if n1 < 2 or n2 < 2:
        raise TooFewRecords("both samples need at least 2 values")
    mean_a = sum(a) / n1
    mean_b = sum(b) / n2
    var_a = sum((x - mean_a) ** 2 for x in a) / (n1 - 1)
    var_b = sum((x - mean_b) ** 2 for x in b) / (n2 - 1)
    pooled = math.sqrt(((n1 - 1) * var_a + (n2 - 1) * var_b) / (n1 + n2 - 2))
    if pooled == 0:
        raise ZeroVariance("pooled standard deviation is zero")
    return (mean_a - mean_b) / pooled


# ---------------------------------------------------------------------------
# Curves, grids, telemetry
# ---------------------------------------------------------------------------


def passn_curve(trajectories: list[Trajectory], length: int | None = None) -> list[float]:
    """Entry n-1 = fraction of trajectories solved within the first n
    submissions; non-decreasing by construction."""
    if not trajectories:
        raise NoResults("no trajectories")
    if length is None:
        length = max((t.max_attempts for t in trajectories), default=0)
        if length == 0:
            length = max((t.used_attempts for t in trajectories), default=1) or 1
    curve = []
    total = len(trajectories)
    for n in range(1, length + 1):
        solved = sum(
            1
            for t in trajectories
            if t.score == 1 and t.solved_at_attempt is not None and t.solved_at_attempt <= n
        )
        curve.append(solved / total)
    return curve


@dataclass
class GridTable:
    x_metric: str
    y_metric: str
    bins: list[dict]  # {x_center, y_center, count, success_rate}
    lines: list[dict]  # {label, intercept, coef_x, coef_y, eta_level}


def difficulty_grid(rows: list[ResultRow], x_metric: str, y_metric: str, bins: int, fit: LogisticFit) -> GridTable:
    """Binned success rates over two predictors plus the fit's zero-logit
    line and 75th/95th percentile predicted-difficulty contours (as line
    coefficients; rendering is downstream)."""
    if not rows:
        raise NoResults("no rows to bin")
    xs = np.array([row.predictors[x_metric] for row in rows])
    ys = np.array([row.predictors[y_metric] for row in rows])
    scores = np.array([row.score for row in rows], dtype=float)

    def edges(values: np.ndarray) -> np.ndarray:
        lo, hi = float(values.min()), float(values.max())
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        return np.linspace(lo, hi, bins + 1)

    x_edges = edges(xs)
    y_edges = edges(ys)
    table = []
    for i in range(bins):
        for j in range(bins):
            in_x = (xs >= x_edges[i]) & (xs <= x_edges[i + 1] if i == bins - 1 else xs < x_edges[i + 1])
            in_y = (ys >= y_edges[j]) & (ys <= y_edges[j + 1] if j == bins - 1 else ys < y_edges[j + 1])
            mask = in_x & in_y
            count = int(mask.sum())
            table.append(
                {
                    "x_center": float((x_edges[i] + x_edges[i + 1]) / 2.0),
                    "y_center": float((y_edges[j] + y_edges[j + 1]) / 2.0),
                    "count": count,
                    "success_rate": float(scores[mask].mean()) if count else None,
                }
            )

    beta0 = fit.coefficients["intercept"]["beta"]
    beta_x = fit.coefficients[x_metric]["beta"]
    beta_y = fit.coefficients[y_metric]["beta"]
    difficulties = []
    for row in rows:
        eta = fit.linear_predictor(row.predictors)
        difficulties.append(1.0 - 1.0 / (1.0 + math.exp(-eta)))
    lines = [{"label": "zero_logit", "intercept": beta0, "coef_x": beta_x, "coef_y": beta_y, "eta_level": 0.0}]
    for q, label in ((75, "difficulty_p75"), (95, "difficulty_p95")):
        level = float(np.percentile(difficulties, q))
        level = min(max(level, 1e-12), 1.0 - 1e-12)
        eta_level = math.log((1.0 - level) / level)  # success odds at that difficulty
        lines.append(
            {"label": label, "intercept": beta0, "coef_x": beta_x, "coef_y": beta_y, "eta_level": eta_level}
        )
    return GridTable(x_metric=x_metric, y_metric=y_metric, bins=table, lines=lines)


def telemetry_summary(trajectories: list[Trajectory]) -> list[dict]:
    """Per (label, mode): mean information calls, mean submissions, and mean
    per-tool call counts."""
    if not trajectories:
        raise NoResults("no trajectories")
    groups: dict[tuple[str, str], list[Trajectory]] = {}
    for trajectory in trajectories:
        groups.setdefault((trajectory.label, trajectory.mode), []).append(trajectory)
    tool_names = sorted({name for t in trajectories for name in t.tool_counts()})
    summary = []
    for (label, mode), members in sorted(groups.items()):
        n = len(members)
        row = {
            "label": label,
            "mode": mode,
            "n": n,
            "mean_info_calls": sum(t.used_tools for t in members) / n,
            "mean_submissions": sum(t.used_attempts for t in members) / n,
            "solve_rate": sum(t.score for t in members) / n,
        }
        for name in tool_names:
            row[f"tool_{name}"] = sum(t.tool_counts().get(name, 0) for t in members) / n
        summary.append(row)
    return summary


def bootstrap_ci(values: list[float], n_resamples: int = 1000, seed: int = 0, alpha: float = 0.05) -> tuple[float, float]:
    """Seeded percentile bootstrap interval for the mean."""
    if not values:
        raise NoResults("no values to resample")
    rng = random.Random(seed)
    n = len(values)
    means = []
    for _ in range(n_resamples):
        means.append(sum(rng.choice(values) for _ in range(n)) / n)
    means.sort()
    lo_index = int((alpha / 2.0) * n_resamples)
    hi_index = min(n_resamples - 1, int((1.0 - alpha / 2.0) * n_resamples))
    return means[lo_index], means[hi_index]


# ---------------------------------------------------------------------------
# Output files
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def write_results_csv(rows: list[ResultRow], path: Path) -> None:
    predictor_names = sorted({name for row in rows for name in row.predictors})
    tool_names = sorted({name for row in rows for name in row.tool_counts})
    header = ["task_id", "label", "mode", "score", "solved_at_attempt", "corruption_count", "info_calls", "submissions"]
    header += predictor_names + [f"tool_{name}" for name in tool_names]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in sorted(rows, key=lambda r: (r.task_id, r.label)):
            record = [
                row.task_id,
                row.label,
                row.mode,
                row.score,
                _fmt(row.solved_at_attempt),
                row.corruption_count,
                row.info_calls,
                row.submissions,
            ]
            record += [_fmt(row.predictors.get(name)) for name in predictor_names]
            record += [_fmt(row.tool_counts.get(name, 0)) for name in tool_names]
            writer.writerow(record)


def write_fit_json(fit: LogisticFit, path: Path) -> None:
    Path(path).write_text(json.dumps(fit.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_passn_csv(curve: list[float], path: Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["attempt", "cumulative_success_rate"])
        for i, rate in enumerate(curve, start=1):
            writer.writerow([i, _fmt(rate)])


def write_telemetry_csv(summary: list[dict], path: Path) -> None:
    if not summary:
        raise NoResults("empty telemetry summary")
    base = ["label", "mode", "n", "mean_info_calls", "mean_submissions", "solve_rate"]
    extra = sorted({key for row in summary for key in row if key not in base})
    header = base + extra
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in summary:
            writer.writerow([_fmt(row.get(key, "")) for key in header])


def write_grid_csv(grid: GridTable, path: Path) -> None:
    header = ["kind", "x_center", "y_center", "count", "success_rate", "label", "intercept", "coef_x", "coef_y", "eta_level"]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["# x_metric", grid.x_metric, "y_metric", grid.y_metric, "", "", "", "", "", ""])
        writer.writerow(header)
        for bin_row in grid.bins:
            writer.writerow(
                ["bin", _fmt(bin_row["x_center"]), _fmt(bin_row["y_center"]), bin_row["count"], _fmt(bin_row["success_rate"]), "", "", "", "", ""]
            )
        for line in grid.lines:
            writer.writerow(
                ["line", "", "", "", "", line["label"], _fmt(line["intercept"]), _fmt(line["coef_x"]), _fmt(line["coef_y"]), _fmt(line["eta_level"])]
            )
