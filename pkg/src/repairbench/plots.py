"""Figure rendering for the report path: PNG files next to the CSV tables."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .analysis import GridTable


def render_passn(curve: list[float], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    attempts = list(range(1, len(curve) + 1))
    ax.step(attempts, curve, where="post", marker="o")
    ax.set_xlabel("submission attempt")
    ax.set_ylabel("cumulative success rate")
    ax.set_ylim(-0.02, 1.02)
    ax.set_xticks(attempts)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_grid(grid: GridTable, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    xs = [b["x_center"] for b in grid.bins if b["count"]]
    ys = [b["y_center"] for b in grid.bins if b["count"]]
    rates = [b["success_rate"] for b in grid.bins if b["count"]]
    counts = [b["count"] for b in grid.bins if b["count"]]
    if xs:
        scatter = ax.scatter(
            xs,
            ys,
            c=rates,
            s=[30 + 30 * c for c in counts],
            cmap="RdYlGn",
            vmin=0.0,
            vmax=1.0,
            edgecolors="black",
            linewidths=0.4,
        )
        fig.colorbar(scatter, ax=ax, label="success rate")
        x_lo, x_hi = min(xs), max(xs)
        for line in grid.lines:
            coef_x, coef_y = line["coef_x"], line["coef_y"]
            level = line["eta_level"] - line["intercept"]
            if abs(coef_y) > 1e-12:
                y_lo = (level - coef_x * x_lo) / coef_y
                y_hi = (level - coef_x * x_hi) / coef_y
                ax.plot([x_lo, x_hi], [y_lo, y_hi], label=line["label"], linestyle="--", linewidth=1)
            elif abs(coef_x) > 1e-12:
                ax.axvline(level / coef_x, label=line["label"], linestyle="--", linewidth=1)
        if ys:
            pad = (max(ys) - min(ys)) * 0.2 + 0.5
            ax.set_ylim(min(ys) - pad, max(ys) + pad)
        ax.legend(fontsize=7)
    ax.set_xlabel(grid.x_metric)
    ax.set_ylabel(grid.y_metric)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_telemetry(summary: list[dict], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    labels = [f"{row['label']}/{row['mode']}" for row in summary]
    info = [row["mean_info_calls"] for row in summary]
    submissions = [row["mean_submissions"] for row in summary]
    positions = range(len(labels))
    width = 0.38
    ax.bar([p - width / 2 for p in positions], info, width=width, label="info calls")
    ax.bar([p + width / 2 for p in positions], submissions, width=width, label="submissions")
    ax.set_xticks(list(positions))
    ax.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("mean calls per task")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
