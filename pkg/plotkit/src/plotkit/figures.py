"""Figure builders for the two sweep-CSV schemas.

Depth curves: one line per (rule, dense) series found in each CSV, accuracy vs
depth with a std band. Robustness curves: one monotone non-increasing line per
CSV, accuracy vs rank over hyperparameter combinations. Dense series draw in
blues, plain series in reds, following the paper-figure convention.
"""

import csv
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

DEPTH_COLUMNS = ("rule", "family", "dense", "activation", "depth",
                 "mean_test_acc", "std_test_acc")
ROBUSTNESS_COLUMNS = ("rank", "rule", "family", "dense", "activation", "depth",
                      "learning_rate", "early_stop", "mean_test_acc")

_DENSE_COLORS = ("#1f77b4", "#4a90d9", "#7fb3e8")  # blues
_PLAIN_COLORS = ("#d62728", "#e8663a", "#f09d66")  # reds


@dataclass
class FigureSpec:
    csv_paths: list
    out_path: str
    title: str = ""
    xlabel: str = ""
    ylabel: str = "test accuracy"

    def __post_init__(self):
        if not self.csv_paths:
            raise ValueError("at least one CSV path is required")


class SchemaError(ValueError):
    pass


def read_rows(path: str, required: tuple) -> list:
    """Read a CSV and check it against one of the emit schemas; raises
    SchemaError naming the first missing column."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        for column in required:
            if column not in header:
                raise SchemaError(f"{path}: missing required column {column!r} "
                                  f"(found {header})")
        return list(reader)


def _series_label(rule: str, family: str, dense: str) -> str:
    if family == "conv":
        arch = "DenseConv" if dense == "true" else "ConvNet"
    else:
        arch = "DN" if dense == "true" else "NN"
    return f"{rule.upper()} {arch}"


def _style(dense: str, index: int):
    palette = _DENSE_COLORS if dense == "true" else _PLAIN_COLORS
    return palette[index % len(palette)]


def build_depth_figure(figure: FigureSpec):
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    counts = {"true": 0, "false": 0}
    all_depths = set()
    for path in figure.csv_paths:
        rows = read_rows(path, DEPTH_COLUMNS)
        groups = {}
        for row in rows:
            groups.setdefault((row["rule"], row["family"], row["dense"]), []).append(row)
        for (rule, family, dense), series in sorted(groups.items()):
            series.sort(key=lambda r: int(r["depth"]))
            depths = np.array([int(r["depth"]) for r in series])
            means = np.array([float(r["mean_test_acc"]) for r in series])
            stds = np.array([float(r["std_test_acc"]) for r in series])
            color = _style(dense, counts.get(dense, 0))
            counts[dense] = counts.get(dense, 0) + 1
            ax.plot(depths, means, marker="o", color=color,
                    label=_series_label(rule, family, dense))
            ax.fill_between(depths, means - stds, means + stds, color=color, alpha=0.15)
            all_depths.update(depths.tolist())
    ax.set_xlabel(figure.xlabel or "network depth")
    ax.set_ylabel(figure.ylabel)
    if figure.title:
        ax.set_title(figure.title)
    if all_depths:
        ax.set_xticks(sorted(all_depths))
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def build_robustness_figure(figure: FigureSpec):
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    counts = {"true": 0, "false": 0}
    for path in figure.csv_paths:
        rows = read_rows(path, ROBUSTNESS_COLUMNS)
        if not rows:
            continue
        accs = sorted((float(r["mean_test_acc"]) for r in rows), reverse=True)
        rule, family, dense = rows[0]["rule"], rows[0]["family"], rows[0]["dense"]
        color = _style(dense, counts.get(dense, 0))
        counts[dense] = counts.get(dense, 0) + 1
        ax.plot(np.arange(1, len(accs) + 1), accs, marker=".", color=color,
                label=_series_label(rule, family, dense))
    ax.set_xlabel(figure.xlabel or "hyperparameter combination (sorted)")
    ax.set_ylabel(figure.ylabel)
    if figure.title:
        ax.set_title(figure.title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def _save(fig, out_path: str) -> str:
    out_dir = os.path.dirname(os.path.abspath(out_path))
    os.makedirs(out_dir, exist_ok=True)
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def plot_depth(figure: FigureSpec) -> str:
    """Render the accuracy-vs-depth figure; returns the image path."""
    return _save(build_depth_figure(figure), figure.out_path)


def plot_robustness(figure: FigureSpec) -> str:
    """Render the sorted-robustness figure; returns the image path."""
    return _save(build_robustness_figure(figure), figure.out_path)
