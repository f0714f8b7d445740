"""Hyperparameter-grid execution and aggregation.

A grid is (depths x learning rates x early-stop points); every config runs
`folds` times (fold k uses seed base_seed + k, varying init, feedback/decoder
draws, noise, and shuffling while the data split stays fixed). Per depth, the
config with the best mean validation accuracy across folds is selected and its
test accuracies reported. Two CSV emitters summarize a sweep: accuracy vs depth
for the selected configs, and the sorted per-config robustness curve.
"""

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import multiprocessing as mp
import numpy as np

from .network import NetworkSpec
from .trainer import TrainConfig, record_from_dict, record_to_dict, train_run

SIGMOID_DEPTHS = (3, 4, 5, 6, 7)
RELU_DEPTHS = (5, 6, 7, 8, 9, 10)
MLP_EARLY_STOPS = (200_000, 400_000, 600_000, 800_000, 1_000_000)
CONV_EARLY_STOPS = {
    "bp": (100_000, 200_000, 300_000),
    "fa": (600_000, 800_000, 1_000_000),
    "dtp": (50_000, 100_000, 150_000),
}
LEARNING_RATES = {
    ("bp", "sigmoid"): (0.1, 0.01, 0.001),
    ("fa", "sigmoid"): (0.01, 0.001, 0.0001),
    ("dtp", "sigmoid"): (0.01, 0.001, 0.0001),
    ("bp", "relu"): (0.001, 0.0001, 0.00001),
    ("fa", "relu"): (0.001, 0.0001, 0.00001),
    ("dtp", "relu"): (0.001, 0.0001, 0.00001),
}


@dataclass(frozen=True)
class GridSpec:
    rule: str
    family: str
    dense: bool
    activation: str
    depth_list: tuple
    learning_rate_list: tuple
    early_stop_list: tuple
    folds: int = 10
    base_seed: int = 0
    max_iterations: int = 1_200_000
    target_step: float | None = None  # dtp output-target step override

    def __post_init__(self):
        for name in ("depth_list", "learning_rate_list", "early_stop_list"):
            value = tuple(getattr(self, name))
            if not value:
                raise ValueError(f"{name} must be non-empty")
            object.__setattr__(self, name, value)
        if self.folds < 1:
            raise ValueError(f"folds must be >= 1, got {self.folds}")

    def configs(self):
        """(depth, learning_rate, early_stop) triples in canonical order."""
        return [(d, lr, es) for d in self.depth_list
                for lr in self.learning_rate_list
                for es in self.early_stop_list]


def paper_grid(rule: str, family: str, dense: bool, activation: str,
               folds: int = 10, base_seed: int = 0) -> GridSpec:
    """The published search space for one (rule, family, dense, activation) cell."""
    depths = SIGMOID_DEPTHS if activation == "sigmoid" else RELU_DEPTHS
    lrs = LEARNING_RATES[(rule, activation)]
    early = MLP_EARLY_STOPS if family == "mlp" else CONV_EARLY_STOPS[rule]
    return GridSpec(rule=rule, family=family, dense=dense, activation=activation,
                    depth_list=depths, learning_rate_list=lrs, early_stop_list=early,
                    folds=folds, base_seed=base_seed)


@dataclass
class SweepResult:
    grid: GridSpec
    scale: float
    records: list = field(default_factory=list)  # one entry per (config, fold)
    selection: dict = field(default_factory=dict)  # depth -> summary


def build_config(grid: GridSpec, depth: int, learning_rate: float, early_stop: int,
                 fold: int, scale: float) -> TrainConfig:
    seed = grid.base_seed + fold
    input_shape = (784,) if grid.family == "mlp" else (1, 28, 28)
    spec = NetworkSpec(family=grid.family, dense=grid.dense, depth=depth,
                       activation=grid.activation, input_shape=input_shape,
                       init_seed=seed)
    max_iterations = max(1, round(scale * grid.max_iterations))
    early_start = min(max_iterations, max(1, round(scale * early_stop)))
    return TrainConfig(rule=grid.rule, spec=spec, learning_rate=learning_rate,
                       max_iterations=max_iterations, early_stop_start=early_start,
                       seed=seed, target_step=grid.target_step)


_WORKER_DATA = None


def _set_worker_data(data):
    global _WORKER_DATA
    _WORKER_DATA = data


def _run_task(task):
    grid, depth, lr, early, fold, scale = task
    config = build_config(grid, depth, lr, early, fold, scale)
    entry = {"depth": depth, "learning_rate": lr, "early_stop": early,
             "fold": fold, "seed": config.seed}
    try:
        record = train_run(config, _WORKER_DATA)
        entry.update(status="ok", record=record, error=None)
    except Exception as exc:  # recorded, never silently dropped
        entry.update(status="failed", record=None, error=f"{type(exc).__name__}: {exc}")
    return entry


def run_sweep(grid: GridSpec, data, scale: float = 1.0, workers: int = 1) -> SweepResult:
    """Execute every (config, fold) run and select per-depth winners.

    `scale` in (0, 1] multiplies max_iterations and the early-stop points so the
    full protocol can be shrunk to desk scale; the result is a pure function of
    (grid, data, scale).
    """
    if not (0 < scale <= 1):
        raise ValueError(f"scale must lie in (0, 1], got {scale}")
    tasks = [(grid, d, lr, es, fold, scale)
             for (d, lr, es) in grid.configs() for fold in range(grid.folds)]
    _set_worker_data(data)
    if workers > 1:
        ctx = mp.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            records = list(pool.map(_run_task, tasks))
    else:
        records = [_run_task(t) for t in tasks]
    result = SweepResult(grid=grid, scale=scale, records=records)
    result.selection = _select(grid, records)
    return result


def _select(grid: GridSpec, records: list) -> dict:
    by_config = {}
    for entry in records:
        key = (entry["depth"], entry["learning_rate"], entry["early_stop"])
        by_config.setdefault(key, []).append(entry)
    selection = {}
    for depth in grid.depth_list:
        best = None
        for lr in grid.learning_rate_list:
            for es in grid.early_stop_list:
                folds = by_config.get((depth, lr, es), [])
                if any(e["status"] != "ok" for e in folds) or not folds:
                    continue
                mean_val = float(np.mean([e["record"].best_val_accuracy for e in folds]))
                key = (-mean_val, lr, es)
                if best is None or key < best[0]:
                    best = (key, lr, es, mean_val, folds)
        if best is None:
            continue
        _, lr, es, mean_val, folds = best
        test_accs = [e["record"].test_accuracy for e in sorted(folds, key=lambda e: e["fold"])]
        selection[depth] = {
            "learning_rate": lr,
            "early_stop": es,
            "mean_val_accuracy": mean_val,
            "mean_test_accuracy": float(np.mean(test_accs)),
            "std_test_accuracy": float(np.std(test_accs)),
            "fold_test_accuracies": [float(a) for a in test_accs],
        }
    return selection


# ---------------------------------------------------------------------------
# Serialization (deterministic: sorted keys, repr-exact floats, no timestamps)


def grid_to_dict(grid: GridSpec) -> dict:
    d = asdict(grid)
    for name in ("depth_list", "learning_rate_list", "early_stop_list"):
        d[name] = list(d[name])
    return d


def grid_from_dict(d: dict) -> GridSpec:
    d = dict(d)
    for name in ("depth_list", "learning_rate_list", "early_stop_list"):
        d[name] = tuple(d[name])
    return GridSpec(**d)


def result_to_dict(result: SweepResult) -> dict:
    records = []
    for e in result.records:
        entry = dict(e)
        entry["record"] = record_to_dict(e["record"]) if e["record"] is not None else None
        records.append(entry)
    return {
        "grid": grid_to_dict(result.grid),
        "scale": result.scale,
        "records": records,
        "selection": {str(d): s for d, s in result.selection.items()},
    }


def result_from_dict(d: dict) -> SweepResult:
    records = []
    for e in d["records"]:
        entry = dict(e)
        entry["record"] = record_from_dict(e["record"]) if e["record"] is not None else None
        records.append(entry)
    return SweepResult(grid=grid_from_dict(d["grid"]), scale=d["scale"],
                       records=records,
                       selection={int(k): v for k, v in d["selection"].items()})


def save_result(result: SweepResult, path: str):
    with open(path, "w") as f:
        json.dump(result_to_dict(result), f, sort_keys=True, indent=2)
        f.write("\n")


def load_result(path: str) -> SweepResult:
    with open(path) as f:
        return result_from_dict(json.load(f))


# ---------------------------------------------------------------------------
# CSV emitters (schemas consumed by the plot kit; see README)

DEPTH_CURVE_COLUMNS = ["rule", "family", "dense", "activation", "depth",
                       "mean_test_acc", "std_test_acc"]
ROBUSTNESS_COLUMNS = ["rank", "rule", "family", "dense", "activation", "depth",
                      "learning_rate", "early_stop", "mean_test_acc"]


def _series_fields(grid: GridSpec):
    return [grid.rule, grid.family, "true" if grid.dense else "false", grid.activation]


def emit_depth_curve(result: SweepResult) -> str:
    """One row per depth (sorted): the selected config's mean/std test accuracy."""
    if not result.selection:
        raise ValueError("sweep selection is empty; nothing to emit")
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(DEPTH_CURVE_COLUMNS)
    for depth in sorted(result.selection):
        s = result.selection[depth]
        writer.writerow(_series_fields(result.grid)
                        + [depth, repr(s["mean_test_accuracy"]), repr(s["std_test_accuracy"])])
    return buf.getvalue()


def emit_robustness_curve(result: SweepResult) -> str:
    """One row per config, ranked by fold-mean test accuracy, descending."""
    by_config = {}
    for e in result.records:
        if e["status"] != "ok":
            continue
        key = (e["depth"], e["learning_rate"], e["early_stop"])
        by_config.setdefault(key, []).append(e["record"].test_accuracy)
    rows = [(float(np.mean(accs)), key) for key, accs in by_config.items()]
    rows.sort(key=lambda r: (-r[0], r[1]))
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(ROBUSTNESS_COLUMNS)
    for rank, (acc, (depth, lr, es)) in enumerate(rows, start=1):
        writer.writerow([rank] + _series_fields(result.grid)
                        + [depth, repr(lr), es, repr(acc)])
    return buf.getvalue()
