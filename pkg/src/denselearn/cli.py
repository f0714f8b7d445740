"""Command-line interface: `train` one configuration, `sweep` a grid, `emit`
the CSV summaries from a sweep result. MNIST comes from --mnist-dir, the
MNIST_DIR environment variable, or ./data/mnist."""

import argparse
import json
import os
import sys

from . import mnist, sweep, trainer
from .network import NetworkSpec


def _mnist_dir(args) -> str:
    directory = args.mnist_dir or os.environ.get("MNIST_DIR") or "data/mnist"
    if not os.path.isdir(directory):
        sys.exit(f"MNIST directory not found: {directory} "
                 "(set --mnist-dir or MNIST_DIR)")
    return directory


def _load_split(args):
    train_file, test_file = mnist.load_mnist(_mnist_dir(args))
    return mnist.split(train_file, test_file)


def _train_config(args) -> trainer.TrainConfig:
    if args.config:
        with open(args.config) as f:
            return trainer.config_from_dict(json.load(f))
    input_shape = (784,) if args.family == "mlp" else (1, 28, 28)
    spec = NetworkSpec(family=args.family, dense=args.dense, depth=args.depth,
                       hidden_units=args.hidden_units, channels=args.channels,
                       activation=args.activation, input_shape=input_shape,
                       init_seed=args.seed)
    return trainer.TrainConfig(
        rule=args.rule, spec=spec, learning_rate=args.lr,
        decoder_learning_rate=args.decoder_lr, weight_decay=args.weight_decay,
        batch_size=args.batch_size, max_iterations=args.max_iterations,
        early_stop_start=args.early_stop_start, eval_interval=args.eval_interval,
        patience=args.patience, seed=args.seed, target_step=args.target_step,
        noise_std=args.noise_std)


def cmd_train(args):
    config = _train_config(args)
    data = _load_split(args)
    os.makedirs(args.out, exist_ok=True)
    checkpoint = os.path.join(args.out, "params.bin") if args.save_params else None
    record = trainer.train_run(config, data, checkpoint_path=checkpoint)
    trainer.save_record(record, os.path.join(args.out, "run.json"))
    print(f"stopped at {record.stopped_at}, best val {record.best_val_accuracy:.4f}, "
          f"test {record.test_accuracy:.4f}")


def cmd_sweep(args):
    grid = sweep.paper_grid(args.rule, args.family, args.dense, args.activation,
                            folds=args.folds, base_seed=args.base_seed)
    overrides = {}
    if args.depths:
        overrides["depth_list"] = tuple(args.depths)
    if args.lrs:
        overrides["learning_rate_list"] = tuple(args.lrs)
    if args.early_stops:
        overrides["early_stop_list"] = tuple(args.early_stops)
    if args.max_iterations:
        overrides["max_iterations"] = args.max_iterations
    if args.target_step is not None:
        overrides["target_step"] = args.target_step
    if overrides:
        grid = sweep.grid_from_dict({**sweep.grid_to_dict(grid),
                                     **{k: list(v) if isinstance(v, tuple) else v
                                        for k, v in overrides.items()}})
    data = _load_split(args)
    os.makedirs(args.out, exist_ok=True)
    manifest = {
        "grid": sweep.grid_to_dict(grid),
        "scale": args.scale,
        "seeds": [grid.base_seed + k for k in range(grid.folds)],
    }
    with open(os.path.join(args.out, "manifest.json"), "w") as f:
        json.dump(manifest, f, sort_keys=True, indent=2)
        f.write("\n")
    result = sweep.run_sweep(grid, data, scale=args.scale, workers=args.workers)
    sweep.save_result(result, os.path.join(args.out, "sweep_result.json"))
    ok = sum(1 for e in result.records if e["status"] == "ok")
    print(f"{ok}/{len(result.records)} runs ok; selection over "
          f"{len(result.selection)} depths written to {args.out}")


def cmd_emit(args):
    result = sweep.load_result(args.result)
    os.makedirs(args.out, exist_ok=True)
    depth_path = os.path.join(args.out, "depth_curve.csv")
    robust_path = os.path.join(args.out, "robustness_curve.csv")
    with open(depth_path, "w") as f:
        f.write(sweep.emit_depth_curve(result))
    with open(robust_path, "w") as f:
        f.write(sweep.emit_robustness_curve(result))
    print(f"wrote {depth_path} and {robust_path}")


def _add_common(p):
    p.add_argument("--mnist-dir", default=None)
    p.add_argument("--out", default="out")


def build_parser():
    parser = argparse.ArgumentParser(prog="denselearn")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="run one training configuration")
    t.add_argument("--config", help="TrainConfig JSON file (overrides flags)")
    t.add_argument("--rule", choices=trainer.RULES, default="bp")
    t.add_argument("--family", choices=("mlp", "conv"), default="mlp")
    t.add_argument("--dense", action="store_true")
    t.add_argument("--activation", choices=("sigmoid", "relu"), default="sigmoid")
    t.add_argument("--depth", type=int, default=3)
    t.add_argument("--hidden-units", type=int, default=128)
    t.add_argument("--channels", type=int, default=16)
    t.add_argument("--lr", type=float, default=0.1)
    t.add_argument("--decoder-lr", type=float, default=None)
    t.add_argument("--weight-decay", type=float, default=1e-5)
    t.add_argument("--batch-size", type=int, default=128)
    t.add_argument("--max-iterations", type=int, default=20000)
    t.add_argument("--early-stop-start", type=int, default=20000)
    t.add_argument("--eval-interval", type=int, default=1000)
    t.add_argument("--patience", type=int, default=10)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--target-step", type=float, default=None)
    t.add_argument("--noise-std", type=float, default=0.1)
    t.add_argument("--save-params", action="store_true")
    _add_common(t)
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("sweep", help="run a hyperparameter grid")
    s.add_argument("--rule", choices=trainer.RULES, required=True)
    s.add_argument("--family", choices=("mlp", "conv"), required=True)
    s.add_argument("--dense", action="store_true")
    s.add_argument("--activation", choices=("sigmoid", "relu"), required=True)
    s.add_argument("--scale", type=float, default=1.0)
    s.add_argument("--folds", type=int, default=10)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--base-seed", type=int, default=0)
    s.add_argument("--depths", type=int, nargs="+", default=None)
    s.add_argument("--lrs", type=float, nargs="+", default=None)
    s.add_argument("--early-stops", type=int, nargs="+", default=None)
    s.add_argument("--max-iterations", type=int, default=None)
    s.add_argument("--target-step", type=float, default=None)
    _add_common(s)
    s.set_defaults(func=cmd_sweep)

    e = sub.add_parser("emit", help="write the two CSV summaries for a sweep")
    e.add_argument("--result", required=True, help="sweep_result.json path")
    e.add_argument("--out", default="out")
    e.set_defaults(func=cmd_emit)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()
