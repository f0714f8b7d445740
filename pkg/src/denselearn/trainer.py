"""SGD training loop with L2 weight decay, periodic validation, and
delayed-start early stopping.

Early stopping is disabled until `early_stop_start` iterations have run; after
that, training stops once validation accuracy has not improved for `patience`
consecutive evaluations. The reported test accuracy always comes from the
best-validation checkpoint, not the final parameters.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import ops, rules
from .mnist import Dataset, batches
from .network import NetworkSpec, ParameterSet, build_network, forward
from .rng import RngStream, derive_seed

RULES = ("bp", "fa", "dtp")

# tags for sub-seeds derived from TrainConfig.seed
_TAG_FEEDBACK = 1
_TAG_DECODERS = 2
_TAG_NOISE = 3
_TAG_SHUFFLE = 4


@dataclass(frozen=True)
class TrainConfig:
    rule: str
    spec: NetworkSpec
    learning_rate: float
    decoder_learning_rate: float | None = None  # dtp; defaults to learning_rate
    weight_decay: float = 1e-5
    batch_size: int = 128
    max_iterations: int = 10000
    early_stop_start: int = 10000
    eval_interval: int = 1000
    patience: int = 10
    seed: int = 0
    target_step: float | None = None  # dtp; defaults to 0.5 * learning_rate
    noise_std: float = 0.1  # dtp reconstruction corruption

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"unknown rule {self.rule!r}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.early_stop_start > self.max_iterations:
            raise ValueError(f"early_stop_start {self.early_stop_start} exceeds "
                             f"max_iterations {self.max_iterations}")


@dataclass
class RunRecord:
    config: TrainConfig
    history: list = field(default_factory=list)  # (iteration, train_loss, val_accuracy)
    stopped_at: int = 0
    best_val_accuracy: float = 0.0
    test_accuracy: float = 0.0


def config_to_dict(config: TrainConfig) -> dict:
    d = asdict(config)
    d["spec"]["input_shape"] = list(config.spec.input_shape)
    return d


def config_from_dict(d: dict) -> TrainConfig:
    d = dict(d)
    spec = dict(d.pop("spec"))
    spec["input_shape"] = tuple(spec["input_shape"])
    return TrainConfig(spec=NetworkSpec(**spec), **d)


def record_to_dict(record: RunRecord) -> dict:
    return {
        "config": config_to_dict(record.config),
        "history": [[int(i), float(l), float(a)] for i, l, a in record.history],
        "stopped_at": int(record.stopped_at),
        "best_val_accuracy": float(record.best_val_accuracy),
        "test_accuracy": float(record.test_accuracy),
    }


def record_from_dict(d: dict) -> RunRecord:
    return RunRecord(
        config=config_from_dict(d["config"]),
        history=[(int(i), float(l), float(a)) for i, l, a in d["history"]],
        stopped_at=int(d["stopped_at"]),
        best_val_accuracy=float(d["best_val_accuracy"]),
        test_accuracy=float(d["test_accuracy"]),
    )


def save_record(record: RunRecord, path: str):
    with open(path, "w") as f:
        json.dump(record_to_dict(record), f, sort_keys=True, indent=2)
        f.write("\n")


def sgd_step(params, grads, learning_rate: float, weight_decay: float = 0.0):
    """theta <- theta - lr * (grad + weight_decay * theta), elementwise, for
    every array in the container. Returns a new container of the same type."""
    pd, gd = params.as_dict(), grads.as_dict()
    if set(pd) != set(gd):
        missing = set(pd) ^ set(gd)
        raise ValueError(f"parameter/gradient key mismatch: {sorted(missing)}")
    updated = {k: pd[k] - learning_rate * (gd[k] + weight_decay * pd[k]) for k in pd}
    return type(params).from_dict(updated)


def _batch_input(spec: NetworkSpec, images: np.ndarray) -> np.ndarray:
    return images.reshape(images.shape[0], -1) if spec.family == "mlp" else images


def evaluate(spec: NetworkSpec, params: ParameterSet, data: Dataset,
             chunk: int = 1000) -> float:
    """Fraction of examples whose argmax logit equals the label (argmax takes
    the lowest class index on ties)."""
    correct = 0
    for start in range(0, len(data), chunk):
        stop = min(start + chunk, len(data))
        x = _batch_input(spec, data.images[start:stop])
        logits = forward(spec, params, x).logits
        correct += int((np.argmax(logits, axis=1) == data.labels[start:stop]).sum())
    return correct / len(data) if len(data) else 0.0


def _infinite_batches(data: Dataset, batch_size: int, seed: int):
    epoch = 0
    while True:
        yield from batches(data, batch_size, derive_seed(seed, _TAG_SHUFFLE, epoch))
        epoch += 1


def train_run(config: TrainConfig, data, checkpoint_path: str | None = None) -> RunRecord:
    """Run one training configuration to completion.

    `data` is the (train, val, test) Dataset triple. The whole run is a pure
    function of (config, data): parameters come from spec.init_seed, all other
    randomness (feedback draws, decoder init, corruption noise, shuffling) is
    derived from config.seed. If `checkpoint_path` is given, the best-validation
    parameters are written there in the checkpoint format.
    """
    train, val, test = data
    spec = config.spec
    params = build_network(spec)

    feedback = None
    decoders = None
    noise_stream = None
    if config.rule == "fa":
        feedback = rules.build_feedback(spec, derive_seed(config.seed, _TAG_FEEDBACK))
    elif config.rule == "dtp":
        decoders = rules.build_decoders(spec, derive_seed(config.seed, _TAG_DECODERS))
        noise_stream = RngStream(derive_seed(config.seed, _TAG_NOISE))
    decoder_lr = (config.decoder_learning_rate
                  if config.decoder_learning_rate is not None else config.learning_rate)
    target_step = (config.target_step
                   if config.target_step is not None else 0.5 * config.learning_rate)

    record = RunRecord(config=config)
    best_val = -1.0
    best_params = params.copy()
    evals_since_best = 0
    iteration = 0
    batch_iter = _infinite_batches(train, config.batch_size, config.seed)

    while iteration < config.max_iterations:
        images, labels = next(batch_iter)
        x = _batch_input(spec, images)
        trace = forward(spec, params, x)
        loss, _ = ops.softmax_xent(trace.logits, labels)

        if config.rule == "bp":
            grads = rules.bp_backward(spec, params, trace, labels)
        elif config.rule == "fa":
            grads = rules.fa_backward(spec, params, feedback, trace, labels)
        else:
            dec_grads = rules.dtp_decoder_grads(spec, params, decoders, trace,
                                                config.noise_std, noise_stream)
            decoders = sgd_step(decoders, dec_grads, decoder_lr, config.weight_decay)
            targets = rules.dtp_targets(spec, params, decoders, trace, labels, target_step)
            grads = rules.dtp_forward_grads(spec, params, trace, targets)
        params = sgd_step(params, grads, config.learning_rate, config.weight_decay)
        iteration += 1

        if iteration % config.eval_interval == 0:
            val_acc = evaluate(spec, params, val)
            record.history.append((iteration, loss, val_acc))
            if val_acc > best_val:
                best_val = val_acc
                best_params = params.copy()
                evals_since_best = 0
            else:
                evals_since_best += 1
            if iteration >= config.early_stop_start and evals_since_best >= config.patience:
                break

    record.stopped_at = iteration
    if best_val < 0:  # no evaluation ever ran (max_iterations < eval_interval)
        best_val = evaluate(spec, params, val) if len(val) else 0.0
        best_params = params
    record.best_val_accuracy = best_val
    record.test_accuracy = evaluate(spec, best_params, test)
    if checkpoint_path is not None:
        from .network import save_params
        save_params(best_params, checkpoint_path)
    return record
