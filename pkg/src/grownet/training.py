"""Training loop: minibatching, patience schedule, logging, checkpoints.

The learning-rate schedule follows a three-stage patience rule: train at the
base rate until the monitored validation metric fails to improve for
``patience`` consecutive epochs, then multiply the base rate by the next
factor (defaults 0.3, then 0.1) and reset the counter; when patience runs out
with no factors left, training stops.  Improvement is strict, by any amount.
The monitored metric is the validation error rate, except for multilabel
tasks where it is validation Macro-F1.

Every epoch produces one EpochRecord; the log can be written as a CSV with
the fixed header

    epoch,train_error,train_loss,val_error,val_loss,macro_f1_train,
    macro_f1_val,total_soft_size,hard_size,effective_lr,layer_s_0,...

(one layer_s column per hidden layer; fields that do not apply to the
architecture are left empty).  Runs are deterministic: one seeded RNG drives
initialization, per-epoch shuffling, dropout, and tree growth, so identical
config and seed give byte-identical logs.

Checkpoints are single JSON documents holding the config echo, every
parameter tensor (row-major with shape metadata; budding trees as nested node
records with a "tied" marker instead of duplicated weights), and the RNG
state.  Floats survive the round trip bitwise.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .budding import BuddingNode
from .errors import ConfigError, NumericalError, ParseError, UsageError
from .losses import (confusion_counts, error_rate, highway_soft_sizes,
                     loss_and_grad, macro_f1, tunnel_soft_sizes)
from .networks import ARCHITECTURES, BuddingNet, LayeredNet
from .optim import Adam, Param
from .rng import Rng

FORMAT_VERSION = 1

LOG_COLUMNS = ("epoch", "train_error", "train_loss", "val_error", "val_loss",
               "macro_f1_train", "macro_f1_val", "total_soft_size", "hard_size",
               "effective_lr")

EVAL_CHUNK = 4096


@dataclass
class TrainConfig:
    """Hyperparameters of one training run."""

    architecture: str = "tunnel"
    hidden_width: int = 10
    max_layers: int = 10
    max_depth: int = 20
    base_lr: float = 0.003
    lambda_l1: float = 0.001
    l2_coeff: float = 1e-5
    dropout_p: float = 0.0
    batch_size: int = 1
    patience: int = 20
    lr_factors: list = field(default_factory=lambda: [0.3, 0.1])
    depth_decay: bool = True
    max_epochs: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ConfigError(
                f"unknown architecture '{self.architecture}', expected one of {ARCHITECTURES}"
            )
        if self.hidden_width < 1:
            raise ConfigError("hidden_width must be at least 1")
        if self.max_layers < 1:
            raise ConfigError("max_layers must be at least 1")
        if self.max_depth < 0:
            raise ConfigError("max_depth must be non-negative")
        if self.base_lr <= 0:
            raise ConfigError("base_lr must be positive")
        if self.lambda_l1 < 0 or self.l2_coeff < 0:
            raise ConfigError("penalty coefficients must be non-negative")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError("dropout_p must lie in [0, 1)")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if self.patience < 1:
            raise ConfigError("patience must be at least 1")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be at least 1")
        self.lr_factors = [float(f) for f in self.lr_factors]
        if any(f <= 0 for f in self.lr_factors):
            raise ConfigError("lr_factors must be positive")


class ScheduleState:
    """Patience counter over the monitored metric plus the current LR stage."""

    def __init__(self, patience, lr_factors, maximize=False):
        self.patience = patience
        self.lr_factors = list(lr_factors)
        self.maximize = maximize
        self.stage = 0
        self.epochs_since_best = 0
        self.best_metric = -np.inf if maximize else np.inf
        self.best_epoch = 0

    def factor(self):
        return 1.0 if self.stage == 0 else self.lr_factors[self.stage - 1]

    def observe(self, metric, epoch):
        """Record one epoch's monitored metric.

        Returns (improved, action) with action one of "continue", "advance"
        (stage just moved to the next factor), or "stop".
        """
        improved = metric > self.best_metric if self.maximize else metric < self.best_metric
        if improved:
            self.best_metric = metric
            self.best_epoch = epoch
            self.epochs_since_best = 0
            return True, "continue"
        self.epochs_since_best += 1
        if self.epochs_since_best >= self.patience:
            if self.stage < len(self.lr_factors):
                self.stage += 1
                self.epochs_since_best = 0
                return False, "advance"
            return False, "stop"
        return False, "continue"


@dataclass
class EpochRecord:
    epoch: int
    train_error: float
    train_loss: float
    val_error: float
    val_loss: float
    macro_f1_train: float = None
    macro_f1_val: float = None
    per_layer_soft_sizes: list = None
    total_soft_size: float = None
    hard_size: int = None
    effective_lr: float = None
    grew: int = 0
    pruned: int = 0
    diverged: bool = False


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def log_csv_lines(records, n_layer_columns):
    """Render EpochRecords as CSV lines under the fixed header."""
    header = ",".join(LOG_COLUMNS + tuple(f"layer_s_{i}" for i in range(n_layer_columns)))
    lines = [header]
    for r in records:
        cells = [_cell(r.epoch), _cell(r.train_error), _cell(r.train_loss),
                 _cell(r.val_error), _cell(r.val_loss), _cell(r.macro_f1_train),
                 _cell(r.macro_f1_val), _cell(r.total_soft_size), _cell(r.hard_size),
                 _cell(r.effective_lr)]
        per_layer = r.per_layer_soft_sizes or []
        for i in range(n_layer_columns):
            cells.append(_cell(per_layer[i]) if i < len(per_layer) else "")
        lines.append(",".join(cells))
    return lines


def write_log_csv(records, path, n_layer_columns):
    with open(path, "w", newline="") as handle:
        handle.write("\n".join(log_csv_lines(records, n_layer_columns)) + "\n")


def build_network(config, d_input, n_outputs, task_kind, rng):
    if config.architecture == "budding":
        return BuddingNet(d_input, config.hidden_width, n_outputs, task_kind, rng,
                          max_depth=config.max_depth, dropout_p=config.dropout_p)
    return LayeredNet(config.architecture, d_input, config.hidden_width,
                      config.max_layers, n_outputs, task_kind, rng,
                      dropout_p=config.dropout_p)


def dataset_metrics(net, dataset):
    """Evaluation-mode loss, error rate, and Macro-F1 over a whole dataset."""
    if len(dataset) == 0:
        raise UsageError("cannot evaluate on an empty dataset")
    chunks = [net.predict_proba(dataset.inputs[start:start + EVAL_CHUNK])
              for start in range(0, len(dataset), EVAL_CHUNK)]
    probabilities = np.vstack(chunks)
    kind = dataset.task_kind
    loss, _ = loss_and_grad(kind, probabilities, dataset.targets)
    return {
        "loss": loss,
        "error": error_rate(kind, probabilities, dataset.targets),
        "macro_f1": macro_f1(confusion_counts(kind, probabilities, dataset.targets)),
    }


def network_sizes(net, size_inputs):
    """(per_layer, total, hard) complexity for the net's architecture.

    Highway gates are averaged over size_inputs; architectures without a size
    notion return empty/None fields.
    """
    arch = net.architecture
    if arch == "tunnel":
        per_layer, total = tunnel_soft_sizes(net.hidden)
        return list(per_layer), total, None
    if arch == "highway":
        per_layer, total = highway_soft_sizes(net, size_inputs)
        return list(per_layer), total, None
    if arch == "budding":
        return [], net.tree.soft_size(), net.tree.hard_size()
    return [], None, None


def train(config, train_set, dev_set):
    """Run the full protocol; returns (best checkpoint payload, epoch log).

    The best checkpoint snapshots the model at each strict improvement of the
    monitored dev metric.  On divergence (non-finite loss or gradient) the
    run aborts with the last good checkpoint and a final record flagged
    diverged.
    """
    if train_set.task_kind != dev_set.task_kind:
        raise ConfigError("train and dev task kinds differ")
    if train_set.n_features != dev_set.n_features or train_set.n_outputs != dev_set.n_outputs:
        raise ConfigError("train and dev shapes differ")
    rng = Rng(config.seed)
    net = build_network(config, train_set.n_features, train_set.n_outputs,
                        train_set.task_kind, rng)
    opt = Adam(net.params, config.base_lr, config.lambda_l1, config.l2_coeff,
               config.depth_decay)
    maximize = train_set.task_kind == "multilabel"
    schedule = ScheduleState(config.patience, config.lr_factors, maximize)
    kind = train_set.task_kind
    is_budding = config.architecture == "budding"
    log = []
    best = None
    n = len(train_set)
    for epoch in range(1, config.max_epochs + 1):
        factor = schedule.factor()
        order = rng.permutation(n)
        try:
            for start in range(0, n, config.batch_size):
                idx = order[start:start + config.batch_size]
                net.zero_grads()
                probabilities, caches = net.forward(train_set.inputs[idx], train=True)
                loss, dlogits = loss_and_grad(kind, probabilities, train_set.targets[idx])
                if not np.isfinite(loss):
                    raise NumericalError("non-finite training loss")
                net.backward(dlogits, caches, rng)
                opt.step(factor)
                if is_budding:
                    net.grow(rng)
        except NumericalError:
            log.append(EpochRecord(epoch, np.nan, np.nan, np.nan, np.nan,
                                   effective_lr=config.base_lr * factor, diverged=True))
            break
        train_metrics = dataset_metrics(net, train_set)
        val_metrics = dataset_metrics(net, dev_set)
        per_layer, total, hard = network_sizes(net, dev_set.inputs)
        grew, pruned = opt.take_events()
        record = EpochRecord(
            epoch=epoch,
            train_error=train_metrics["error"], train_loss=train_metrics["loss"],
            val_error=val_metrics["error"], val_loss=val_metrics["loss"],
            macro_f1_train=train_metrics["macro_f1"], macro_f1_val=val_metrics["macro_f1"],
            per_layer_soft_sizes=per_layer, total_soft_size=total, hard_size=hard,
            effective_lr=config.base_lr * factor, grew=grew, pruned=pruned,
        )
        log.append(record)
        monitored = record.macro_f1_val if maximize else record.val_error
        improved, action = schedule.observe(monitored, epoch)
        if improved:
            best = checkpoint_payload(net, config, rng, epoch, record)
        if action == "stop":
            break
    return best, log


def evaluate(checkpoint, dataset):
    """Metrics of a checkpoint (or live network) on a dataset, evaluation mode."""
    net = network_from_payload(checkpoint) if isinstance(checkpoint, dict) else checkpoint
    if net.task_kind != dataset.task_kind:
        raise ConfigError(
            f"checkpoint task '{net.task_kind}' does not match dataset '{dataset.task_kind}'"
        )
    if net.d_input != dataset.n_features or net.n_outputs != dataset.n_outputs:
        raise ConfigError("checkpoint and dataset shapes differ")
    metrics = dataset_metrics(net, dataset)
    per_layer, total, hard = network_sizes(net, dataset.inputs)
    metrics["per_layer_soft_sizes"] = per_layer
    metrics["total_soft_size"] = total
    metrics["hard_size"] = hard
    return metrics


# -- checkpoint serialization ------------------------------------------------


def _array_record(value):
    return {"shape": list(value.shape), "data": value.ravel().tolist()}


def _array_from_record(record, what):
    try:
        arr = np.array(record["data"], dtype=np.float64).reshape(record["shape"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed array record for {what}: {exc}") from None
    return arr


def _tree_record(node):
    record = {"gamma": float(node.gamma.value[0]), "tied": node.left_tied}
    if not node.left_tied:
        record["W"] = _array_record(node.W.value)
        record["b"] = _array_record(node.b.value)
    if node.left is not None:
        record["children"] = [_tree_record(node.left), _tree_record(node.right)]
    return record


def _tree_from_record(record, name, k, activation, depth, parent):
    tied = bool(record.get("tied", False))
    if tied:
        if parent is None:
            raise ParseError("root node cannot be weight-tied")
        weight, bias = parent.W, parent.b
    else:
        weight = Param(f"{name}.W", _array_from_record(record["W"], f"{name}.W"), "weight", depth)
        bias = Param(f"{name}.b", _array_from_record(record["b"], f"{name}.b"), "bias", depth)
    node = BuddingNode(name, k, activation=activation, depth=depth,
                       weight=weight, bias=bias, left_tied=tied)
    node.gamma.value[0] = float(record["gamma"])
    children = record.get("children")
    if children is not None:
        node.left = _tree_from_record(children[0], f"{name}.L", k, activation, depth + 1, node)
        node.right = _tree_from_record(children[1], f"{name}.R", k, activation, depth + 1, node)
    return node


def checkpoint_payload(net, config, rng, best_epoch=None, record=None):
    """Serializable snapshot of a network plus its run context."""
    payload = {
        "format_version": FORMAT_VERSION,
        "config": asdict(config),
        "architecture": net.architecture,
        "task_kind": net.task_kind,
        "dims": {"d_input": net.d_input, "k": net.k, "n_outputs": net.n_outputs},
        "activation": net.activation,
        "dropout_p": net.dropout.rate,
        "rng_state": rng.state(),
        "best_epoch": best_epoch,
    }
    if record is not None:
        payload["metrics"] = {
            "train_error": record.train_error, "train_loss": record.train_loss,
            "val_error": record.val_error, "val_loss": record.val_loss,
            "macro_f1_train": record.macro_f1_train, "macro_f1_val": record.macro_f1_val,
            "total_soft_size": record.total_soft_size, "hard_size": record.hard_size,
        }
    if net.architecture == "budding":
        payload["dims"]["max_depth"] = net.tree.max_depth
        payload["params"] = {p.name: _array_record(p.value)
                             for p in net.projection.params() + net.output.params()}
        payload["tree"] = _tree_record(net.tree.root)
    else:
        payload["dims"]["n_layers"] = net.n_layers
        payload["params"] = {p.name: _array_record(p.value) for p in net.params()}
    return payload


def network_from_payload(payload):
    """Rebuild a network from a checkpoint payload."""
    if payload.get("format_version") != FORMAT_VERSION:
        raise ConfigError(
            f"unknown checkpoint format_version {payload.get('format_version')!r}, "
            f"this build reads version {FORMAT_VERSION}"
        )
    dims = payload["dims"]
    arch = payload["architecture"]
    scratch = Rng(0)  # values are overwritten below
    if arch == "budding":
        net = BuddingNet(dims["d_input"], dims["k"], dims["n_outputs"],
                         payload["task_kind"], scratch, max_depth=dims["max_depth"],
                         dropout_p=payload.get("dropout_p", 0.0),
                         activation=payload.get("activation", "relu"))
        net.tree.root = _tree_from_record(payload["tree"], "root", dims["k"],
                                          net.activation, 0, None)
        to_fill = net.projection.params() + net.output.params()
    else:
        net = LayeredNet(arch, dims["d_input"], dims["k"], dims["n_layers"],
                         dims["n_outputs"], payload["task_kind"], scratch,
                         dropout_p=payload.get("dropout_p", 0.0),
                         activation=payload.get("activation", "relu"))
        to_fill = net.params()
    stored = payload["params"]
    for p in to_fill:
        if p.name not in stored:
            raise ParseError(f"checkpoint is missing parameter '{p.name}'")
        value = _array_from_record(stored[p.name], p.name)
        if value.shape != p.value.shape:
            raise ParseError(
                f"parameter '{p.name}' has shape {value.shape}, expected {p.value.shape}"
            )
        p.value[...] = value
    return net


def save_checkpoint(payload, path):
    with open(path, "w") as handle:
        json.dump(payload, handle)


def load_checkpoint(path):
    try:
        with open(path) as handle:
            payload = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(payload, dict) or "format_version" not in payload:
        raise ParseError(f"{path}: not a checkpoint document")
    if payload["format_version"] != FORMAT_VERSION:
        raise ConfigError(
            f"{path}: unknown checkpoint format_version {payload['format_version']!r}"
        )
    return payload
