"""Command-line interface: gen-spirals, train, eval.

Config precedence for train: command-line flags override values from an
optional JSON config file (fields named as in TrainConfig), which override
the built-in defaults.  Every run writes the resolved config next to its
outputs so the run directory is self-describing.
"""

import argparse
import json
import os
import sys

import numpy as np

from .data import (SpiralSpec, filter_binary_mnist, generate_two_spirals,
                   load_mnist_idx, load_multilabel_csv, split_train_validation)
from .errors import GrownetError, UsageError
from .training import (TrainConfig, evaluate, load_checkpoint, network_from_payload,
                       save_checkpoint, train, write_log_csv)

SPIRAL_VARIANTS = ("easy", "medium", "difficult")

MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


def _float_repr(x):
    return repr(float(x))


def cmd_gen_spirals(args):
    spec = SpiralSpec(variant=args.variant, points_per_class=args.points_per_class,
                      noise_sd=args.noise, seed=args.seed)
    dataset = generate_two_spirals(spec)
    parent = os.path.dirname(args.out)
    if parent:
        os.makedirs(parent, exist_ok=True)
    lines = ["x0,x1,label"]
    for row, target in zip(dataset.inputs, dataset.targets):
        lines.append(f"{_float_repr(row[0])},{_float_repr(row[1])},{int(target[0])}")
    with open(args.out, "w", newline="") as handle:
        handle.write("\n".join(lines) + "\n")
    manifest = {"variant": spec.variant, "points_per_class": spec.points_per_class,
                "angle_span": spec.angle_span, "radius_slope": spec.radius_slope,
                "noise_sd": spec.noise_sd, "seed": spec.seed}
    with open(args.out + ".manifest.json", "w") as handle:
        json.dump(manifest, handle, indent=2)
    print(f"wrote {len(dataset)} instances to {args.out}")
    return 0


def _resolve_datasets(args):
    """(train_set, dev_set, test_set or None) for a --data specification."""
    spec = args.data
    if spec.startswith("spirals:"):
        variant = spec.split(":", 1)[1]
        if variant not in SPIRAL_VARIANTS:
            raise UsageError(
                f"unknown spiral variant '{variant}', expected one of {'|'.join(SPIRAL_VARIANTS)}"
            )
        dataset = generate_two_spirals(SpiralSpec(
            variant=variant, points_per_class=args.points_per_class,
            noise_sd=args.noise, seed=args.data_seed))
        train_set = _limit(dataset, args.train_limit)
        return train_set, train_set, None
    if spec in ("mnist", "mnist01"):
        if not args.mnist_dir:
            raise UsageError(f"--data {spec} requires --mnist-dir")
        full = load_mnist_idx(os.path.join(args.mnist_dir, MNIST_FILES["train"][0]),
                              os.path.join(args.mnist_dir, MNIST_FILES["train"][1]))
        test = load_mnist_idx(os.path.join(args.mnist_dir, MNIST_FILES["test"][0]),
                              os.path.join(args.mnist_dir, MNIST_FILES["test"][1]))
        if spec == "mnist01":
            full = filter_binary_mnist(full, 0, 1)
            test = filter_binary_mnist(test, 0, 1)
        train_set, dev_set = split_train_validation(full, 1.0 / 6.0, args.data_seed)
        return _limit(train_set, args.train_limit), dev_set, test
    if spec.startswith("csv:"):
        full = load_multilabel_csv(spec.split(":", 1)[1])
        train_set, dev_set = split_train_validation(full, 1.0 / 6.0, args.data_seed)
        return _limit(train_set, args.train_limit), dev_set, None
    raise UsageError(
        f"unknown --data '{spec}'; use spirals:easy|medium|difficult, mnist, mnist01, or csv:PATH"
    )


def _limit(dataset, limit):
    if limit is None or limit >= len(dataset):
        return dataset
    if limit < 1:
        raise UsageError("--train-limit must be at least 1")
    return dataset.subset(np.arange(limit))


def _resolve_config(args):
    """Merge defaults, config file, and explicit flags into a TrainConfig."""
    values = {}
    if args.config:
        with open(args.config) as handle:
            values.update(json.load(handle))
    flag_map = {
        "architecture": args.arch, "hidden_width": args.hidden,
        "max_layers": args.layers, "max_depth": args.max_depth,
        "base_lr": args.lr, "lambda_l1": getattr(args, "lambda"),
        "l2_coeff": args.l2, "dropout_p": args.dropout,
        "batch_size": args.batch_size, "patience": args.patience,
        "max_epochs": args.epochs, "seed": args.seed,
    }
    for key, value in flag_map.items():
        if value is not None:
            values[key] = value
    if args.no_depth_decay:
        values["depth_decay"] = False
    allowed = set(TrainConfig.__dataclass_fields__)
    unknown = set(values) - allowed
    if unknown:
        raise UsageError(f"unknown config fields: {sorted(unknown)}")
    return TrainConfig(**values)


def cmd_train(args):
    config = _resolve_config(args)
    train_set, dev_set, test_set = _resolve_datasets(args)
    os.makedirs(args.out_dir, exist_ok=True)
    best, log = train(config, train_set, dev_set)
    n_layer_columns = config.max_layers if config.architecture != "budding" else 0
    paths = {
        "config": os.path.join(args.out_dir, "config.json"),
        "log": os.path.join(args.out_dir, "log.csv"),
        "best": os.path.join(args.out_dir, "best.json"),
    }
    with open(paths["config"], "w") as handle:
        json.dump(config.__dict__, handle, indent=2, sort_keys=True)
    write_log_csv(log, paths["log"], n_layer_columns)
    if best is None:
        print("run diverged before any epoch completed; no checkpoint written",
              file=sys.stderr)
        return 1
    save_checkpoint(best, paths["best"])
    metrics = best.get("metrics", {})
    summary = (f"best epoch {best['best_epoch']}: "
               f"train_error={metrics.get('train_error')} "
               f"val_error={metrics.get('val_error')}")
    if train_set.task_kind == "multilabel":
        summary += f" macro_f1_val={metrics.get('macro_f1_val')}"
    if test_set is not None:
        test_metrics = evaluate(best, test_set)
        summary += f" test_error={test_metrics['error']}"
    if log and log[-1].diverged:
        summary += " (diverged; best checkpoint predates the divergence)"
    print(summary)
    return 0


def cmd_eval(args):
    payload = load_checkpoint(args.checkpoint)
    train_set, dev_set, test_set = _resolve_datasets(args)
    dataset = test_set if test_set is not None else train_set
    net = network_from_payload(payload)
    if args.prune:
        if payload["architecture"] != "budding":
            raise UsageError("--prune applies only to budding checkpoints")
        before = net.tree.node_count()
        net.tree = net.tree.prune_for_export()
        print(f"pruned stale subtrees: {before} -> {net.tree.node_count()} nodes")
    metrics = evaluate(net, dataset)
    print(f"instances={len(dataset)} error={_float_repr(metrics['error'])} "
          f"loss={_float_repr(metrics['loss'])} macro_f1={_float_repr(metrics['macro_f1'])}")
    if payload["architecture"] == "budding":
        print(f"soft_size={_float_repr(metrics['total_soft_size'])} "
              f"hard_size={metrics['hard_size']}")
    elif metrics["total_soft_size"] is not None:
        print(f"total_soft_size={_float_repr(metrics['total_soft_size'])}")
    return 0


def _add_data_flags(parser):
    parser.add_argument("--data", required=True,
                        help="spirals:easy|medium|difficult, mnist, mnist01, or csv:PATH")
    parser.add_argument("--mnist-dir", help="directory holding the four MNIST IDX files")
    parser.add_argument("--data-seed", type=int, default=0,
                        help="seed for dataset generation and splitting (default 0)")
    parser.add_argument("--points-per-class", type=int, default=200,
                        help="spiral points per class (default 200)")
    parser.add_argument("--noise", type=float, default=0.0,
                        help="spiral coordinate noise sd (default 0)")
    parser.add_argument("--train-limit", type=int,
                        help="cap the training set at N instances (seeded subset)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="grownet",
        description="Constructive networks: tunnel/highway stacks and budding trees.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-spirals", help="write a two-spirals dataset as CSV")
    gen.add_argument("--variant", required=True, choices=SPIRAL_VARIANTS)
    gen.add_argument("--points-per-class", type=int, default=200)
    gen.add_argument("--noise", type=float, default=0.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="output CSV path")
    gen.set_defaults(func=cmd_gen_spirals)

    tr = sub.add_parser("train", help="run the training protocol")
    _add_data_flags(tr)
    tr.add_argument("--arch", choices=("tunnel", "highway", "budding", "mlp-baseline"),
                    help="architecture (default tunnel)")
    tr.add_argument("--hidden", type=int, help="hidden width K (default 10)")
    tr.add_argument("--layers", type=int, help="hidden layer count (default 10)")
    tr.add_argument("--max-depth", type=int, help="budding tree depth cap (default 20)")
    tr.add_argument("--lr", type=float,
                    help="base learning rate (default 0.003; the reference setting "
                         "is 0.003 for tunnel stacks and 0.001 for budding trees)")
    tr.add_argument("--lambda", type=float, dest="lambda",
                    help="L1 trade-off on structural parameters (default 0.001)")
    tr.add_argument("--l2", type=float, help="L2 coefficient on weights (default 1e-5)")
    tr.add_argument("--dropout", type=float, help="input dropout probability (default 0)")
    tr.add_argument("--batch-size", type=int,
                    help="minibatch size; 1 = online updates (default 1)")
    tr.add_argument("--patience", type=int, help="schedule patience in epochs (default 20)")
    tr.add_argument("--epochs", type=int, help="hard cap on epochs (default 500)")
    tr.add_argument("--seed", type=int, help="run seed (default 0)")
    tr.add_argument("--no-depth-decay", action="store_true",
                    help="disable the (3/4)^depth per-layer learning-rate decay")
    tr.add_argument("--config", help="JSON file with TrainConfig fields")
    tr.add_argument("--out-dir", required=True, help="directory for log and checkpoints")
    tr.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    _add_data_flags(ev)
    ev.add_argument("--checkpoint", required=True, help="checkpoint JSON path")
    ev.add_argument("--prune", action="store_true",
                    help="drop stale budding subtrees before evaluating")
    ev.set_defaults(func=cmd_eval)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GrownetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
