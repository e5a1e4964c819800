"""Constructive deep networks that grow and prune their own structure.

Three architectures share one trainer:

* tunnel stacks: hidden units gated by constant g in [0, 1], starting as the
  identity network and switching units on against an L1 gate penalty;
* highway stacks: the input-dependent gating generalization;
* budding trees: binary trees of perceptron layers that deepen by splitting
  nodes whose leafness gamma drops below 1, and shrink back as gamma returns.

The package exposes the building blocks (layers, budding, optim, losses,
data), the training protocol (training), a scikit-learn style estimator
(estimators), and a command line (``grownet gen-spirals|train|eval``).
"""

from .budding import BuddingNode, BuddingTree
from .data import (Dataset, SpiralSpec, filter_binary_mnist,
                   generate_two_spirals, load_mnist_idx, load_multilabel_csv,
                   split_train_validation)
from .errors import (ConfigError, DataError, GrownetError, NumericalError,
                     ParseError, UsageError)
from .estimators import ConstructiveNetClassifier
from .layers import (HighwayLayer, InputDropout, PerceptronLayer,
                     ProjectionLayer, TunnelLayer, output_head_forward)
from .losses import (ConfusionCounts, confusion_counts, error_rate,
                     highway_soft_sizes, loss_and_grad, macro_f1,
                     tunnel_soft_sizes)
from .networks import BuddingNet, LayeredNet
from .optim import Adam, AdamState, Param, adam_step
from .rng import Rng
from .training import (EpochRecord, ScheduleState, TrainConfig, evaluate,
                       load_checkpoint, network_from_payload, save_checkpoint,
                       train, write_log_csv)

__version__ = "0.1.0"

__all__ = [
    "Adam", "AdamState", "BuddingNet", "BuddingNode", "BuddingTree",
    "ConfigError", "ConfusionCounts", "ConstructiveNetClassifier", "DataError",
    "Dataset", "EpochRecord", "GrownetError", "HighwayLayer", "InputDropout",
    "LayeredNet", "NumericalError", "Param", "ParseError", "PerceptronLayer",
    "ProjectionLayer", "Rng", "ScheduleState", "SpiralSpec", "TrainConfig",
    "TunnelLayer", "UsageError", "adam_step", "confusion_counts", "error_rate",
    "evaluate", "filter_binary_mnist", "generate_two_spirals",
    "highway_soft_sizes", "load_checkpoint", "load_mnist_idx",
    "load_multilabel_csv", "loss_and_grad", "macro_f1", "network_from_payload",
    "output_head_forward", "save_checkpoint", "split_train_validation",
    "train", "tunnel_soft_sizes", "write_log_csv",
]
