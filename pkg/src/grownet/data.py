"""Datasets: two-spirals generation, MNIST IDX loading, splits, multi-label CSV.

All loaders return a Dataset whose arrays are frozen (read-only views), so a
dataset can be shared across training runs without defensive copying.
"""

import csv
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, ParseError
from .rng import Rng

TASK_KINDS = ("binary", "categorical", "multilabel")

SPIRAL_SPANS = {"easy": np.pi, "medium": 2.0 * np.pi, "difficult": 3.5 * np.pi}
SPIRAL_START_ANGLE = np.pi / 6.0
SPIRAL_MIN_RADIUS = 0.2


class Dataset:
    """Immutable (inputs, targets, task_kind) triple with checked invariants."""

    def __init__(self, inputs, targets, task_kind):
        if task_kind not in TASK_KINDS:
            raise ConfigError(f"unknown task kind '{task_kind}'")
        inputs = np.ascontiguousarray(inputs, dtype=np.float64)
        targets = np.ascontiguousarray(targets, dtype=np.float64)
        if inputs.ndim != 2 or targets.ndim != 2:
            raise ConfigError("inputs and targets must be 2-D (rows are instances)")
        if inputs.shape[0] != targets.shape[0]:
            raise ConfigError(
                f"row count mismatch: {inputs.shape[0]} inputs vs {targets.shape[0]} targets"
            )
        if not np.all((targets == 0.0) | (targets == 1.0)):
            raise DataError("targets must contain only 0/1 entries")
        if task_kind == "categorical" and not np.all(targets.sum(axis=1) == 1.0):
            raise DataError("categorical targets must be one-hot rows")
        inputs.flags.writeable = False
        targets.flags.writeable = False
        self.inputs = inputs
        self.targets = targets
        self.task_kind = task_kind

    def __len__(self):
        return self.inputs.shape[0]

    @property
    def n_features(self):
        return self.inputs.shape[1]

    @property
    def n_outputs(self):
        return self.targets.shape[1]

    def subset(self, indices):
        return Dataset(self.inputs[indices], self.targets[indices], self.task_kind)


@dataclass
class SpiralSpec:
    """Parameters of a two-spirals problem.

    The three named variants share one generator and differ only in how far
    the arms wind: a half-turn (easy), one full turn (medium), or one and
    three quarters (difficult).  angle_span defaults from the variant but can
    be overridden.
    """

    variant: str = "easy"
    points_per_class: int = 200
    angle_span: float = None
    radius_slope: float = field(default=1.0 / (2.0 * np.pi))
    noise_sd: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.variant not in SPIRAL_SPANS:
            raise ConfigError(f"unknown spiral variant '{self.variant}'")
        if self.angle_span is None:
            self.angle_span = SPIRAL_SPANS[self.variant]
        if self.points_per_class < 2:
            raise ConfigError("points_per_class must be at least 2")
        if self.angle_span <= 0:
            raise ConfigError("angle_span must be positive")
        if self.noise_sd < 0:
            raise ConfigError("noise_sd must be non-negative")


def generate_two_spirals(spec):
    """Two interleaved spiral arms as a balanced binary Dataset.

    Class 0 sits at (r cos t, r sin t) for n angles evenly spaced over the
    half-open range [t0, t0 + angle_span), with r = r_min + radius_slope * t;
    class 1 is the same arm rotated by pi.  The open end keeps the two arms
    in disjoint angular sectors for the easy (half-turn) variant, which is
    what makes that variant linearly separable.  Gaussian coordinate noise is
    added per point, then inputs are standardized per coordinate.
    """
    n = spec.points_per_class
    theta = SPIRAL_START_ANGLE + spec.angle_span * np.arange(n) / n
    radius = SPIRAL_MIN_RADIUS + spec.radius_slope * theta
    arm = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
    points = np.vstack([arm, -arm])  # pi rotation of (x, y) is (-x, -y)
    if spec.noise_sd > 0:
        rng = Rng(spec.seed)
        points = points + spec.noise_sd * rng.normal(points.size).reshape(points.shape)
    mean = points.mean(axis=0)
    sd = points.std(axis=0)
    if np.any(sd == 0):
        raise ConfigError("degenerate spiral: zero variance coordinate")
    points = (points - mean) / sd
    targets = np.vstack([np.zeros((n, 1)), np.ones((n, 1))])
    return Dataset(points, targets, "binary")


def _read_idx_header(handle, path, expected_magic, expected_dims):
    head = handle.read(4)
    if len(head) < 4:
        raise ParseError(f"{path}: truncated header at offset 0")
    magic = struct.unpack(">i", head)[0]
    if magic != expected_magic:
        raise ParseError(f"{path}: bad magic {magic} at offset 0, expected {expected_magic}")
    dims = []
    for i in range(expected_dims):
        raw = handle.read(4)
        if len(raw) < 4:
            raise ParseError(f"{path}: truncated dimension field at offset {4 + 4 * i}")
        dims.append(struct.unpack(">i", raw)[0])
    return dims


def load_mnist_idx(images_path, labels_path):
    """Load an MNIST-style IDX image/label file pair as a 10-class Dataset.

    Pixels are scaled to [0, 1]; labels become one-hot rows.  Images must be
    28 by 28 and the two files must agree on the instance count.
    """
    with open(images_path, "rb") as handle:
        n, rows, cols = _read_idx_header(handle, images_path, 2051, 3)
        if (rows, cols) != (28, 28):
            raise ParseError(f"{images_path}: expected 28x28 images, got {rows}x{cols}")
        raw = handle.read(n * rows * cols)
        if len(raw) < n * rows * cols:
            raise ParseError(
                f"{images_path}: truncated pixel data at offset {16 + len(raw)}"
            )
        images = np.frombuffer(raw, dtype=np.uint8).reshape(n, rows * cols)
    with open(labels_path, "rb") as handle:
        (n_labels,) = _read_idx_header(handle, labels_path, 2049, 1)
        if n_labels != n:
            raise ParseError(
                f"{labels_path}: {n_labels} labels for {n} images in {images_path}"
            )
        raw = handle.read(n_labels)
        if len(raw) < n_labels:
            raise ParseError(f"{labels_path}: truncated label data at offset {8 + len(raw)}")
        labels = np.frombuffer(raw, dtype=np.uint8)
    if labels.size and labels.max() > 9:
        raise ParseError(f"{labels_path}: label value {labels.max()} outside 0..9")
    onehot = np.zeros((n, 10))
    onehot[np.arange(n), labels] = 1.0
    return Dataset(images / 255.0, onehot, "categorical")


def filter_binary_mnist(dataset, class_a=0, class_b=1):
    """Keep only two digit classes of a categorical dataset as a binary task.

    Instances of class_a get target 0 and class_b target 1; everything else
    is dropped.
    """
    if class_a == class_b:
        raise ConfigError("the two classes must differ")
    if dataset.task_kind != "categorical":
        raise ConfigError("binary filtering expects a categorical dataset")
    labels = dataset.targets.argmax(axis=1)
    mask_a = labels == class_a
    mask_b = labels == class_b
    if not mask_a.any():
        raise DataError(f"class {class_a} absent from dataset")
    if not mask_b.any():
        raise DataError(f"class {class_b} absent from dataset")
    keep = mask_a | mask_b
    targets = mask_b[keep].astype(np.float64)[:, np.newaxis]
    return Dataset(dataset.inputs[keep], targets, "binary")


def split_train_validation(dataset, ratio=1.0 / 6.0, seed=0):
    """Seeded shuffle and split; ratio is the validation fraction.

    The default 1/6 realizes a 5:1 train-to-validation partition.
    """
    if not 0.0 < ratio < 1.0:
        raise ConfigError("validation fraction must lie strictly between 0 and 1")
    n = len(dataset)
    n_val = int(round(n * ratio))
    if n_val == 0 or n_val == n:
        raise ConfigError(f"split of {n} instances at ratio {ratio} leaves an empty part")
    order = Rng(seed).permutation(n)
    return dataset.subset(order[n_val:]), dataset.subset(order[:n_val])


def load_multilabel_csv(path, standardize=False):
    """Load a multi-label CSV with header f0..fD-1,l0..lC-1 and 0/1 labels."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        n_features = sum(1 for name in header if name.startswith("f"))
        n_labels = sum(1 for name in header if name.startswith("l"))
        if n_features == 0 or n_labels == 0 or n_features + n_labels != len(header):
            raise ParseError(f"{path}: header must be f0..fD-1,l0..lC-1, got {header}")
        features, labels = [], []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ParseError(
                    f"{path}: line {line_no} has {len(row)} fields, expected {len(header)}"
                )
            try:
                values = [float(cell) for cell in row]
            except ValueError:
                raise ParseError(f"{path}: non-numeric value at line {line_no}") from None
            row_labels = values[n_features:]
            if any(v not in (0.0, 1.0) for v in row_labels):
                raise ParseError(f"{path}: non-binary label at line {line_no}")
            features.append(values[:n_features])
            labels.append(row_labels)
    if not features:
        raise DataError(f"{path}: no data rows after header")
    inputs = np.asarray(features)
    if standardize:
        sd = inputs.std(axis=0)
        sd[sd == 0] = 1.0
        inputs = (inputs - inputs.mean(axis=0)) / sd
    return Dataset(inputs, np.asarray(labels), "multilabel")
