"""Losses, classification metrics, and network complexity measures.

Three task kinds are supported, each tied to its output head:

* ``binary``      -- one sigmoid unit, binary cross-entropy
* ``categorical`` -- softmax over classes, multi-class cross-entropy
* ``multilabel``  -- independent sigmoid per label, summed binary cross-entropy

All loss gradients are taken with respect to the logits, where every kind
collapses to the same fused form (probability - target).  Probabilities are
floored at 1e-12 inside logarithms so saturated outputs cannot produce -inf.
"""

import numpy as np

from .errors import ConfigError, DataError, UsageError
from .numeric import sigmoid

KINDS = ("binary", "categorical", "multilabel")

PROBABILITY_FLOOR = 1e-12


def _check_kind(kind):
    if kind not in KINDS:
        raise ConfigError(f"unknown loss kind '{kind}'")


def _pair(probabilities, targets):
    p = np.asarray(probabilities, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.shape != t.shape:
        raise ConfigError(f"probabilities {p.shape} and targets {t.shape} differ in shape")
    if not np.all((t == 0.0) | (t == 1.0)):
        raise DataError("targets must be 0/1 indicators")
    return p, t


def loss_and_grad(kind, probabilities, targets):
    """Cross-entropy loss and its gradient with respect to the logits.

    A 1-D input is one sample; a 2-D input is a batch, where the loss is the
    per-sample mean and dlogits carries the matching 1/B factor so that the
    pair stays consistent for the optimizer.  The multilabel loss for one
    sample is the sum over labels of independent binary losses.
    """
    _check_kind(kind)
    p, t = _pair(probabilities, targets)
    batched = p.ndim == 2
    n = p.shape[0] if batched else 1
    clipped = np.clip(p, PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR)
    if kind == "categorical":
        per_sample = -(t * np.log(clipped)).sum(axis=-1)
    else:
        per_sample = -(t * np.log(clipped) + (1.0 - t) * np.log(1.0 - clipped)).sum(axis=-1)
    loss = float(per_sample.mean()) if batched else float(per_sample)
    dlogits = (p - t) / n if batched else (p - t)
    return loss, dlogits


def predict_labels(kind, probabilities):
    """Hard 0/1 indicator predictions: threshold 0.5, or argmax for categorical.

    Argmax ties go to the lowest index.
    """
    _check_kind(kind)
    p = np.asarray(probabilities, dtype=np.float64)
    if kind == "categorical":
        out = np.zeros_like(p)
        idx = np.argmax(p, axis=-1)
        if p.ndim == 1:
            out[idx] = 1.0
        else:
            out[np.arange(p.shape[0]), idx] = 1.0
        return out
    return (p >= 0.5).astype(np.float64)


def error_rate(kind, probabilities, targets):
    """Fraction of misclassified instances; for multilabel, the mean count of
    wrong labels per instance (so the value may exceed 1)."""
    _check_kind(kind)
    p, t = _pair(probabilities, targets)
    pred = predict_labels(kind, p)
    if p.ndim == 1:
        pred, t = pred[np.newaxis, :], t[np.newaxis, :]
    wrong = pred != t
    if kind == "multilabel":
        return float(wrong.sum(axis=-1).mean())
    return float(wrong.any(axis=-1).mean())


class ConfusionCounts:
    """Per-label true-positive / false-positive / false-negative counts.

    Counts merge additively, so evaluation can be sharded and summed.
    """

    def __init__(self, tp, fp, fn):
        self.tp = np.asarray(tp, dtype=np.int64)
        self.fp = np.asarray(fp, dtype=np.int64)
        self.fn = np.asarray(fn, dtype=np.int64)
        if not (self.tp.shape == self.fp.shape == self.fn.shape):
            raise ConfigError("confusion count arrays must share one shape")
        if (self.tp < 0).any() or (self.fp < 0).any() or (self.fn < 0).any():
            raise ConfigError("confusion counts must be non-negative")

    def __add__(self, other):
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


def confusion_counts(kind, probabilities, targets):
    """Accumulate per-label confusion counts from probabilistic predictions.

    The binary kind is scored over both classes (the positive unit and its
    complement), so its macro-F1 reflects both sides of the decision.
    """
    p, t = _pair(probabilities, targets)
    pred = predict_labels(kind, p)
    if p.ndim == 1:
        pred, t = pred[np.newaxis, :], t[np.newaxis, :]
    if kind == "binary":
        pred = np.hstack([1.0 - pred, pred])
        t = np.hstack([1.0 - t, t])
    pred_b = pred.astype(bool)
    t_b = t.astype(bool)
    tp = (pred_b & t_b).sum(axis=0)
    fp = (pred_b & ~t_b).sum(axis=0)
    fn = (~pred_b & t_b).sum(axis=0)
    return ConfusionCounts(tp, fp, fn)


def macro_f1(counts):
    """Unweighted mean over labels of 2TP / (2TP + FP + FN); 0/0 counts as 0."""
    denom = 2 * counts.tp + counts.fp + counts.fn
    f1 = np.zeros(counts.tp.shape, dtype=np.float64)
    nonzero = denom > 0
    f1[nonzero] = 2.0 * counts.tp[nonzero] / denom[nonzero]
    return float(f1.mean())


def tunnel_soft_sizes(network):
    """Per-layer sums of tunnel gate values and their grand total (Eq. 6 measure)."""
    layers = getattr(network, "hidden", network)
    per_layer = np.array([layer.g.value.sum() for layer in layers], dtype=np.float64)
    return per_layer, float(per_layer.sum())


def highway_soft_sizes(network, dataset):
    """Per-layer soft sizes for a highway stack, averaged over a dataset.

    Each unit contributes its mean gate activation over the inputs; the layer
    value is the sum over units (Eq. 7-8 measure).  Runs in evaluation mode.
    """
    inputs = np.asarray(getattr(dataset, "inputs", dataset), dtype=np.float64)
    if inputs.size == 0:
        raise UsageError("soft size over an empty dataset is undefined")
    per_layer = []
    for layer, x in zip(network.hidden, network.hidden_inputs(inputs)):
        gate = sigmoid(x @ layer.gateW.value.T + layer.gateB.value)
        per_layer.append(gate.mean(axis=0).sum())
    per_layer = np.array(per_layer, dtype=np.float64)
    return per_layer, float(per_layer.sum())
