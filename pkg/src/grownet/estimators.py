"""Scikit-learn style estimator over the constructive network trainer.

ConstructiveNetClassifier wraps dataset packing, the training protocol, and
prediction behind the familiar fit/predict/predict_proba/score surface, so
the networks compose with sklearn model selection utilities.  The task kind
is inferred from y: a 1-D label vector with two classes trains the binary
head, more classes the softmax head, and a 2-D 0/1 indicator matrix the
multilabel head.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import Dataset, split_train_validation
from .errors import DataError, NumericalError
from .losses import error_rate, macro_f1, confusion_counts
from .training import TrainConfig, network_from_payload, train

EVAL_CHUNK = 4096


def targets_from_labels(y):
    """(targets matrix, task_kind, classes) from a label vector or indicator matrix."""
    y = np.asarray(y)
    if y.ndim == 2:
        if not np.all((y == 0) | (y == 1)):
            raise DataError("a 2-D y must be a 0/1 multilabel indicator matrix")
        return y.astype(np.float64), "multilabel", None
    classes = np.unique(y)
    if classes.size < 2:
        raise DataError("y must contain at least two classes")
    if classes.size == 2:
        return (y == classes[1]).astype(np.float64)[:, np.newaxis], "binary", classes
    onehot = (y[:, np.newaxis] == classes[np.newaxis, :]).astype(np.float64)
    return onehot, "categorical", classes


class ConstructiveNetClassifier(BaseEstimator, ClassifierMixin):
    """Classifier over tunnel, highway, budding, or plain-stack networks.

    Training follows the patience-scheduled protocol and keeps the model from
    the best validation epoch.  With validation_fraction 0 the training set
    itself is monitored, which is the intended setting for small synthetic
    tasks.

    Fitted attributes: net_ (the best network), checkpoint_ (its serializable
    payload), log_ (per-epoch records), best_epoch_, classes_.
    """

    def __init__(self, architecture="tunnel", hidden_width=10, max_layers=10,
                 max_depth=20, learning_rate=0.003, lambda_l1=0.001,
                 l2_coeff=1e-5, dropout=0.0, batch_size=1, patience=20,
                 lr_factors=(0.3, 0.1), depth_decay=True, max_epochs=500,
                 validation_fraction=0.0, random_state=0):
        self.architecture = architecture
        self.hidden_width = hidden_width
        self.max_layers = max_layers
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.lambda_l1 = lambda_l1
        self.l2_coeff = l2_coeff
        self.dropout = dropout
        self.batch_size = batch_size
        self.patience = patience
        self.lr_factors = lr_factors
        self.depth_decay = depth_decay
        self.max_epochs = max_epochs
        self.validation_fraction = validation_fraction
        self.random_state = random_state

    def _config(self):
        return TrainConfig(
            architecture=self.architecture, hidden_width=self.hidden_width,
            max_layers=self.max_layers, max_depth=self.max_depth,
            base_lr=self.learning_rate, lambda_l1=self.lambda_l1,
            l2_coeff=self.l2_coeff, dropout_p=self.dropout,
            batch_size=self.batch_size, patience=self.patience,
            lr_factors=list(self.lr_factors), depth_decay=self.depth_decay,
            max_epochs=self.max_epochs, seed=self.random_state,
        )

    def fit(self, X, y):
        X, y = check_X_y(X, y, multi_output=True, y_numeric=False)
        targets, task_kind, classes = targets_from_labels(y)
        dataset = Dataset(X.astype(np.float64), targets, task_kind)
        if self.validation_fraction > 0.0:
            train_set, dev_set = split_train_validation(
                dataset, self.validation_fraction, self.random_state)
        else:
            train_set = dev_set = dataset
        checkpoint, log = train(self._config(), train_set, dev_set)
        if checkpoint is None:
            raise NumericalError("training diverged before completing an epoch")
        self.classes_ = classes
        self.task_kind_ = task_kind
        self.checkpoint_ = checkpoint
        self.log_ = log
        self.best_epoch_ = checkpoint["best_epoch"]
        self.net_ = network_from_payload(checkpoint)
        self.n_features_in_ = X.shape[1]
        return self

    def _probabilities(self, X):
        check_is_fitted(self, "net_")
        X = check_array(X).astype(np.float64)
        chunks = [self.net_.predict_proba(X[start:start + EVAL_CHUNK])
                  for start in range(0, X.shape[0], EVAL_CHUNK)]
        return np.vstack(chunks)

    def predict_proba(self, X):
        p = self._probabilities(X)
        if self.task_kind_ == "binary":
            return np.hstack([1.0 - p, p])
        return p

    def predict(self, X):
        p = self._probabilities(X)
        if self.task_kind_ == "binary":
            return self.classes_[(p[:, 0] >= 0.5).astype(np.intp)]
        if self.task_kind_ == "categorical":
            return self.classes_[p.argmax(axis=1)]
        return (p >= 0.5).astype(np.int64)

    def score(self, X, y):
        """Accuracy for single-label tasks; Macro-F1 for multilabel."""
        p = self._probabilities(X)
        targets, task_kind, _ = targets_from_labels(y)
        if task_kind != self.task_kind_:
            raise DataError(f"y looks {task_kind}, the model was fit as {self.task_kind_}")
        if task_kind == "multilabel":
            return macro_f1(confusion_counts(task_kind, p, targets))
        return 1.0 - error_rate(task_kind, p, targets)
