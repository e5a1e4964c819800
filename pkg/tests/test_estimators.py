import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from grownet.data import SpiralSpec, generate_two_spirals
from grownet.errors import DataError
from grownet.estimators import ConstructiveNetClassifier, targets_from_labels
from grownet.rng import Rng


def spiral_xy(points=40):
    data = generate_two_spirals(SpiralSpec("easy", points_per_class=points))
    return np.asarray(data.inputs), data.targets[:, 0].astype(int)


def fast_classifier(**overrides):
    base = dict(architecture="tunnel", hidden_width=6, max_layers=3,
                learning_rate=0.01, batch_size=4, patience=5,
                max_epochs=40, random_state=0)
    base.update(overrides)
    return ConstructiveNetClassifier(**base)


# -- label packing -----------------------------------------------------------------

def test_targets_from_binary_labels():
    targets, kind, classes = targets_from_labels(np.array([3, 7, 3, 7, 7]))
    assert kind == "binary"
    assert classes.tolist() == [3, 7]
    assert targets[:, 0].tolist() == [0.0, 1.0, 0.0, 1.0, 1.0]


def test_targets_from_multiclass_labels():
    targets, kind, classes = targets_from_labels(np.array(["b", "a", "c", "a"]))
    assert kind == "categorical"
    assert classes.tolist() == ["a", "b", "c"]
    assert targets.tolist() == [[0, 1, 0], [1, 0, 0], [0, 0, 1], [1, 0, 0]]


def test_targets_from_indicator_matrix():
    y = np.array([[1, 0, 1], [0, 0, 0]])
    targets, kind, classes = targets_from_labels(y)
    assert kind == "multilabel"
    assert classes is None
    assert targets.dtype == np.float64


def test_targets_validation():
    with pytest.raises(DataError):
        targets_from_labels(np.array([1, 1, 1]))
    with pytest.raises(DataError):
        targets_from_labels(np.array([[0.5, 1.0]]))


# -- fit / predict ------------------------------------------------------------------

def test_fit_predict_easy_spirals():
    X, y = spiral_xy()
    model = fast_classifier().fit(X, y)
    assert model.score(X, y) >= 0.95
    assert model.task_kind_ == "binary"
    assert model.classes_.tolist() == [0, 1]
    assert model.n_features_in_ == 2
    assert model.best_epoch_ >= 1
    assert len(model.log_) >= model.best_epoch_
    predictions = model.predict(X)
    assert set(np.unique(predictions)) <= {0, 1}


def test_predict_proba_binary_two_columns():
    X, y = spiral_xy(20)
    model = fast_classifier(max_epochs=5).fit(X, y)
    proba = model.predict_proba(X)
    assert proba.shape == (40, 2)
    assert np.allclose(proba.sum(axis=1), 1.0, atol=1e-12)
    assert np.array_equal(model.predict(X), model.classes_[proba.argmax(axis=1)])


def test_custom_binary_labels_round_trip():
    X, y01 = spiral_xy(15)
    y = np.where(y01 == 1, 7, 3)
    model = fast_classifier(max_epochs=5).fit(X, y)
    assert model.classes_.tolist() == [3, 7]
    assert set(np.unique(model.predict(X))) <= {3, 7}


def test_multiclass_fit_predict():
    rng = Rng(0)
    centers = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]])
    X = np.vstack([c + 0.3 * rng.normal(40).reshape(20, 2) for c in centers])
    y = np.repeat(np.array(["left", "mid", "top"]), 20)
    model = fast_classifier(max_epochs=20).fit(X, y)
    assert model.task_kind_ == "categorical"
    assert model.predict_proba(X).shape == (60, 3)
    assert model.score(X, y) >= 0.95


def test_multilabel_fit_scores_macro_f1():
    rng = Rng(1)
    X = rng.normal(120).reshape(60, 2)
    y = np.column_stack([(X[:, 0] > 0), (X[:, 1] > 0)]).astype(int)
    model = fast_classifier(max_epochs=30, learning_rate=0.02).fit(X, y)
    assert model.task_kind_ == "multilabel"
    assert model.classes_ is None
    predictions = model.predict(X)
    assert predictions.shape == (60, 2)
    assert set(np.unique(predictions)) <= {0, 1}
    score = model.score(X, y)
    assert 0.0 <= score <= 1.0
    assert score >= 0.9


def test_validation_fraction_holdout_path():
    X, y = spiral_xy(30)
    model = fast_classifier(max_epochs=8, validation_fraction=1.0 / 6.0).fit(X, y)
    assert model.best_epoch_ >= 1
    # the monitored log must reflect a real holdout: 50 train, 10 validation
    assert model.checkpoint_["metrics"]["val_error"] is not None


def test_budding_architecture_through_estimator():
    X, y = spiral_xy(20)
    model = fast_classifier(architecture="budding", learning_rate=0.005,
                            max_epochs=10).fit(X, y)
    assert model.net_.architecture == "budding"
    assert model.checkpoint_["dims"]["max_depth"] == 20
    assert model.predict(X).shape == (40,)


# -- sklearn integration ---------------------------------------------------------

def test_sklearn_clone_and_params():
    model = fast_classifier(hidden_width=9)
    cloned = clone(model)
    assert cloned.get_params()["hidden_width"] == 9
    cloned.set_params(hidden_width=3, architecture="highway")
    assert cloned.hidden_width == 3
    assert model.hidden_width == 9  # clone is independent


def test_unfitted_predict_raises():
    X, _ = spiral_xy(5)
    with pytest.raises(NotFittedError):
        fast_classifier().predict(X)


def test_score_task_mismatch():
    X, y = spiral_xy(15)
    model = fast_classifier(max_epochs=3).fit(X, y)
    indicator = np.column_stack([y, 1 - y])
    with pytest.raises(DataError):
        model.score(X, indicator)


def test_fit_is_seeded():
    X, y = spiral_xy(20)
    a = fast_classifier(max_epochs=6).fit(X, y)
    b = fast_classifier(max_epochs=6).fit(X, y)
    xs = np.asarray(X)
    assert a.predict_proba(xs).tobytes() == b.predict_proba(xs).tobytes()
