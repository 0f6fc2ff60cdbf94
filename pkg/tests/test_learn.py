import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wearauth.errors import DataError
from wearauth.features import HR, HRB, HRG
from wearauth.learn.bayes import GaussianNB
from wearauth.learn.calibration import FALLBACK, UNARY, Calibration, calibrate
from wearauth.learn.forest import RandomForest
from wearauth.learn.grid import DEFAULT_GRIDS, expand, grid_search, stratified_folds
from wearauth.learn.model import CLASSIFIERS, DEFAULT_PARAMS, KNN, NB, OCSVM, RF, SVM_POLY, SVM_RBF, TrainedModel, \
    train_model
from wearauth.learn.neighbors import KnnClassifier


def two_blobs(seed=0, n=40, d=5, shift=1.5):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0, 1, (n, d)), rng.normal(shift, 1, (n, d))])
    return X, np.repeat([0, 1], n)


def test_knn_query_at_training_point():
    X, y = two_blobs()
    knn = KnnClassifier.fit(X, y, k=1)
    assert np.array_equal(knn.predict(X), y)


def test_knn_tie_goes_to_valid():
    knn = KnnClassifier.fit(np.array([[0.0], [1.0]]), np.array([1, 0]), k=2)
    assert knn.predict([[0.1]])[0] == 0


def test_knn_errors():
    with pytest.raises(DataError):
        KnnClassifier.fit(np.zeros((3, 2)), np.array([0, 1, 0]), k=4)


def test_knn_manhattan():
    knn = KnnClassifier.fit(np.array([[0.0, 0.0], [3.0, 0.0]]), np.array([0, 1]), k=1, p=1.0)
    assert knn.predict([[1.0, 1.0]])[0] == 0


def test_nb_likelihood_ratio():
    rng = np.random.default_rng(0)
    X = np.concatenate([rng.normal(0, 1, 200), rng.normal(10, 1, 200)])[:, None]
    nb = GaussianNB.fit(X, np.repeat([0, 1], 200))
    assert nb.predict_proba([[0.0]])[0, 0] > 0.999
    assert nb.predict([[0.0], [10.0]]).tolist() == [0, 1]


def test_nb_variance_floor_and_empty_class():
    nb = GaussianNB.fit(np.array([[1.0], [1.0], [2.0], [3.0]]), np.array([0, 0, 1, 1]))
    assert nb.variances[0, 0] == 1e-9
    assert np.all(np.isfinite(nb.predict_proba([[1.5]])))
    with pytest.raises(DataError):
        GaussianNB.fit(np.zeros((3, 1)), np.zeros(3, dtype=int))


def test_forest_deterministic_450_trees():
    X, y = two_blobs(n=30)
    a = RandomForest.fit(X, y, 450, seed=7)
    b = RandomForest.fit(X, y, 450, seed=7)
    Q = np.random.default_rng(1).normal(0.75, 1.5, (50, 5))
    assert len(a.trees) == 450
    assert np.array_equal(a.predict_proba_valid(Q), b.predict_proba_valid(Q))
    assert np.mean(a.predict(X) == y) > 0.95


def test_forest_seed_matters_and_errors():
    X, y = two_blobs(n=30, shift=0.5)
    Q = np.random.default_rng(1).normal(0.25, 1.5, (50, 5))
    a = RandomForest.fit(X, y, 20, seed=1).predict_proba_valid(Q)
    b = RandomForest.fit(X, y, 20, seed=2).predict_proba_valid(Q)
    assert not np.array_equal(a, b)
    with pytest.raises(DataError):
        RandomForest.fit(X, np.zeros(60, dtype=int), 5)


def test_calibration_separated():
    f = np.concatenate([np.linspace(1, 2, 50), np.linspace(-2, -1, 50)])
    valid = np.arange(100) < 50
    cal = calibrate(f, valid)
    conf = cal(f)
    assert np.all(conf[valid] >= 0.9) and np.all(conf[~valid] <= 0.1)
    assert cal.A < 0


def test_calibration_reaches_likelihood_minimum():
    rng = np.random.default_rng(12)
    f = np.concatenate([rng.normal(0.8, 1, 40), rng.normal(-1.2, 1, 60)])
    valid = np.arange(100) < 40
    t = np.where(valid, 41 / 42, 1 / 62)

    def nll(A, B):
        p = 1 / (1 + np.exp(A * f[:, None, None] + B))
        return -np.sum(t[:, None, None] * np.log(p) + (1 - t[:, None, None]) * np.log(1 - p), axis=0)

    cal = calibrate(f, valid)
    A, B = np.meshgrid(np.linspace(-6, 0, 301), np.linspace(-3, 3, 301), indexing="ij")
    grid_best = nll(A, B).min()
    assert nll(np.array([[cal.A]]), np.array([[cal.B]]))[0, 0] <= grid_best + 1e-9


def test_calibration_symmetric():
    f = np.array([-2.0, -1.0, 1.0, 2.0])
    cal = calibrate(f, f > 0)
    assert cal(0.0) == pytest.approx(0.5, abs=1e-9)


def test_calibration_fallback_and_errors():
    assert calibrate(np.ones(4), np.array([True, False, True, False])) == FALLBACK
    with pytest.raises(DataError):
        calibrate(np.arange(3.0), np.ones(3, dtype=bool))
    assert UNARY == Calibration(-2.0, 0.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(-50, 50), st.floats(0, 50))
def test_calibration_monotone(seed, f1, gap):
    rng = np.random.default_rng(seed)
    f = np.concatenate([rng.normal(1, 1, 30), rng.normal(-1, 1, 30)])
    cal = calibrate(f, np.arange(60) < 30)
    lo, hi = cal(f1), cal(f1 + gap)
    assert lo <= hi
    assert 0 <= lo <= 1 and np.isfinite(cal.A)


def test_calibration_extremes_stay_in_unit_interval():
    cal = Calibration(-1.0, 0.0)
    out = cal(np.array([-1e6, 0.0, 1e6]))
    assert np.all(np.isfinite(out)) and out[1] == 0.5


def test_grid_single_cell():
    X, y = two_blobs(n=30)
    params, score = grid_search(X, y, SVM_RBF, {"gamma": [0.2], "C": [2.0]})
    assert params == {"gamma": 0.2, "C": 2.0} and 0 <= score <= 1


def test_grid_search_spaces():
    cells = expand(DEFAULT_GRIDS[SVM_RBF])
    assert {"gamma": 0.08, "C": 4.0} in cells
    assert {"gamma": 0.05, "C": 5.0} in cells
    assert len(cells) == 160
    assert DEFAULT_GRIDS[KNN]["k"] == list(range(1, 41))
    assert DEFAULT_GRIDS[RF]["n_estimators"] == [150, 300, 450, 600]
    for kind in (HR, HRG, HRB):
        assert DEFAULT_PARAMS[kind][SVM_RBF] in cells


def test_grid_errors_and_tie_rule():
    X, y = two_blobs(n=30, shift=4.0)
    with pytest.raises(DataError):
        grid_search(X, y, KNN, {"k": []})
    with pytest.raises(DataError):
        grid_search(X, y, KNN, {"k": [1]}, folds=1)
    # well separated: every k scores 1.0, the first cell wins
    params, score = grid_search(X, y, KNN, {"k": [3, 1, 5]})
    assert params == {"k": 3} and score == 1.0


def test_stratified_folds_balance():
    fold = stratified_folds(np.repeat([0, 1], [9, 6]), 3)
    for f in range(3):
        assert np.sum(fold[:9] == f) == 3 and np.sum(fold[9:] == f) == 2


@pytest.mark.parametrize("classifier", CLASSIFIERS)
def test_trained_model_round_trip(tmp_path, classifier):
    X, y = two_blobs(seed=3, n=40, d=25)
    params = dict(DEFAULT_PARAMS[HR][classifier])
    if classifier == RF:
        params["n_estimators"] = 25
    if classifier == KNN:
        params["k"] = 5
    model = train_model(X, y, HR, classifier, params, feature_names=[f"c{i}" for i in range(25)])
    assert len(model.selection.kept) == 20
    path = tmp_path / "model.json"
    model.save(path)
    back = TrainedModel.load(path)
    Q = np.random.default_rng(9).normal(0.75, 1.5, (100, 25))
    assert np.array_equal(back.confidence(Q), model.confidence(Q))
    assert np.array_equal(back.predict(Q), model.predict(Q))
    assert back.dumps() == model.dumps()
    import json
    doc = json.loads(path.read_text(encoding="utf-8"))
    assert doc["format_version"] == 1 and doc["classifier"] == classifier


@pytest.mark.parametrize("classifier", [SVM_RBF, SVM_POLY, KNN, NB, RF])
def test_binary_classifiers_learn_blobs(classifier):
    X, y = two_blobs(seed=4, n=60, d=21)
    params = {"n_estimators": 30} if classifier == RF else None
    model = train_model(X[::2], y[::2], HR, classifier, params)
    acc = np.mean(model.predict(X[1::2]) == y[1::2])
    assert acc > 0.85
    conf = model.confidence(X[1::2])
    assert np.all((conf >= 0) & (conf <= 1))
    assert conf[y[1::2] == 0].mean() > conf[y[1::2] == 1].mean()


def test_unary_model_uses_valid_rows_only():
    X, y = two_blobs(seed=6, n=60, d=21, shift=3.0)
    model = train_model(X, y, HR, OCSVM)
    junk = X.copy()
    junk[y == 1] = 1e6
    same = train_model(junk, y, HR, OCSVM)
    assert same.dumps() == model.dumps()
    assert model.calibration == UNARY
    assert np.mean(model.predict(X[y == 1]) == 1) > 0.8


def test_predictors_are_pure():
    X, y = two_blobs(seed=8, d=21)
    model = train_model(X, y, HRB, SVM_RBF)
    assert np.array_equal(model.confidence(X), model.confidence(X))


def test_wrong_feature_count():
    X, y = two_blobs(seed=8, d=21)
    model = train_model(X, y, HR, NB)
    with pytest.raises(DataError):
        model.confidence(np.zeros((1, 20)))
    with pytest.raises(DataError):
        TrainedModel.from_dict({**model.to_dict(), "format_version": 99})
