"""Exhaustive hyperparameter search scored by mean F1 over stratified folds."""

import itertools

import numpy as np

from wearauth.errors import DataError
from wearauth.evaluation import ConfusionCounts, metrics
from wearauth.learn.model import KNN, NB, RF, SVM_POLY, SVM_RBF, fit_classifier, raw_predict

_GAMMAS = [round(0.01 * i, 2) for i in range(1, 11)]
_CS = [float(c) for c in range(1, 17)]

DEFAULT_GRIDS = {
    SVM_RBF: {"gamma": _GAMMAS, "C": _CS},
    SVM_POLY: {"degree": [1, 2, 3, 4], "C": _CS},
    KNN: {"k": list(range(1, 41))},
    RF: {"n_estimators": [150, 300, 450, 600]},
    NB: {},
}


def expand(grid):
    """Cells of ``grid`` in row-major order of its keys as given."""
    keys = list(grid)
    for key in keys:
        if len(grid[key]) == 0:
            raise DataError(f"empty grid for {key!r}")
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def stratified_folds(y, folds):
    """Fold id per row: rows of each class dealt round-robin in order."""
    y = np.asarray(y)
    fold = np.empty(y.size, dtype=int)
    for c in np.unique(y):
        rows = np.flatnonzero(y == c)
        fold[rows] = np.arange(rows.size) % folds
    return fold


def grid_search(Z, y, classifier, grid=None, folds=3, seed=0):
    """Return ``(best_params, best_score)`` maximizing mean valid-class F1.

    ``Z`` must already be selected and standardized; ties keep the earlier cell.
    """
    if folds < 2:
        raise DataError("grid search needs at least 2 folds")
    grid = DEFAULT_GRIDS[classifier] if grid is None else grid
    cells = expand(grid)
    y = np.asarray(y, dtype=int)
    fold = stratified_folds(y, folds)
    best, best_score = None, -np.inf
    for params in cells:
        scores = []
        for f in range(folds):
            tr, te = fold != f, fold == f
            payload = fit_classifier(classifier, Z[tr], y[tr], params, seed)
            pred = raw_predict(payload, Z[te])
            scores.append(metrics(ConfusionCounts.from_predictions(y[te] == 0, pred == 0)).F1)
        score = float(np.mean(scores))
        if score > best_score:
            best, best_score = params, score
    return best, best_score
