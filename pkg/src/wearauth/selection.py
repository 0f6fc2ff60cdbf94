"""Univariate feature scoring, top-K selection and standardization."""

from dataclasses import dataclass

import numpy as np

from wearauth.errors import DataError

DEFAULT_K = 20


def f_scores(X, labels):
    """One-way ANOVA F statistic of every column of ``X`` against binary ``labels``.

    Zero within-class variance gives ``inf`` when the class means differ and
    0 when they do not.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if classes.size < 2:
        raise DataError("F score needs both classes present")
    n = X.shape[0]
    grand = X.mean(axis=0)
    ss_between = np.zeros(X.shape[1])
    ss_within = np.zeros(X.shape[1])
    for c in classes:
        rows = X[labels == c]
        mean = rows.mean(axis=0)
        ss_between += rows.shape[0] * (mean - grand) ** 2
        ss_within += np.sum((rows - mean) ** 2, axis=0)
    df_between = classes.size - 1
    df_within = n - classes.size
    msb = ss_between / df_between
    msw = ss_within / df_within if df_within > 0 else np.zeros_like(ss_within)
    # relative cut-offs keep floating-point residue from passing as variance
    scale = np.maximum(np.abs(X).max(axis=0), 1e-300) ** 2 * n
    msb = np.where(ss_between <= 1e-24 * scale, 0.0, msb)
    msw = np.where(ss_within <= 1e-24 * scale, 0.0, msw)
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(msw > 0, msb / msw, np.where(msb > 0, np.inf, 0.0))
    return scores


def f_score(column, labels):
    return float(f_scores(np.asarray(column, dtype=float)[:, None], labels)[0])


@dataclass(frozen=True)
class SelectionResult:
    scores: np.ndarray
    kept: np.ndarray  # indices in descending score order


def _top_k(scores, k):
    scores = np.asarray(scores, dtype=float)
    if k > scores.size:
        raise DataError(f"K={k} exceeds the {scores.size} available features")
    if k < 1:
        raise DataError("K must be >= 1")
    # lexsort: last key is primary -> descending score, then ascending index
    order = np.lexsort((np.arange(scores.size), -scores))
    return SelectionResult(scores, order[:k])


def select_k(X, labels, k=DEFAULT_K):
    """Keep the ``k`` highest-scoring features; ties go to the lower index."""
    return _top_k(f_scores(X, labels), k)


def select_k_unary(X, k=DEFAULT_K):
    """Label-free selection for one-class models: rank by raw training variance."""
    X = np.asarray(X, dtype=float)
    return _top_k(X.var(axis=0), k)


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X):
        X = np.asarray(X, dtype=float)
        if X.shape[0] == 0:
            raise DataError("cannot fit a scaler on an empty training set")
        constant = np.ptp(X, axis=0) == 0
        mean = np.where(constant, X[0], X.mean(axis=0))
        return cls(mean, np.where(constant, 0.0, X.std(axis=0)))

    def transform(self, X):
        std = np.where(self.std > 0, self.std, 1.0)
        return (np.asarray(X, dtype=float) - self.mean) / std


def fit_transform(X):
    scaler = Scaler.fit(X)
    return scaler, scaler.transform(X)
