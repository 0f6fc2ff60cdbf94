"""TrainedModel: selection + standardization + classifier + calibration, with JSON I/O."""

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from wearauth.errors import DataError
from wearauth.features import HR, HRB, HRG
from wearauth.learn.bayes import GaussianNB
from wearauth.learn.calibration import UNARY, Calibration, calibrate
from wearauth.learn.forest import RandomForest
from wearauth.learn.kernels import POLY, RBF, Kernel
from wearauth.learn.neighbors import KnnClassifier
from wearauth.learn.svm import OneClassSvmModel, SvmModel, ocsvm_train, smo_train
from wearauth.selection import DEFAULT_K, Scaler, SelectionResult, select_k, select_k_unary

FORMAT_VERSION = 1

SVM_RBF, SVM_POLY, KNN, NB, RF, OCSVM = "svm-rbf", "svm-poly", "knn", "nb", "rf", "ocsvm"
CLASSIFIERS = (RF, KNN, NB, SVM_RBF, SVM_POLY, OCSVM)
UNARY_CLASSIFIERS = (OCSVM,)

# best hyperparameters per model as reported for the three model families
DEFAULT_PARAMS = {
    HR: {RF: {"n_estimators": 450}, KNN: {"k": 32}, NB: {},
         SVM_RBF: {"gamma": 0.03, "C": 3.0}, SVM_POLY: {"degree": 1, "C": 1.0},
         OCSVM: {"gamma": 0.05, "nu": 0.5}},
    HRG: {RF: {"n_estimators": 450}, KNN: {"k": 24}, NB: {},
          SVM_RBF: {"gamma": 0.05, "C": 5.0}, SVM_POLY: {"degree": 3, "C": 14.0},
          OCSVM: {"gamma": 0.05, "nu": 0.5}},
    HRB: {RF: {"n_estimators": 600}, KNN: {"k": 2}, NB: {},
          SVM_RBF: {"gamma": 0.08, "C": 4.0}, SVM_POLY: {"degree": 4, "C": 16.0},
          OCSVM: {"gamma": 0.05, "nu": 0.5}},
}

_PAYLOADS = {SVM_RBF: SvmModel, SVM_POLY: SvmModel, OCSVM: OneClassSvmModel,
             KNN: KnnClassifier, NB: GaussianNB, RF: RandomForest}


def fit_classifier(classifier, Z, y, params, seed=0, tol=1e-3):
    """Fit the bare classifier on standardized rows. ``y`` uses 0 = valid, 1 = imposter."""
    if classifier == SVM_RBF:
        return smo_train(Z, np.where(y == 0, 1.0, -1.0), Kernel(RBF, gamma=params["gamma"]), params["C"], tol)
    if classifier == SVM_POLY:
        kernel = Kernel(POLY, degree=int(params["degree"]), coef0=params.get("coef0", 0.0))
        return smo_train(Z, np.where(y == 0, 1.0, -1.0), kernel, params["C"], tol)
    if classifier == OCSVM:
        return ocsvm_train(Z, params.get("nu", 0.5), Kernel(RBF, gamma=params.get("gamma", 0.05)), tol)
    if classifier == KNN:
        return KnnClassifier.fit(Z, y, params.get("k", 32), params.get("p", 2.0))
    if classifier == NB:
        return GaussianNB.fit(Z, y)
    if classifier == RF:
        return RandomForest.fit(Z, y, params.get("n_estimators", 450), params.get("seed", seed))
    raise ValueError(f"unknown classifier {classifier!r}")


def raw_scores(payload, Z):
    """Decision values for SVMs, valid-class vote/posterior otherwise."""
    if isinstance(payload, (SvmModel, OneClassSvmModel)):
        return payload.decision_function(Z)
    return payload.predict_proba_valid(Z)


def raw_predict(payload, Z):
    if isinstance(payload, (SvmModel, OneClassSvmModel)):
        return np.where(payload.decision_function(Z) >= 0, 0, 1)
    return payload.predict(Z)


@dataclass(frozen=True)
class TrainedModel:
    model_kind: str
    classifier: str
    hyperparameters: dict
    feature_names: list
    scaler: Scaler
    selection: SelectionResult
    payload: object
    calibration: Optional[Calibration] = None
    meta: dict = field(default_factory=dict)

    @property
    def unary(self):
        return self.classifier in UNARY_CLASSIFIERS

    def transform(self, X):
        X = getattr(X, "values", X)
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != len(self.feature_names):
            raise DataError(f"expected {len(self.feature_names)} features, got {X.shape[1]}")
        return self.scaler.transform(X[:, self.selection.kept])

    def decision(self, X):
        return raw_scores(self.payload, self.transform(X))

    def confidence(self, X):
        """Probability-like confidence that each row comes from the valid user."""
        s = self.decision(X)
        return self.calibration(s) if self.calibration is not None else s

    def predict(self, X):
        """0 for the valid user, 1 for an imposter."""
        return raw_predict(self.payload, self.transform(X))

    def to_dict(self):
        return {
            "format_version": FORMAT_VERSION,
            "model_kind": self.model_kind,
            "classifier": self.classifier,
            "hyperparameters": self.hyperparameters,
            "feature_names": list(self.feature_names),
            "scaler": {"mean": self.scaler.mean.tolist(), "std": self.scaler.std.tolist()},
            "selected_features": {"kept": self.selection.kept.tolist(), "scores": self.selection.scores.tolist()},
            "calibration": None if self.calibration is None else self.calibration.to_dict(),
            "payload": self.payload.to_dict(),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format_version") != FORMAT_VERSION:
            raise DataError(f"unsupported model format_version {d.get('format_version')!r}")
        sel = d["selected_features"]
        cal = d["calibration"]
        return cls(
            d["model_kind"], d["classifier"], d["hyperparameters"], d["feature_names"],
            Scaler(np.array(d["scaler"]["mean"], dtype=float), np.array(d["scaler"]["std"], dtype=float)),
            SelectionResult(np.array(sel["scores"], dtype=float), np.array(sel["kept"], dtype=np.int64)),
            _PAYLOADS[d["classifier"]].from_dict(d["payload"]),
            None if cal is None else Calibration(cal["A"], cal["B"]),
            d.get("meta", {}),
        )

    def dumps(self):
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True)

    @classmethod
    def loads(cls, text):
        return cls.from_dict(json.loads(text))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())


def train_model(X, y, model_kind, classifier, params=None, feature_names=None, k=DEFAULT_K, seed=0, tol=1e-3):
    """Select, standardize and fit one model.

    Binary classifiers need labels (0 valid, 1 imposter). The one-class
    classifier uses only rows labelled 0 and ranks features by variance.
    """
    X = np.asarray(X, dtype=float)
    y = np.zeros(X.shape[0], dtype=int) if y is None else np.asarray(y, dtype=int)
    params = dict(DEFAULT_PARAMS[model_kind][classifier] if params is None else params)
    names = list(feature_names) if feature_names is not None else [f"f{i}" for i in range(X.shape[1])]
    if classifier in UNARY_CLASSIFIERS:
        X = X[y == 0]
        selection = select_k_unary(X, k)
    else:
        selection = select_k(X, y, k)
    scaler = Scaler.fit(X[:, selection.kept])
    Z = scaler.transform(X[:, selection.kept])
    labels = y[y == 0] if classifier in UNARY_CLASSIFIERS else y
    payload = fit_classifier(classifier, Z, labels, params, seed, tol)
    if classifier in UNARY_CLASSIFIERS:
        cal = UNARY
    elif isinstance(payload, SvmModel):
        cal = calibrate(payload.decision_function(Z), y == 0)
    else:
        cal = None
    return TrainedModel(model_kind, classifier, params, names, scaler, selection, payload, cal)
