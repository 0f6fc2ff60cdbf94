from dataclasses import dataclass

import numpy as np

from wearauth.errors import DataError

VAR_FLOOR = 1e-9


@dataclass(frozen=True)
class GaussianNB:
    """Per-class independent Gaussians; class 0 is the valid user."""
    classes: np.ndarray
    priors: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    @classmethod
    def fit(cls, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        classes = np.array([0, 1])
        for c in classes:
            if not np.any(y == c):
                raise DataError(f"class {c} has no training rows")
        means = np.stack([X[y == c].mean(axis=0) for c in classes])
        var = np.stack([X[y == c].var(axis=0) for c in classes])
        priors = np.array([np.mean(y == c) for c in classes])
        return cls(classes, priors, means, np.maximum(var, VAR_FLOOR))

    def log_joint(self, Q):
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        ll = -0.5 * (np.log(2 * np.pi * self.variances)[None, :, :]
                     + (Q[:, None, :] - self.means[None, :, :]) ** 2 / self.variances[None, :, :]).sum(axis=2)
        return ll + np.log(self.priors)[None, :]

    def predict_proba(self, Q):
        lj = self.log_joint(Q)
        lj -= lj.max(axis=1, keepdims=True)
        p = np.exp(lj)
        return p / p.sum(axis=1, keepdims=True)

    def predict_proba_valid(self, Q):
        return self.predict_proba(Q)[:, 0]

    def predict(self, Q):
        return np.where(self.predict_proba_valid(Q) >= 0.5, 0, 1)

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in ("classes", "priors", "means", "variances")}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["classes"], dtype=int), *(np.array(d[k], dtype=float)
                                                         for k in ("priors", "means", "variances")))
