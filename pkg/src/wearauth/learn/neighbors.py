from dataclasses import dataclass

import numpy as np

from wearauth.errors import DataError

VALID = 0


@dataclass(frozen=True)
class KnnClassifier:
    """k-nearest-neighbour vote under the Minkowski distance (p=2 by default).

    Labels are 0 (valid user) and 1 (imposter); a tied vote goes to the
    valid class.
    """
    X: np.ndarray
    y: np.ndarray
    k: int = 32
    p: float = 2.0

    @classmethod
    def fit(cls, X, y, k=32, p=2.0):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        if k < 1 or k > X.shape[0]:
            raise DataError(f"k={k} must be in [1, {X.shape[0]}]")
        return cls(X.copy(), y.copy(), int(k), float(p))

    def _distances(self, Q):
        diff = np.abs(np.atleast_2d(Q)[:, None, :] - self.X[None, :, :])
        if self.p == 2.0:
            return np.sqrt((diff ** 2).sum(axis=2))
        return (diff ** self.p).sum(axis=2) ** (1.0 / self.p)

    def predict_proba_valid(self, Q):
        d = self._distances(np.asarray(Q, dtype=float))
        nearest = np.argsort(d, axis=1, kind="stable")[:, :self.k]
        return np.mean(self.y[nearest] == VALID, axis=1)

    def predict(self, Q):
        return np.where(self.predict_proba_valid(Q) >= 0.5, 0, 1)

    def to_dict(self):
        return {"X": self.X.tolist(), "y": self.y.tolist(), "k": self.k, "p": self.p}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["X"], dtype=float), np.array(d["y"], dtype=int), d["k"], d["p"])
