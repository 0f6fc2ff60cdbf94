from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

RBF = "rbf"
POLY = "poly"


@dataclass(frozen=True)
class Kernel:
    """RBF ``exp(-gamma |x-z|^2)`` or polynomial ``(scale <x,z> + coef0)^degree``.

    A polynomial kernel with ``scale=None`` is resolved at training time to
    ``1 / (n_features * var(X))``.
    """
    kind: str = RBF
    gamma: float = 0.1
    degree: int = 3
    coef0: float = 0.0
    scale: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (RBF, POLY):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == RBF and not self.gamma > 0:
            raise ValueError("RBF gamma must be > 0")
        if self.kind == POLY and self.degree < 1:
            raise ValueError("polynomial degree must be >= 1")

    def resolve(self, X):
        if self.kind == POLY and self.scale is None:
            var = float(np.var(X))
            return replace(self, scale=1.0 / (X.shape[1] * var) if var > 0 else 1.0)
        return self

    def __call__(self, A, B):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        if self.kind == RBF:
            sq = (A ** 2).sum(axis=1)[:, None] + (B ** 2).sum(axis=1)[None, :] - 2.0 * A @ B.T
            return np.exp(-self.gamma * np.maximum(sq, 0.0))
        scale = 1.0 if self.scale is None else self.scale
        return (scale * (A @ B.T) + self.coef0) ** self.degree

    def to_dict(self):
        return {"kind": self.kind, "gamma": self.gamma, "degree": self.degree,
                "coef0": self.coef0, "scale": self.scale}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)
