"""Sigmoid confidence calibration, P(valid | f) = 1 / (1 + exp(A f + B))."""

from dataclasses import dataclass

import numpy as np

from wearauth.errors import DataError


@dataclass(frozen=True)
class Calibration:
    A: float
    B: float

    def __call__(self, f):
        z = self.A * np.asarray(f, dtype=float) + self.B
        # evaluate on the side that does not overflow
        return np.where(z >= 0, np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))),
                        1.0 / (1.0 + np.exp(-np.abs(z))))

    def to_dict(self):
        return {"A": self.A, "B": self.B}


FALLBACK = Calibration(-1.0, 0.0)
UNARY = Calibration(-2.0, 0.0)


def calibrate(decision_values, valid, max_iter=100, min_step=1e-10, sigma=1e-12):
    """Regularized maximum-likelihood sigmoid fit (Newton with backtracking).

    ``valid`` is a boolean mask marking valid-user rows. Targets are
    smoothed to (N+ + 1)/(N+ + 2) and 1/(N- + 2).
    """
    f = np.asarray(decision_values, dtype=float)
    valid = np.asarray(valid, dtype=bool)
    n_pos = int(valid.sum())
    n_neg = valid.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("calibration needs both valid and imposter decision values")
    if np.all(f == f[0]):
        return FALLBACK
    hi = (n_pos + 1.0) / (n_pos + 2.0)
    lo = 1.0 / (n_neg + 2.0)
    t = np.where(valid, hi, lo)

    def objective(A, B):
        # -sum[t log p + (1-t) log(1-p)] with p = 1/(1+e^z)
        z = A * f + B
        return float(np.sum(np.logaddexp(0.0, z) - (1.0 - t) * z))

    A, B = 0.0, np.log((n_neg + 1.0) / (n_pos + 1.0))
    fval = objective(A, B)
    for _ in range(max_iter):
        p = Calibration(A, B)(f)
        q = 1.0 - p
        d2 = p * q
        h11 = sigma + np.dot(f * f, d2)
        h22 = sigma + d2.sum()
        h21 = np.dot(f, d2)
        d1 = t - p
        g1 = np.dot(f, d1)
        g2 = d1.sum()
        if abs(g1) < 1e-5 and abs(g2) < 1e-5:
            break
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        step = 1.0
        while step >= min_step:
            nA, nB = A + step * dA, B + step * dB
            nf = objective(nA, nB)
            if nf < fval + 1e-4 * step * gd:
                A, B, fval = nA, nB, nf
                break
            step /= 2.0
        else:
            break
    return Calibration(float(A), float(B))
