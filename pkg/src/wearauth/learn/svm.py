"""SVM training by sequential minimal optimization.

Both the C-SVC and the one-class (nu) problem are instances of

    min_a  1/2 a'Qa + p'a   s.t.  y'a = const,  0 <= a_i <= C_i

which is solved by pairwise updates on the maximal violating pair.
"""

import logging
from dataclasses import dataclass

import numpy as np

from wearauth.errors import ConvergenceError, DataError
from wearauth.learn.kernels import Kernel

log = logging.getLogger(__name__)

TAU = 1e-12


def _max_iter_default(n):
    return max(100_000, 100 * n)


def solve_dual(Q, p, y, upper, alpha, tol=1e-3, max_iter=None):
    """Run SMO from the feasible start ``alpha``.

    Returns ``(alpha, gradient, iterations)``. Working-set selection takes
    the maximal KKT violation; ``argmax``/``argmin`` pick the lower index on
    ties, which keeps the run deterministic.
    """
    n = y.size
    alpha = np.array(alpha, dtype=float)
    upper = np.broadcast_to(np.asarray(upper, dtype=float), (n,)).copy()
    G = Q @ alpha + p
    diag = np.diag(Q).copy()
    pos = y > 0
    max_iter = max_iter or _max_iter_default(n)
    ninf = -np.inf

    for it in range(max_iter):
        below = alpha < upper
        above = alpha > 0
        in_up = np.where(pos, below, above)
        in_low = np.where(pos, above, below)
        score = -y * G
        up_scores = np.where(in_up, score, ninf)
        low_scores = np.where(in_low, score, np.inf)
        i = int(np.argmax(up_scores))
        j = int(np.argmin(low_scores))
        gap = up_scores[i] - low_scores[j]
        if gap < tol:
            return alpha, G, it

        Qi, Qj = Q[i], Q[j]
        Ci, Cj = upper[i], upper[j]
        old_i, old_j = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = diag[i] + diag[j] + 2.0 * Qi[j]
            delta = (-G[i] - G[j]) / (quad if quad > 0 else TAU)
            diff = old_i - old_j
            ai, aj = old_i + delta, old_j + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > Ci - Cj:
                if ai > Ci:
                    ai, aj = Ci, Ci - diff
            elif aj > Cj:
                aj, ai = Cj, Cj + diff
        else:
            quad = diag[i] + diag[j] - 2.0 * Qi[j]
            delta = (G[i] - G[j]) / (quad if quad > 0 else TAU)
            total = old_i + old_j
            ai, aj = old_i - delta, old_j + delta
            if total > Ci:
                if ai > Ci:
                    ai, aj = Ci, total - Ci
            elif aj < 0:
                aj, ai = 0.0, total
            if total > Cj:
                if aj > Cj:
                    aj, ai = Cj, total - Cj
            elif ai < 0:
                ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        G += Qi * (ai - old_i) + Qj * (aj - old_j)

    raise ConvergenceError(f"SMO did not converge in {max_iter} iterations (violation {gap:.3g})", gap)


def kkt_violation(alpha, G, y, upper):
    upper = np.broadcast_to(upper, alpha.shape)
    pos = y > 0
    in_up = np.where(pos, alpha < upper, alpha > 0)
    in_low = np.where(pos, alpha > 0, alpha < upper)
    score = -y * G
    if not in_up.any() or not in_low.any():
        return 0.0
    return float(max(0.0, score[in_up].max() - score[in_low].min()))


def offset(alpha, G, y, upper):
    """The ``rho`` of the dual solution: free-vector average, else bound midpoint."""
    upper = np.broadcast_to(upper, alpha.shape)
    yG = y * G
    at_upper = alpha >= upper
    at_lower = alpha <= 0
    free = ~at_upper & ~at_lower
    if free.any():
        return float(yG[free].mean())
    pos = y > 0
    ub_mask = (at_upper & ~pos) | (at_lower & pos)
    lb_mask = (at_upper & pos) | (at_lower & ~pos)
    ub = yG[ub_mask].min() if ub_mask.any() else np.inf
    lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
    return float((ub + lb) / 2.0)


@dataclass(frozen=True)
class SvmModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i
    bias: float
    kernel: Kernel
    C: float

    def decision_function(self, X):
        return self.kernel(X, self.support_vectors) @ self.dual_coef + self.bias

    @property
    def alpha(self):
        return np.abs(self.dual_coef)

    def to_dict(self):
        return {"support_vectors": self.support_vectors.tolist(), "dual_coef": self.dual_coef.tolist(),
                "bias": self.bias, "kernel": self.kernel.to_dict(), "C": self.C}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["support_vectors"], dtype=float).reshape(len(d["dual_coef"]), -1),
                   np.array(d["dual_coef"], dtype=float), d["bias"], Kernel.from_dict(d["kernel"]), d["C"])


@dataclass(frozen=True)
class OneClassSvmModel:
    support_vectors: np.ndarray
    alpha: np.ndarray
    rho: float
    kernel: Kernel
    nu: float

    def decision_function(self, X):
        return self.kernel(X, self.support_vectors) @ self.alpha - self.rho

    def to_dict(self):
        return {"support_vectors": self.support_vectors.tolist(), "alpha": self.alpha.tolist(),
                "rho": self.rho, "kernel": self.kernel.to_dict(), "nu": self.nu}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["support_vectors"], dtype=float).reshape(len(d["alpha"]), -1),
                   np.array(d["alpha"], dtype=float), d["rho"], Kernel.from_dict(d["kernel"]), d["nu"])


def smo_train(X, y, kernel=Kernel(), C=1.0, tol=1e-3, max_iter=None, return_dual=False):
    """Train a soft-margin SVM; labels must be -1/+1.

    With ``return_dual`` the full ``(model, alpha)`` pair is returned, which
    the tests use to check the dual invariants on every training point.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise DataError("SVM labels must be -1 or +1")
    if not ((y > 0).any() and (y < 0).any()):
        raise DataError("SVM training needs at least one example per class")
    if C <= 0:
        raise ValueError("C must be > 0")
    kernel = kernel.resolve(X)
    Q = (y[:, None] * y[None, :]) * kernel(X, X)
    alpha, G, iters = solve_dual(Q, -np.ones(y.size), y, C, np.zeros(y.size), tol, max_iter)
    bias = -offset(alpha, G, y, C)
    sv = alpha > 0
    log.debug("smo: %d iterations, %d support vectors", iters, int(sv.sum()))
    model = SvmModel(X[sv].copy(), (alpha * y)[sv], bias, kernel, float(C))
    return (model, alpha) if return_dual else model


def ocsvm_train(X, nu=0.5, kernel=Kernel(gamma=0.05), tol=1e-3, max_iter=None, return_dual=False):
    """Train a one-class nu-SVM.

    Solved with bounds ``[0, 1]`` and ``sum(alpha) = nu * n``, then rescaled
    so that ``alpha_i <= 1/(nu n)`` and ``sum(alpha) = 1``.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n < 2:
        raise DataError("one-class SVM needs at least 2 training points")
    if not 0 < nu <= 1:
        raise ValueError("nu must be in (0, 1]")
    kernel = kernel.resolve(X)
    K = kernel(X, X)
    total = nu * n
    alpha = np.zeros(n)
    whole = int(total)
    alpha[:whole] = 1.0
    if whole < n:
        alpha[whole] = total - whole
    y = np.ones(n)
    alpha, G, iters = solve_dual(K, np.zeros(n), y, 1.0, alpha, tol, max_iter)
    rho = offset(alpha, G, y, 1.0)
    alpha, rho = alpha / total, rho / total
    sv = alpha > 0
    log.debug("ocsvm: %d iterations, %d support vectors", iters, int(sv.sum()))
    model = OneClassSvmModel(X[sv].copy(), alpha[sv], rho, kernel, float(nu))
    return (model, alpha) if return_dual else model
