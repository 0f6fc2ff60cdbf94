"""Random forest of CART trees (Gini impurity, bootstrap rows, sqrt(d) features per split)."""

from dataclasses import dataclass

import numpy as np

from wearauth.errors import DataError

LEAF = -1


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # fraction of valid-user (class 0) rows in the node

    def leaf_values(self, X):
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] != LEAF
        while active.any():
            rows = np.flatnonzero(active)
            cur = node[rows]
            go_left = X[rows, self.feature[cur]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] != LEAF
        return self.value[node]

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in ("feature", "threshold", "left", "right", "value")}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["feature"], dtype=np.int64), np.array(d["threshold"], dtype=float),
                   np.array(d["left"], dtype=np.int64), np.array(d["right"], dtype=np.int64),
                   np.array(d["value"], dtype=float))


def _best_split(X, y, rows, features):
    best = (np.inf, -1, 0.0)
    n = rows.size
    for f in features:
        v = X[rows, f]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        ys = y[rows][order]
        cut = np.flatnonzero(vs[:-1] < vs[1:])
        if cut.size == 0:
            continue
        n_left = cut + 1.0
        n_right = n - n_left
        ones = np.cumsum(ys)
        left1 = ones[cut]
        right1 = ones[-1] - left1
        gini_l = 1.0 - (left1 / n_left) ** 2 - (1.0 - left1 / n_left) ** 2
        gini_r = 1.0 - (right1 / n_right) ** 2 - (1.0 - right1 / n_right) ** 2
        weighted = n_left * gini_l + n_right * gini_r
        k = int(np.argmin(weighted))
        if weighted[k] < best[0]:
            best = (weighted[k], f, 0.5 * (vs[cut[k]] + vs[cut[k] + 1]))
    return best


def build_tree(X, y, rows, max_features, rng, min_samples_split=2):
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(node_rows):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(np.mean(y[node_rows] == 0)))
        return len(feature) - 1

    root = new_node(rows)
    stack = [(root, rows)]
    d = X.shape[1]
    while stack:
        node, node_rows = stack.pop()
        if node_rows.size < min_samples_split or value[node] in (0.0, 1.0):
            continue
        features = rng.choice(d, size=max_features, replace=False)
        _, f, thr = _best_split(X, y, node_rows, features)
        if f < 0:
            continue
        mask = X[node_rows, f] <= thr
        lrows, rrows = node_rows[mask], node_rows[~mask]
        feature[node], threshold[node] = int(f), float(thr)
        left[node] = new_node(lrows)
        right[node] = new_node(rrows)
        stack.append((right[node], rrows))
        stack.append((left[node], lrows))
    return Tree(np.array(feature, dtype=np.int64), np.array(threshold), np.array(left, dtype=np.int64),
                np.array(right, dtype=np.int64), np.array(value))


@dataclass(frozen=True)
class RandomForest:
    trees: tuple
    n_estimators: int
    seed: int

    @classmethod
    def fit(cls, X, y, n_estimators=450, seed=0, max_features=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        n, d = X.shape
        for c in (0, 1):
            if not np.any(y == c):
                raise DataError(f"class {c} has no training rows")
        mtry = max_features or max(1, int(np.sqrt(d)))
        trees = []
        for t in range(n_estimators):
            rng = np.random.default_rng([seed, t])
            boot = rng.integers(0, n, n)
            trees.append(build_tree(X, y, boot, mtry, rng))
        return cls(tuple(trees), int(n_estimators), int(seed))

    def predict_proba_valid(self, Q):
        """Fraction of trees voting for the valid user (a tied leaf votes valid)."""
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        votes = np.zeros(Q.shape[0])
        for tree in self.trees:
            votes += tree.leaf_values(Q) >= 0.5
        return votes / len(self.trees)

    def predict(self, Q):
        return np.where(self.predict_proba_valid(Q) >= 0.5, 0, 1)

    def to_dict(self):
        return {"n_estimators": self.n_estimators, "seed": self.seed, "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(Tree.from_dict(t) for t in d["trees"]), d["n_estimators"], d["seed"])
