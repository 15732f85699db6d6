"""CART decision trees (Gini) and bootstrap random forests.

Split search is exact: every boundary between distinct sorted values of a
candidate feature is scored, vectorized per node.  Ties break on
(impurity, feature index, threshold) so fits are order-stable.  Forests
bootstrap rows per tree and sample floor(sqrt(d)) feature candidates per
split; all randomness flows from one seed sequence.
"""

from __future__ import annotations

import math

import numpy as np


def _gini_costs(left_counts, total_counts, n_left, n_right):
    """Weighted Gini impurity for every candidate boundary (vectorized)."""
    with np.errstate(invalid="ignore", divide="ignore"):
        pl = left_counts / n_left[:, None]
        pr = (total_counts - left_counts) / n_right[:, None]
    gini_l = 1.0 - np.sum(pl * pl, axis=1)
    gini_r = 1.0 - np.sum(pr * pr, axis=1)
    total = n_left + n_right
    return (n_left * gini_l + n_right * gini_r) / total


def _best_split(X, y, rows, features, n_classes):
    """Best (cost, feature, threshold) over the candidate features, or None."""
    m = rows.size
    total_counts = np.bincount(y[rows], minlength=n_classes).astype(np.float64)
    best_cost = math.inf
    best_feature = -1
    best_threshold = 0.0
    for f in features:
        vals = X[rows, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        if sv[0] == sv[-1]:
            continue
        sy = y[rows][order]
        onehot = np.zeros((m, n_classes), dtype=np.float64)
        onehot[np.arange(m), sy] = 1.0
        cum = np.cumsum(onehot, axis=0)
        boundaries = np.nonzero(sv[1:] != sv[:-1])[0]
        n_left = (boundaries + 1).astype(np.float64)
        costs = _gini_costs(cum[boundaries], total_counts, n_left, m - n_left)
        j = int(np.argmin(costs))
        if costs[j] < best_cost:
            best_cost = float(costs[j])
            best_feature = int(f)
            b = int(boundaries[j])
            best_threshold = 0.5 * (float(sv[b]) + float(sv[b + 1]))
    if best_feature < 0:
        return None
    return best_cost, best_feature, best_threshold


class DecisionTreeClassifier:
    """CART with Gini impurity.  Nodes: dicts with feature/threshold/left/
    right or a leaf probability vector over all classes."""

    def __init__(self, max_depth=None, min_samples_split=2, n_feature_candidates=None, rng=None):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.n_feature_candidates = n_feature_candidates
        self.rng = rng
        self.root = None
        self.n_classes = 0

    def fit(self, X, y, n_classes):
        self.n_classes = n_classes
        n_features = X.shape[1]
        all_features = np.arange(n_features)

        def leaf(rows):
            counts = np.bincount(y[rows], minlength=n_classes).astype(np.float64)
            return {"probs": (counts / rows.size).tolist()}

        def grow(rows, depth):
            labels = y[rows]
            if (
                rows.size < self.min_samples_split
                or (self.max_depth is not None and depth >= self.max_depth)
                or np.all(labels == labels[0])
            ):
                return leaf(rows)
            if self.n_feature_candidates is not None and self.n_feature_candidates < n_features:
                features = np.sort(
                    self.rng.choice(n_features, self.n_feature_candidates, replace=False)
                )
            else:
                features = all_features
            found = _best_split(X, y, rows, features, n_classes)
            if found is None:
                return leaf(rows)
            _, feature, threshold = found
            mask = X[rows, feature] <= threshold
            left_rows = rows[mask]
            right_rows = rows[~mask]
            if left_rows.size == 0 or right_rows.size == 0:
                return leaf(rows)
            return {
                "feature": feature,
                "threshold": threshold,
                "left": grow(left_rows, depth + 1),
                "right": grow(right_rows, depth + 1),
            }

        self.root = grow(np.arange(X.shape[0]), 0)
        return self

    def predict_proba(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.zeros((X.shape[0], self.n_classes))

        def route(node, rows):
            if "probs" in node:
                out[rows] = node["probs"]
                return
            mask = X[rows, node["feature"]] <= node["threshold"]
            if mask.any():
                route(node["left"], rows[mask])
            if (~mask).any():
                route(node["right"], rows[~mask])

        route(self.root, np.arange(X.shape[0]))
        return out

    def to_obj(self) -> dict:
        return {"n_classes": self.n_classes, "root": self.root,
                "max_depth": self.max_depth, "min_samples_split": self.min_samples_split}

    @classmethod
    def from_obj(cls, obj) -> "DecisionTreeClassifier":
        tree = cls(max_depth=obj.get("max_depth"), min_samples_split=obj.get("min_samples_split", 2))
        tree.n_classes = obj["n_classes"]
        tree.root = obj["root"]
        return tree


class RandomForestClassifier:
    """Bagged CART trees with per-split feature subsampling."""

    def __init__(self, n_estimators=100, max_depth=None, min_samples_split=2, seed=0):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.seed = seed
        self.trees: list[DecisionTreeClassifier] = []
        self.n_classes = 0

    def fit(self, X, y, n_classes):
        self.n_classes = n_classes
        n = X.shape[0]
        n_candidates = max(1, int(math.sqrt(X.shape[1])))
        children = np.random.SeedSequence([self.seed & 0xFFFFFFFFFFFFFFFF, 0xF02E57]).spawn(
            self.n_estimators
        )
        self.trees = []
        for child in children:
            rng = np.random.default_rng(child)
            rows = rng.integers(0, n, n)
            tree = DecisionTreeClassifier(
                max_depth=self.max_depth,
                min_samples_split=self.min_samples_split,
                n_feature_candidates=n_candidates,
                rng=rng,
            )
            tree.fit(X[rows], y[rows], n_classes)
            self.trees.append(tree)
        return self

    def predict_proba(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        acc = np.zeros((X.shape[0], self.n_classes))
        for tree in self.trees:
            acc += tree.predict_proba(X)
        return acc / len(self.trees)

    def to_obj(self) -> dict:
        return {
            "n_classes": self.n_classes,
            "n_estimators": self.n_estimators,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "seed": self.seed,
            "trees": [tree.to_obj() for tree in self.trees],
        }

    @classmethod
    def from_obj(cls, obj) -> "RandomForestClassifier":
        forest = cls(
            n_estimators=obj["n_estimators"],
            max_depth=obj.get("max_depth"),
            min_samples_split=obj.get("min_samples_split", 2),
            seed=obj.get("seed", 0),
        )
        forest.n_classes = obj["n_classes"]
        forest.trees = [DecisionTreeClassifier.from_obj(t) for t in obj["trees"]]
        return forest
