"""kNN, multinomial logistic regression, Gaussian naive Bayes.

All operate on already-scaled feature matrices and expose the same
fit / predict_proba / to_obj / from_obj surface as the tree models.
"""

from __future__ import annotations

import numpy as np


class KNNClassifier:
    def __init__(self, k=5):
        self.k = k
        self.X = None
        self.y = None
        self.n_classes = 0

    def fit(self, X, y, n_classes):
        self.X = np.asarray(X, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.int64)
        self.n_classes = n_classes
        return self

    def predict_proba(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        k = min(self.k, self.X.shape[0])
        out = np.zeros((X.shape[0], self.n_classes))
        for i, row in enumerate(X):
            d2 = np.sum((self.X - row) ** 2, axis=1)
            # stable argsort: equal distances resolve to the earlier sample
            nearest = np.argsort(d2, kind="stable")[:k]
            votes = np.bincount(self.y[nearest], minlength=self.n_classes)
            out[i] = votes / k
        return out

    def to_obj(self) -> dict:
        return {"k": self.k, "n_classes": self.n_classes,
                "X": self.X.tolist(), "y": self.y.tolist()}

    @classmethod
    def from_obj(cls, obj) -> "KNNClassifier":
        model = cls(k=obj["k"])
        model.X = np.asarray(obj["X"], dtype=np.float64)
        model.y = np.asarray(obj["y"], dtype=np.int64)
        model.n_classes = obj["n_classes"]
        return model


def _softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


class LogisticRegressionClassifier:
    """Multinomial softmax, full-batch gradient descent with a fixed step
    and L2 penalty (bias unpenalized).  Hitting the iteration cap returns
    the best iterate with converged=False rather than failing."""

    def __init__(self, l2=1e-3, learning_rate=0.3, max_iter=5000, tol=1e-6):
        self.l2 = l2
        self.learning_rate = learning_rate
        self.max_iter = max_iter
        self.tol = tol
        self.W = None
        self.n_classes = 0
        self.converged = False

    def fit(self, X, y, n_classes):
        X = np.asarray(X, dtype=np.float64)
        n, d = X.shape
        Xb = np.hstack([X, np.ones((n, 1))])
        Y = np.zeros((n, n_classes))
        Y[np.arange(n), y] = 1.0
        W = np.zeros((n_classes, d + 1))
        penalty_mask = np.ones((n_classes, d + 1))
        penalty_mask[:, -1] = 0.0

        best_loss = np.inf
        best_W = W.copy()
        self.converged = False
        for _ in range(self.max_iter):
            P = _softmax(Xb @ W.T)
            eps = 1e-12
            loss = -np.sum(Y * np.log(P + eps)) / n + 0.5 * self.l2 * np.sum((W * penalty_mask) ** 2)
            if loss < best_loss:
                best_loss = loss
                best_W = W.copy()
            grad = (P - Y).T @ Xb / n + self.l2 * W * penalty_mask
            if np.max(np.abs(grad)) < self.tol:
                self.converged = True
                break
            W = W - self.learning_rate * grad
        final_P = _softmax(Xb @ W.T)
        final_loss = -np.sum(Y * np.log(final_P + 1e-12)) / n + 0.5 * self.l2 * np.sum((W * penalty_mask) ** 2)
        self.W = W if final_loss <= best_loss else best_W
        self.n_classes = n_classes
        return self

    def predict_proba(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        Xb = np.hstack([X, np.ones((X.shape[0], 1))])
        return _softmax(Xb @ self.W.T)

    def to_obj(self) -> dict:
        return {
            "l2": self.l2,
            "learning_rate": self.learning_rate,
            "max_iter": self.max_iter,
            "tol": self.tol,
            "n_classes": self.n_classes,
            "converged": self.converged,
            "W": self.W.tolist(),
        }

    @classmethod
    def from_obj(cls, obj) -> "LogisticRegressionClassifier":
        model = cls(l2=obj["l2"], learning_rate=obj["learning_rate"],
                    max_iter=obj["max_iter"], tol=obj["tol"])
        model.W = np.asarray(obj["W"], dtype=np.float64)
        model.n_classes = obj["n_classes"]
        model.converged = obj["converged"]
        return model


class GaussianNBClassifier:
    """Per-class diagonal Gaussians with variance smoothing proportional to
    the largest feature variance."""

    def __init__(self, var_smoothing=1e-9):
        self.var_smoothing = var_smoothing
        self.means = None
        self.variances = None
        self.log_priors = None
        self.class_index = None
        self.n_classes = 0

    def fit(self, X, y, n_classes):
        X = np.asarray(X, dtype=np.float64)
        present = np.unique(y)
        smoothing = self.var_smoothing * max(float(X.var(axis=0).max()), 1e-30)
        means, variances, priors = [], [], []
        for cls in present:
            rows = X[y == cls]
            means.append(rows.mean(axis=0))
            variances.append(rows.var(axis=0) + smoothing)
            priors.append(rows.shape[0] / X.shape[0])
        self.means = np.asarray(means)
        self.variances = np.asarray(variances)
        self.log_priors = np.log(np.asarray(priors))
        self.class_index = present
        self.n_classes = n_classes
        return self

    def predict_proba(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.zeros((X.shape[0], self.n_classes))
        logpost = np.empty((X.shape[0], len(self.class_index)))
        for j in range(len(self.class_index)):
            diff = X - self.means[j]
            logpost[:, j] = self.log_priors[j] - 0.5 * np.sum(
                np.log(2.0 * np.pi * self.variances[j]) + diff**2 / self.variances[j], axis=1
            )
        out[:, self.class_index] = _softmax(logpost)
        return out

    def to_obj(self) -> dict:
        return {
            "var_smoothing": self.var_smoothing,
            "n_classes": self.n_classes,
            "class_index": self.class_index.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
            "log_priors": self.log_priors.tolist(),
        }

    @classmethod
    def from_obj(cls, obj) -> "GaussianNBClassifier":
        model = cls(var_smoothing=obj["var_smoothing"])
        model.n_classes = obj["n_classes"]
        model.class_index = np.asarray(obj["class_index"], dtype=np.int64)
        model.means = np.asarray(obj["means"], dtype=np.float64)
        model.variances = np.asarray(obj["variances"], dtype=np.float64)
        model.log_priors = np.asarray(obj["log_priors"], dtype=np.float64)
        return model
