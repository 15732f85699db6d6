"""Training, prediction, evaluation, grid-search CV, model persistence.

A TrainedModel owns its scaler: raw 158-vectors go in, the model scales
internally.  Callers that pre-scale with the embedded scaler can pass
``scaled=True`` and get identical predictions.  Model files are versioned
JSON; the loader rejects unknown versions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import (
    ClassTooSmall,
    EmptyInput,
    InvalidHyperparams,
    MalformedInput,
)
from ..features import FeatureVector, ScalerParams, fit_scaler, scale_matrix
from ..strokes import TRAINING_CLASSES
from .dataset import Dataset, stratified_folds
from .models import GaussianNBClassifier, KNNClassifier, LogisticRegressionClassifier
from .trees import DecisionTreeClassifier, RandomForestClassifier

MODEL_FORMAT = "sketchvc-model"
MODEL_VERSION = 1

ALGORITHMS = ("decision_tree", "random_forest", "knn", "logistic_regression", "gaussian_nb")

_DEFAULT_HYPERPARAMS = {
    "decision_tree": {"max_depth": None, "min_samples_split": 2},
    "random_forest": {"n_estimators": 100, "max_depth": None, "min_samples_split": 2},
    "knn": {"k": 5},
    "logistic_regression": {"l2": 1e-3, "learning_rate": 0.3, "max_iter": 5000, "tol": 1e-6},
    "gaussian_nb": {"var_smoothing": 1e-9},
}

# default grids mirroring the tuning protocol (forest estimators 50/100/200)
DEFAULT_GRIDS = {
    "decision_tree": [{"max_depth": d} for d in (4, 8, None)],
    "random_forest": [{"n_estimators": n} for n in (50, 100, 200)],
    "knn": [{"k": k} for k in (3, 5, 9)],
    "logistic_regression": [{"l2": l2} for l2 in (1e-4, 1e-3, 1e-2)],
    "gaussian_nb": [{"var_smoothing": v} for v in (1e-9, 1e-7)],
}


def _merge_hyperparams(algo: str, hyperparams) -> dict:
    if algo not in ALGORITHMS:
        raise InvalidHyperparams(f"unknown algorithm {algo!r}", field="algo")
    merged = dict(_DEFAULT_HYPERPARAMS[algo])
    for key, value in (hyperparams or {}).items():
        if key not in merged:
            raise InvalidHyperparams(f"{algo} does not accept hyperparameter {key!r}", field=key)
        merged[key] = value
    if algo == "random_forest" and merged["n_estimators"] < 1:
        raise InvalidHyperparams("n_estimators must be >= 1", field="n_estimators")
    if algo == "knn" and merged["k"] < 1:
        raise InvalidHyperparams("k must be >= 1", field="k")
    if algo == "logistic_regression" and merged["max_iter"] < 1:
        raise InvalidHyperparams("max_iter must be >= 1", field="max_iter")
    return merged


@dataclass(eq=False)
class TrainedModel:
    algorithm: str
    hyperparams: dict
    scaler: ScalerParams
    seed: int
    classes: list[str]
    impl: object
    converged: bool = True
    flags: list[str] = field(default_factory=list)

    def _proba_matrix(self, X, scaled: bool) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if not scaled:
            X = scale_matrix(X, self.scaler)
        return self.impl.predict_proba(X)

    def predict(self, vector, scaled: bool = False) -> tuple[str, dict[str, float]]:
        """-> (label, probabilities over the four classes, summing to 1)."""
        values = vector.values if isinstance(vector, FeatureVector) else np.asarray(vector)
        probs = self._proba_matrix(values[None, :], scaled)[0]
        label = TRAINING_CLASSES[int(np.argmax(probs))]
        return label, {cls: float(p) for cls, p in zip(TRAINING_CLASSES, probs)}

    def predict_batch(self, X, scaled: bool = False) -> tuple[list[str], np.ndarray]:
        probs = self._proba_matrix(X, scaled)
        labels = [TRAINING_CLASSES[i] for i in np.argmax(probs, axis=1)]
        return labels, probs


def train(dataset: Dataset, algo: str, hyperparams=None, seed: int = 0) -> TrainedModel:
    """Fit one model family; the scaler is fit on the training rows only."""
    if len(dataset) == 0:
        raise EmptyInput("cannot train on an empty dataset")
    classes = dataset.classes_present()
    if len(classes) < 2:
        raise ClassTooSmall("training needs at least two classes present")
    merged = _merge_hyperparams(algo, hyperparams)

    scaler = fit_scaler([FeatureVector(values=row) for row in dataset.X])
    X = scale_matrix(dataset.X, scaler)
    y = dataset.y
    n_classes = len(TRAINING_CLASSES)

    converged = True
    if algo == "decision_tree":
        impl = DecisionTreeClassifier(
            max_depth=merged["max_depth"], min_samples_split=merged["min_samples_split"]
        ).fit(X, y, n_classes)
    elif algo == "random_forest":
        impl = RandomForestClassifier(
            n_estimators=merged["n_estimators"],
            max_depth=merged["max_depth"],
            min_samples_split=merged["min_samples_split"],
            seed=seed,
        ).fit(X, y, n_classes)
    elif algo == "knn":
        impl = KNNClassifier(k=merged["k"]).fit(X, y, n_classes)
    elif algo == "logistic_regression":
        impl = LogisticRegressionClassifier(
            l2=merged["l2"],
            learning_rate=merged["learning_rate"],
            max_iter=merged["max_iter"],
            tol=merged["tol"],
        ).fit(X, y, n_classes)
        converged = impl.converged
    else:
        impl = GaussianNBClassifier(var_smoothing=merged["var_smoothing"]).fit(X, y, n_classes)

    flags = [] if converged else ["non_convergence"]
    return TrainedModel(
        algorithm=algo,
        hyperparams=merged,
        scaler=scaler,
        seed=seed,
        classes=classes,
        impl=impl,
        converged=converged,
        flags=flags,
    )


@dataclass(eq=False)
class EvalReport:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    confusion: list[list[int]]
    supports: dict[str, int]
    missing_classes: list[str]

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "confusion": self.confusion,
            "classes": list(TRAINING_CLASSES),
            "supports": self.supports,
            "missing_classes": self.missing_classes,
        }


def evaluate(model: TrainedModel, test: Dataset) -> EvalReport:
    """Accuracy, macro precision/recall/F1, and the 4x4 confusion matrix.

    Rows are true classes, columns predicted.  Classes absent from the
    test set contribute zero to the macro averages and are flagged."""
    if len(test) == 0:
        raise EmptyInput("cannot evaluate on an empty dataset")
    n_classes = len(TRAINING_CLASSES)
    predicted, _ = model.predict_batch(test.X)
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    for true_label, pred_label in zip(test.labels, predicted):
        confusion[TRAINING_CLASSES.index(true_label), TRAINING_CLASSES.index(pred_label)] += 1

    supports = confusion.sum(axis=1)
    predicted_counts = confusion.sum(axis=0)
    diag = np.diag(confusion)
    precision = np.where(predicted_counts > 0, diag / np.maximum(predicted_counts, 1), 0.0)
    recall = np.where(supports > 0, diag / np.maximum(supports, 1), 0.0)
    denom = precision + recall
    f1 = np.where(denom > 0, 2.0 * precision * recall / np.maximum(denom, 1e-300), 0.0)

    return EvalReport(
        accuracy=float(diag.sum() / confusion.sum()),
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        confusion=confusion.tolist(),
        supports={cls: int(s) for cls, s in zip(TRAINING_CLASSES, supports)},
        missing_classes=[cls for cls, s in zip(TRAINING_CLASSES, supports) if s == 0],
    )


def _fold_seed(seed: int, fold: int) -> int:
    state = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, 0xCF0, fold]).generate_state(2)
    return int(state[0]) << 32 | int(state[1])


def cross_validate_grid(
    dataset: Dataset, algo: str, grid: list[dict], k: int = 5, seed: int = 0
) -> tuple[dict, list[tuple[dict, float]]]:
    """Stratified k-fold CV over a hyperparameter grid.

    Returns the winning candidate (highest mean validation accuracy, ties
    to the earliest in grid order) and every candidate's mean accuracy."""
    if not grid:
        raise EmptyInput("grid must hold at least one candidate")
    folds = stratified_folds(dataset.labels, k, seed)
    results: list[tuple[dict, float]] = []
    best_idx = 0
    best_acc = -1.0
    for ci, candidate in enumerate(grid):
        accs = []
        for fi, (train_rows, val_rows) in enumerate(folds):
            model = train(dataset.subset(train_rows), algo, candidate, seed=_fold_seed(seed, fi))
            val = dataset.subset(val_rows)
            predicted, _ = model.predict_batch(val.X)
            accs.append(sum(p == t for p, t in zip(predicted, val.labels)) / len(val))
        mean_acc = float(np.mean(accs))
        results.append((candidate, mean_acc))
        if mean_acc > best_acc:
            best_acc = mean_acc
            best_idx = ci
    return grid[best_idx], results


def ensemble_vote(models: list[TrainedModel], vector) -> str:
    """Majority label across models; ties resolve to the fixed class order."""
    if not models:
        raise EmptyInput("ensemble needs at least one model")
    votes = np.zeros(len(TRAINING_CLASSES), dtype=np.int64)
    for model in models:
        label, _ = model.predict(vector)
        votes[TRAINING_CLASSES.index(label)] += 1
    return TRAINING_CLASSES[int(np.argmax(votes))]


def save_model(model: TrainedModel, path) -> None:
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "algorithm": model.algorithm,
        "hyperparams": model.hyperparams,
        "seed": model.seed,
        "classes": model.classes,
        "converged": model.converged,
        "flags": model.flags,
        "scaler": {"means": model.scaler.means.tolist(), "stds": model.scaler.stds.tolist()},
        "params": model.impl.to_obj(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


_IMPL_LOADERS = {
    "decision_tree": DecisionTreeClassifier.from_obj,
    "random_forest": RandomForestClassifier.from_obj,
    "knn": KNNClassifier.from_obj,
    "logistic_regression": LogisticRegressionClassifier.from_obj,
    "gaussian_nb": GaussianNBClassifier.from_obj,
}


def load_model(path) -> TrainedModel:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"model file is not JSON: {exc}") from None
    if payload.get("format") != MODEL_FORMAT:
        raise MalformedInput("not a model file", field="format")
    if payload.get("version") != MODEL_VERSION:
        raise MalformedInput(f"unsupported model version {payload.get('version')}", field="version")
    algo = payload["algorithm"]
    if algo not in _IMPL_LOADERS:
        raise MalformedInput(f"unknown algorithm {algo!r}", field="algorithm")
    return TrainedModel(
        algorithm=algo,
        hyperparams=payload["hyperparams"],
        scaler=ScalerParams(
            means=np.asarray(payload["scaler"]["means"]),
            stds=np.asarray(payload["scaler"]["stds"]),
        ),
        seed=payload["seed"],
        classes=payload["classes"],
        impl=_IMPL_LOADERS[algo](payload["params"]),
        converged=payload["converged"],
        flags=payload.get("flags", []),
    )
