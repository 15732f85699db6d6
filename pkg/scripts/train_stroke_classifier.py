#!/usr/bin/env python3
"""End-to-end classifier experiment on the synthetic stroke corpus.

Generates a class-balanced dataset, runs the stratified 75/25 split, grid
searches the random forest with 5-fold CV, then fits and scores all five
model families plus the majority-vote ensemble.  Saves the winning forest.

Usage:
    python3 scripts/train_stroke_classifier.py [--n-per-class 500] [--seed 42] [--out model.json]
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from sketchvc.classify import (
    Dataset,
    cross_validate_grid,
    ensemble_vote,
    evaluate,
    save_model,
    split_stratified,
    train,
)
from sketchvc.features import FeatureVector
from sketchvc.synth import gen_dataset


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n-per-class", type=int, default=500)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--out", type=Path, default=Path("forest.model.json"))
    args = parser.parse_args()

    t0 = time.time()
    dataset = Dataset.from_labeled_records(gen_dataset(args.n_per_class, seed=args.seed))
    print(f"dataset: {len(dataset)} strokes, {dataset.X.shape[1]} features ({time.time()-t0:.1f}s)")

    train_set, test_set = split_stratified(dataset, 0.75, seed=args.seed)
    print(f"split: {len(train_set)} train / {len(test_set)} test (stratified)")

    grid = [{"n_estimators": n} for n in (50, 100, 200)]
    best, results = cross_validate_grid(train_set, "random_forest", grid, k=5, seed=args.seed)
    for candidate, acc in results:
        print(f"  cv {candidate} -> {acc:.4f}")
    print(f"grid winner: {best}")

    models = {}
    for algo in ("random_forest", "decision_tree", "knn", "logistic_regression", "gaussian_nb"):
        hyper = best if algo == "random_forest" else None
        model = train(train_set, algo, hyper, seed=args.seed)
        report = evaluate(model, test_set)
        models[algo] = model
        flag = "" if model.converged else "  [hit iteration cap]"
        print(f"{algo:22s} acc={report.accuracy:.4f} macroF1={report.macro_f1:.4f}{flag}")

    votes = [models[a] for a in models]
    hits = sum(
        ensemble_vote(votes, FeatureVector(values=test_set.X[i])) == test_set.labels[i]
        for i in range(len(test_set))
    )
    print(f"{'ensemble (voting)':22s} acc={hits / len(test_set):.4f}")

    save_model(models["random_forest"], args.out)
    print(f"saved forest -> {args.out} ({time.time()-t0:.1f}s total)")


if __name__ == "__main__":
    main()
