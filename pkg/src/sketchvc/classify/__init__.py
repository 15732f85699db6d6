"""Native classical classifiers over the 158-feature stroke vectors.

Five model families (decision tree, random forest, k-nearest neighbours,
multinomial logistic regression, Gaussian naive Bayes), a stratified
train/test split, stratified k-fold grid search, evaluation metrics, and
majority-vote ensembling.  Class order is fixed (constraining < defining
< detailing < hatches) and breaks every tie.
"""

from .dataset import Dataset, split_stratified, stratified_folds
from .api import (
    EvalReport,
    TrainedModel,
    cross_validate_grid,
    ensemble_vote,
    evaluate,
    load_model,
    save_model,
    train,
)

__all__ = [
    "Dataset",
    "EvalReport",
    "TrainedModel",
    "cross_validate_grid",
    "ensemble_vote",
    "evaluate",
    "load_model",
    "save_model",
    "split_stratified",
    "stratified_folds",
    "train",
]
