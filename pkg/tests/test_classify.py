import numpy as np
import pytest

from sketchvc.classify import (
    Dataset,
    cross_validate_grid,
    ensemble_vote,
    evaluate,
    load_model,
    save_model,
    split_stratified,
    stratified_folds,
    train,
)
from sketchvc.classify.api import TrainedModel
from sketchvc.classify.trees import DecisionTreeClassifier
from sketchvc.errors import ClassTooSmall, EmptyInput, InvalidHyperparams, InvalidSpec
from sketchvc.features import N_FEATURES, FeatureVector, ScalerParams, apply_scaler
from sketchvc.strokes import TRAINING_CLASSES
from sketchvc.synth import gen_dataset


@pytest.fixture(scope="module")
def small_dataset():
    return Dataset.from_labeled_records(gen_dataset(40, seed=42))


@pytest.fixture(scope="module")
def split(small_dataset):
    return split_stratified(small_dataset, 0.75, seed=1)


def two_cluster_dataset(n_per_side=30, gap=5.0, seed=0):
    rng = np.random.default_rng(seed)
    X = np.zeros((2 * n_per_side, N_FEATURES))
    X[:n_per_side, 0] = rng.normal(-gap, 0.1, n_per_side)
    X[n_per_side:, 0] = rng.normal(gap, 0.1, n_per_side)
    X[:, 1] = rng.normal(0.0, 0.1, 2 * n_per_side)
    labels = ["constraining"] * n_per_side + ["defining"] * n_per_side
    ids = [f"row-{i}" for i in range(2 * n_per_side)]
    return Dataset(X=X, labels=labels, ids=ids)


def constant_model(probs):
    """A model whose single leaf always emits the given class distribution."""
    tree = DecisionTreeClassifier()
    tree.n_classes = len(TRAINING_CLASSES)
    tree.root = {"probs": list(probs)}
    return TrainedModel(
        algorithm="decision_tree",
        hyperparams={},
        scaler=ScalerParams(means=np.zeros(N_FEATURES), stds=np.ones(N_FEATURES)),
        seed=0,
        classes=list(TRAINING_CLASSES),
        impl=tree,
    )


# --- splitting -----------------------------------------------------------

def test_split_preserves_class_proportions(small_dataset):
    tr, te = split_stratified(small_dataset, 0.75, seed=3)
    assert len(tr) == 120 and len(te) == 40
    for cls in TRAINING_CLASSES:
        assert tr.labels.count(cls) == 30
        assert te.labels.count(cls) == 10


def test_split_fraction_bounds(small_dataset):
    for bad in (0.0, 1.0, -0.2, 1.7):
        with pytest.raises(InvalidSpec):
            split_stratified(small_dataset, bad, seed=0)


def test_split_is_a_partition(small_dataset):
    tr, te = split_stratified(small_dataset, 0.6, seed=9)
    assert set(tr.ids) | set(te.ids) == set(small_dataset.ids)
    assert set(tr.ids) & set(te.ids) == set()


def test_split_deterministic(small_dataset):
    a = split_stratified(small_dataset, 0.75, seed=5)[0].ids
    b = split_stratified(small_dataset, 0.75, seed=5)[0].ids
    assert a == b
    c = split_stratified(small_dataset, 0.75, seed=6)[0].ids
    assert a != c


def test_fold_sizes_differ_by_at_most_one(small_dataset):
    folds = stratified_folds(small_dataset.labels, 5, seed=1)
    sizes = [len(val) for _, val in folds]
    assert max(sizes) - min(sizes) <= 1
    assert sum(sizes) == len(small_dataset)
    joined = np.concatenate([val for _, val in folds])
    assert sorted(joined.tolist()) == list(range(len(small_dataset)))


def test_folds_need_enough_per_class():
    ds = two_cluster_dataset(n_per_side=3)
    with pytest.raises(ClassTooSmall):
        stratified_folds(ds.labels, 5, seed=0)


# --- training ------------------------------------------------------------

def test_logistic_separable_clusters_perfect_train_accuracy():
    ds = two_cluster_dataset()
    model = train(ds, "logistic_regression", seed=0)
    predicted, _ = model.predict_batch(ds.X)
    assert predicted == ds.labels


def test_training_needs_two_classes():
    ds = two_cluster_dataset()
    solo = ds.subset(np.arange(30))
    with pytest.raises(ClassTooSmall):
        train(solo, "decision_tree")


def test_unknown_hyperparameter_rejected(split):
    with pytest.raises(InvalidHyperparams):
        train(split[0], "knn", {"neighbours": 3})
    with pytest.raises(InvalidHyperparams):
        train(split[0], "random_forest", {"n_estimators": 0})
    with pytest.raises(InvalidHyperparams):
        train(split[0], "nonsense")


def test_forest_holdout_accuracy(split):
    tr, te = split
    model = train(tr, "random_forest", {"n_estimators": 30}, seed=7)
    assert evaluate(model, te).accuracy >= 0.95


def test_same_seed_identical_predictions(split):
    tr, te = split
    a = train(tr, "random_forest", {"n_estimators": 15}, seed=3)
    b = train(tr, "random_forest", {"n_estimators": 15}, seed=3)
    pa, _ = a.predict_batch(te.X)
    pb, _ = b.predict_batch(te.X)
    assert pa == pb


def test_nonconvergence_flag_never_aborts():
    ds = two_cluster_dataset()
    model = train(ds, "logistic_regression", {"max_iter": 3}, seed=0)
    assert model.converged is False
    assert "non_convergence" in model.flags
    model.predict(FeatureVector(values=ds.X[0]))


# --- prediction ----------------------------------------------------------

def test_one_nn_predicts_its_own_training_point(split):
    tr, _ = split
    model = train(tr, "knn", {"k": 1}, seed=0)
    for i in (0, 17, 63):
        label, _ = model.predict(FeatureVector(values=tr.X[i]))
        assert label == tr.labels[i]


def test_even_vote_resolves_to_fixed_class_order():
    fifty_fifty = constant_model([0.5, 0.0, 0.0, 0.5])
    label, probs = fifty_fifty.predict(np.zeros(N_FEATURES))
    assert label == "constraining"
    assert probs["constraining"] == 0.5


def test_probabilities_nonnegative_and_normalized(split):
    tr, _ = split
    rng = np.random.default_rng(0)
    models = [train(tr, a, seed=1) for a in ("random_forest", "knn", "logistic_regression", "gaussian_nb")]
    probes = rng.normal(0, 50, size=(250, N_FEATURES))
    for model in models:
        _, probs = model.predict_batch(probes)
        assert np.all(probs >= 0)
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)


def test_model_owns_scaling(split):
    tr, te = split
    model = train(tr, "logistic_regression", seed=0)
    for i in (0, 5, 11):
        raw = FeatureVector(values=te.X[i])
        pre = apply_scaler(raw, model.scaler)
        assert model.predict(raw) == model.predict(pre, scaled=True)


# --- cross-validation ----------------------------------------------------

def test_single_candidate_grid(split):
    best, results = cross_validate_grid(split[0], "knn", [{"k": 3}], k=5, seed=0)
    assert best == {"k": 3}
    assert len(results) == 1


def test_forest_grid_winner(split):
    grid = [{"n_estimators": n} for n in (10, 20)]
    best, results = cross_validate_grid(split[0], "random_forest", grid, k=5, seed=42)
    assert best in grid
    assert max(acc for _, acc in results) >= 0.95


def test_grid_tie_breaks_to_earliest():
    ds = two_cluster_dataset(n_per_side=40)
    grid = [{"k": 1}, {"k": 3}]
    best, results = cross_validate_grid(ds, "knn", grid, k=5, seed=0)
    accs = [acc for _, acc in results]
    if accs[0] == accs[1]:
        assert best == {"k": 1}


# --- evaluation ----------------------------------------------------------

def test_perfect_predictor_metrics(split):
    tr, te = split
    model = train(tr, "random_forest", {"n_estimators": 30}, seed=7)
    report = evaluate(model, te)
    if report.accuracy == 1.0:
        matrix = np.asarray(report.confusion)
        assert np.all(matrix == np.diag(np.diag(matrix)))
        assert report.macro_f1 == 1.0


def test_constant_predictor_on_balanced_set(split):
    _, te = split
    model = constant_model([0.0, 0.0, 1.0, 0.0])  # always "detailing"
    report = evaluate(model, te)
    assert report.accuracy == pytest.approx(0.25)


def test_accuracy_equals_trace_over_total(split):
    tr, te = split
    model = train(tr, "gaussian_nb", seed=0)
    report = evaluate(model, te)
    matrix = np.asarray(report.confusion)
    assert report.accuracy == pytest.approx(np.trace(matrix) / matrix.sum())
    # row sums are the class supports
    for ci, cls in enumerate(TRAINING_CLASSES):
        assert matrix[ci].sum() == report.supports[cls]


def test_missing_class_flagged(split):
    tr, te = split
    only_two = te.subset([i for i, lbl in enumerate(te.labels) if lbl in ("constraining", "defining")])
    report = evaluate(train(tr, "knn", seed=0), only_two)
    assert set(report.missing_classes) == {"detailing", "hatches"}


def test_evaluate_empty_raises(split):
    with pytest.raises(EmptyInput):
        evaluate(train(split[0], "knn", seed=0), split[1].subset([]))


# --- ensembles -----------------------------------------------------------

def test_agreeing_ensemble():
    model = constant_model([0.0, 1.0, 0.0, 0.0])
    assert ensemble_vote([model, model, model], np.zeros(N_FEATURES)) == "defining"


def test_two_two_tie_goes_to_fixed_order():
    defining = constant_model([0.0, 1.0, 0.0, 0.0])
    detailing = constant_model([0.0, 0.0, 1.0, 0.0])
    label = ensemble_vote([defining, detailing, detailing, defining], np.zeros(N_FEATURES))
    assert label == "defining"


def test_single_model_ensemble_equals_predict(split):
    tr, te = split
    model = train(tr, "knn", seed=0)
    probe = FeatureVector(values=te.X[3])
    assert ensemble_vote([model], probe) == model.predict(probe)[0]


def test_empty_ensemble_raises():
    with pytest.raises(EmptyInput):
        ensemble_vote([], np.zeros(N_FEATURES))


# --- persistence / determinism -------------------------------------------

@pytest.mark.parametrize("algo", ["decision_tree", "random_forest", "knn", "logistic_regression", "gaussian_nb"])
def test_save_load_prediction_fidelity(tmp_path, split, algo):
    tr, _ = split
    model = train(tr, algo, seed=5)
    path = tmp_path / f"{algo}.model.json"
    save_model(model, path)
    loaded = load_model(path)
    rng = np.random.default_rng(123)
    probes = rng.normal(0, 10, size=(1000, N_FEATURES))
    la, pa = model.predict_batch(probes)
    lb, pb = loaded.predict_batch(probes)
    assert la == lb
    assert np.allclose(pa, pb)


def test_loader_rejects_unknown_version(tmp_path, split):
    import json

    model = train(split[0], "knn", seed=0)
    path = tmp_path / "m.json"
    save_model(model, path)
    payload = json.loads(path.read_text())
    payload["version"] = 99
    path.write_text(json.dumps(payload))
    from sketchvc.errors import MalformedInput

    with pytest.raises(MalformedInput):
        load_model(path)


def test_forest_monotonicity_over_seeds():
    wins = 0
    labeled = gen_dataset(15, seed=2)
    ds = Dataset.from_labeled_records(labeled)
    for seed in range(5):
        big = train(ds, "random_forest", {"n_estimators": 200}, seed=seed)
        one = train(ds, "random_forest", {"n_estimators": 1}, seed=seed)
        big_acc = evaluate(big, ds).accuracy
        one_acc = evaluate(one, ds).accuracy
        wins += big_acc >= one_acc
    assert wins >= 3  # statistical: majority of seeds
