import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import auc_bruteforce, cohens_d_direct, kahan_mean_columns, mwu_exact_bruteforce
from sketchvc.errors import (
    DimensionMismatch,
    EmptyInput,
    LayerMismatch,
    MalformedInput,
    NonFinite,
    ZeroVariance,
    ZeroVector,
)
from sketchvc.similarity import (
    ActivationMatrix,
    PooledVector,
    SimilarityMatrix,
    auc_roc,
    cohens_d,
    cosine,
    layer_rank,
    load_activation,
    load_activation_csv,
    mann_whitney_u,
    mean_difference,
    mean_pool,
    save_activation,
    save_activation_csv,
    similarity_from_pooled,
    similarity_matrix,
)


def mat(data, sketch_id="s", layer=31):
    return ActivationMatrix(sketch_id=sketch_id, layer=layer, data=np.asarray(data, dtype=np.float64))


# --- container io ------------------------------------------------------------

def test_container_roundtrip_bitwise(tmp_path):
    rng = np.random.default_rng(1)
    data = rng.normal(size=(5, 7))
    save_activation(mat(data, "alpha", 13), tmp_path / "a.act")
    loaded = load_activation(tmp_path / "a.act")
    assert loaded.sketch_id == "alpha"
    assert loaded.layer == 13
    assert loaded.rows == 5 and loaded.cols == 7
    assert np.array_equal(loaded.data, data)  # float64: bit-exact


def test_container_small_dtypes(tmp_path):
    data = np.asarray([[1.0, 2.0], [3.0, 4.0]])
    save_activation(mat(data), tmp_path / "f16.act", dtype=np.float16)
    assert np.array_equal(load_activation(tmp_path / "f16.act").data, data)


def test_container_rejects_garbage(tmp_path):
    (tmp_path / "bad.act").write_bytes(b"not a container at all")
    with pytest.raises(MalformedInput):
        load_activation(tmp_path / "bad.act")


def test_nan_rejected():
    with pytest.raises(NonFinite):
        mat([[1.0, float("nan")]])


def test_csv_fallback_roundtrip(tmp_path):
    data = np.asarray([[1.5, -2.25], [0.0, 4.125]])
    save_activation_csv(mat(data), tmp_path / "m.csv")
    loaded = load_activation_csv(tmp_path / "m.csv", "s", 3)
    assert np.array_equal(loaded.data, data)
    assert loaded.layer == 3


def test_csv_ragged_rejected(tmp_path):
    (tmp_path / "r.csv").write_text("1,2\n3\n")
    with pytest.raises(MalformedInput):
        load_activation_csv(tmp_path / "r.csv", "s", 0)


# --- pooling -----------------------------------------------------------------

def test_mean_pool_arithmetic():
    pooled = mean_pool(mat([[1.0, 2.0], [3.0, 4.0]]))
    assert np.array_equal(pooled.vector, [2.0, 3.0])


def test_mean_pool_single_row():
    pooled = mean_pool(mat([[7.0, 8.0, 9.0]]))
    assert np.array_equal(pooled.vector, [7.0, 8.0, 9.0])


def test_mean_pool_matches_kahan_oracle():
    rng = np.random.default_rng(2)
    data = rng.normal(scale=100.0, size=(577, 64))
    pooled = mean_pool(mat(data))
    expected = kahan_mean_columns(data.tolist())
    assert np.allclose(pooled.vector, expected, rtol=1e-9)


def test_pooling_linearity():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(10, 6))
    b = rng.normal(size=(10, 6))
    left = mean_pool(mat(a + b)).vector
    right = mean_pool(mat(a)).vector + mean_pool(mat(b)).vector
    assert np.allclose(left, right, atol=1e-12)


# --- cosine --------------------------------------------------------------------

def test_cosine_self_is_one():
    v = PooledVector(sketch_id="s", layer=0, vector=np.asarray([3.0, 4.0]))
    assert cosine(v, v) == pytest.approx(1.0, abs=1e-12)


def test_cosine_orthogonal():
    assert cosine(np.asarray([1.0, 0.0]), np.asarray([0.0, 1.0])) == 0.0


def test_cosine_analytic_value():
    got = cosine(np.asarray([1.0, 0.0]), np.asarray([1.0, 1.0]))
    assert got == pytest.approx(math.sqrt(0.5), abs=1e-9)


def test_cosine_errors():
    with pytest.raises(ZeroVector):
        cosine(np.zeros(3), np.ones(3))
    with pytest.raises(DimensionMismatch):
        cosine(np.ones(3), np.ones(4))


@settings(max_examples=100)
@given(
    st.lists(st.floats(min_value=-100, max_value=100), min_size=3, max_size=8),
    st.floats(min_value=1e-3, max_value=1e3),
    st.floats(min_value=1e-3, max_value=1e3),
)
def test_cosine_scale_invariance(values, alpha, beta):
    v = np.asarray(values) + 0.5  # keep away from the zero vector
    u = v[::-1].copy()
    base = cosine(u, v)
    scaled = cosine(alpha * u, beta * v)
    assert scaled == pytest.approx(base, abs=1e-12)


# --- similarity matrix ------------------------------------------------------------

def test_duplicate_matrices_all_ones():
    m = mat(np.arange(12.0).reshape(3, 4) + 1.0)
    result = similarity_matrix([m, m])
    assert np.allclose(result.values, 1.0)


def test_matrix_shape_and_invariants():
    rng = np.random.default_rng(5)
    mats = [mat(rng.normal(size=(4, 16)), sketch_id=f"s{i}") for i in range(30)]
    result = similarity_matrix(mats)
    assert result.values.shape == (30, 30)
    assert np.array_equal(result.values, result.values.T)
    assert np.allclose(np.diag(result.values), 1.0, atol=1e-9)
    assert result.values.min() >= -1.0 and result.values.max() <= 1.0


def test_matrix_transpose_fuzz():
    rng = np.random.default_rng(6)
    for _ in range(5):
        mats = [mat(rng.normal(size=(3, 8)), sketch_id=f"s{i}") for i in range(6)]
        values = similarity_matrix(mats).values
        assert np.allclose(values, values.T, atol=1e-12)


def test_matrix_layer_and_dim_mismatch():
    a = mat(np.ones((2, 3)), layer=1)
    b = mat(np.ones((2, 3)), layer=2)
    with pytest.raises(LayerMismatch):
        similarity_matrix([a, b])
    c = mat(np.ones((2, 4)), layer=1)
    with pytest.raises(DimensionMismatch):
        similarity_matrix([a, c])


def test_matrix_zero_vector_names_offender():
    good = mat(np.ones((2, 3)), sketch_id="good")
    bad = mat(np.vstack([np.ones(3), -np.ones(3)]), sketch_id="offender")
    with pytest.raises(ZeroVector) as err:
        similarity_matrix([good, bad])
    assert "offender" in str(err.value)


def test_matrix_needs_two():
    with pytest.raises(EmptyInput):
        similarity_from_pooled([PooledVector("s", 0, np.ones(3))])


def test_matrix_csv_export(tmp_path):
    rng = np.random.default_rng(7)
    mats = [mat(rng.normal(size=(3, 5)), sketch_id=f"s{i}") for i in range(3)]
    result = similarity_matrix(mats)
    result.to_csv(tmp_path / "sim.csv")
    text = (tmp_path / "sim.csv").read_text().splitlines()
    assert text[0] == "id,s0,s1,s2"
    assert len(text) == 4


# --- auc / effect size ----------------------------------------------------------

def test_auc_perfect_separation():
    assert auc_roc([3.0, 4.0], [1.0, 2.0]) == 1.0


def test_auc_identical_lists():
    assert auc_roc([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.5


def test_auc_matches_bruteforce():
    rng = np.random.default_rng(8)
    for _ in range(20):
        a = rng.integers(0, 12, size=rng.integers(1, 10)).astype(float).tolist()
        b = rng.integers(0, 12, size=rng.integers(1, 10)).astype(float).tolist()
        assert auc_roc(a, b) == pytest.approx(auc_bruteforce(a, b), abs=1e-12)


def test_auc_complement():
    rng = np.random.default_rng(9)
    a = rng.normal(size=15).tolist()
    b = rng.normal(size=9).tolist()
    assert auc_roc(a, b) + auc_roc(b, a) == pytest.approx(1.0, abs=1e-12)


def test_auc_empty():
    with pytest.raises(EmptyInput):
        auc_roc([], [1.0])


def test_cohens_d_identical():
    assert cohens_d([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0


def test_cohens_d_unit_case():
    # means 1 and 0, both samples with variance 1 -> pooled sd 1 -> d = 1
    a = [0.0, 1.0, 2.0]
    b = [-1.0, 0.0, 1.0]
    assert cohens_d(a, b) == pytest.approx(1.0)


def test_cohens_d_matches_direct_formula():
    rng = np.random.default_rng(10)
    for _ in range(10):
        a = rng.normal(2.0, 1.5, size=12).tolist()
        b = rng.normal(1.0, 0.5, size=8).tolist()
        assert cohens_d(a, b) == pytest.approx(cohens_d_direct(a, b), abs=1e-12)


def test_cohens_d_zero_variance():
    with pytest.raises(ZeroVariance):
        cohens_d([1.0, 1.0], [1.0, 1.0])


# --- mann-whitney -----------------------------------------------------------------

def test_mwu_identical_samples():
    a = [1.0, 2.0, 3.0, 4.0]
    u, p = mann_whitney_u(a, list(a))
    assert u == len(a) * len(a) / 2
    assert p >= 0.9


def test_mwu_full_separation_exact():
    a = [float(v) for v in range(11, 21)]
    b = [float(v) for v in range(1, 11)]
    u, p = mann_whitney_u(a, b)
    assert u == 100.0
    assert p == pytest.approx(2.0 / math.comb(20, 10), rel=1e-9)
    assert p < 0.001


def test_mwu_u_complement_identity():
    rng = np.random.default_rng(11)
    a = rng.normal(size=7).tolist()
    b = rng.normal(size=5).tolist()
    u_a, _ = mann_whitney_u(a, b)
    u_b, _ = mann_whitney_u(b, a)
    assert u_a + u_b == pytest.approx(len(a) * len(b))


def test_mwu_matches_bruteforce_enumeration():
    rng = np.random.default_rng(12)
    for _ in range(6):
        a = rng.permutation(np.arange(20.0))[: rng.integers(2, 5)].tolist()
        b = rng.permutation(np.arange(20.0) + 100.0)[: rng.integers(2, 5)].tolist()
        u_ours, p_ours = mann_whitney_u(a, b)
        u_brute, p_brute = mwu_exact_bruteforce(a, b)
        assert u_ours == pytest.approx(u_brute)
        assert p_ours == pytest.approx(p_brute, rel=1e-9)


def test_mwu_empty():
    with pytest.raises(EmptyInput):
        mann_whitney_u([], [1.0])


def test_replication_fidelity_fixture():
    # two replication-quality groups centred on medians 0.97 and 0.73
    high = [0.955, 0.96, 0.965, 0.968, 0.97, 0.97, 0.972, 0.975, 0.98, 0.98, 0.985]
    low = [0.60, 0.65, 0.68, 0.70, 0.72, 0.73, 0.74, 0.76, 0.78, 0.80, 0.82]
    assert float(np.median(high)) == 0.97
    assert float(np.median(low)) == 0.73
    assert np.percentile(high, 25) >= 0.96 and np.percentile(high, 75) <= 0.98
    _, p = mann_whitney_u(high, low)
    assert p < 0.05


# --- layer ranking ------------------------------------------------------------------

def test_single_layer_normalizes_to_one():
    report = layer_rank({4: ([0.9, 0.8, 0.85], [0.2, 0.3, 0.25])})
    assert report.normalized[4] == {"auc_roc": 1.0, "cohens_d": 1.0, "mean_difference": 1.0}


def test_final_layer_dominates_fixture():
    rng = np.random.default_rng(13)
    scores = {}
    for layer in range(0, 32, 6):
        gap = 0.012 * layer  # separation improves with depth
        similar = (0.5 + gap + 0.01 * rng.normal(size=12)).tolist()
        dissimilar = (0.5 - gap - 0.01 * rng.normal(size=12)).tolist()
        scores[layer] = (similar, dissimilar)
    scores[31] = ((0.95 + 0.005 * rng.normal(size=12)).tolist(), (0.05 + 0.005 * rng.normal(size=12)).tolist())
    report = layer_rank(scores)
    assert report.normalized[31]["auc_roc"] == 1.0
    assert report.normalized[31]["cohens_d"] == 1.0
    assert report.normalized[31]["mean_difference"] == 1.0


def test_normalization_preserves_order():
    scores = {
        0: ([0.4, 0.45, 0.42], [0.4, 0.41, 0.43]),
        1: ([0.6, 0.62, 0.64], [0.3, 0.32, 0.31]),
        2: ([0.8, 0.82, 0.81], [0.1, 0.12, 0.11]),
    }
    report = layer_rank(scores)
    for name in ("auc_roc", "cohens_d", "mean_difference"):
        raw = [report.metrics[layer][name] for layer in report.layers]
        norm = [report.normalized[layer][name] for layer in report.layers]
        assert np.argsort(raw).tolist() == np.argsort(norm).tolist()


def test_layer_rank_empty():
    with pytest.raises(EmptyInput):
        layer_rank({})
