import numpy as np
import pytest
import scipy.sparse as sp

from featdc.classify import label_from_score, train_linear
from featdc.dataio import Dataset
from featdc.datasets import make_blobs
from featdc.errors import ConfigError, DataError
from featdc.fuse import (DcModel, Guards, LearnerSpec, apply_standardization,
                         build_r, evaluate, predict_dc, standardize_rows,
                         train_dc)


def blob_dataset(n=120, n_features=8, seed=0, separation=8.0):
    return make_blobs(n, n_features=n_features, separation=separation,
                      seed=seed)


# ---------------------------------------------------------------------------
# building blocks


def test_build_r_per_row_oracle():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(3, 30))
    y = np.where(rng.random(30) < 0.5, 1.0, -1.0)
    models = [train_linear(x, y, lam=l) for l in (0.1, 1.0)]
    r = build_r(models, [x, x])
    assert r.shape == (2, 30)
    for k, m in enumerate(models):
        assert np.allclose(r[k], x.T @ m.weights + m.bias, atol=1e-12)


def test_build_r_count_mismatch():
    x = np.ones((2, 4))
    model = train_linear(x, np.array([1, -1, 1, -1]), lam=1.0)
    with pytest.raises(DataError):
        build_r([model], [x, x])


def test_standardize_rows_moments():
    rng = np.random.default_rng(1)
    r = rng.normal(loc=3.0, scale=2.5, size=(5, 200))
    shift, scale = standardize_rows(r)
    rs = apply_standardization(r, shift, scale)
    assert np.allclose(rs.mean(axis=1), 0.0, atol=1e-12)
    assert np.allclose(rs.std(axis=1), 1.0, atol=1e-12)


def test_standardize_rows_leaves_constants_alone():
    r = np.vstack([np.full(50, 7.0), np.linspace(-1, 1, 50)])
    shift, scale = standardize_rows(r)
    assert shift[0] == 0.0 and scale[0] == 1.0
    rs = apply_standardization(r, shift, scale)
    assert np.array_equal(rs[0], r[0])
    assert abs(rs[1].mean()) <= 1e-12


def test_evaluate_oracles():
    perfect = evaluate(np.array([1, -1, 1, -1]), np.array([1, -1, 1, -1]))
    assert perfect["error_rate_pct"] == 0.0
    assert perfect["confusion"] == {"tp": 2, "tn": 2, "fp": 0, "fn": 0}
    one_wrong = evaluate(np.array([1, -1, 1, 1]), np.array([1, -1, 1, -1]))
    assert one_wrong["error_rate_pct"] == 25.0
    assert one_wrong["mismatches"] == 1
    assert one_wrong["confusion"]["fp"] == 1
    with pytest.raises(DataError):
        evaluate(np.array([1, -1]), np.array([1, -1, 1]))


def test_learner_spec_rejects_unknown_type():
    with pytest.raises(ConfigError):
        LearnerSpec(type="svm")


# ---------------------------------------------------------------------------
# end-to-end pipeline properties


def test_train_dc_collapse_to_single_classifier():
    # one rd part keeping every feature makes the single local score the
    # only fusion input; a linear global of a standardized linear score
    # must reproduce direct training label-for-label
    for seed in range(10):
        ds = blob_dataset(n=80, n_features=6, seed=seed)
        model = train_dc(ds, [("rd", 1, 6)],
                         local=LearnerSpec(type="linear", lam=1.0),
                         global_=LearnerSpec(type="linear", lam=1e-8),
                         seed=seed)
        assert model.h == 1
        labels, _ = predict_dc(model, ds)
        direct = train_linear(ds.X, ds.y.astype(np.float64), lam=1.0)
        ref = label_from_score(direct.decision_function(ds.X))
        assert np.array_equal(labels, ref)


def test_train_dc_memorizes_separated_blobs():
    ds = blob_dataset(n=150, n_features=10, seed=3)
    model = train_dc(ds, [("rd", 2, 5), ("pca", 2, 5)],
                     local=LearnerSpec(type="linear"),
                     global_=LearnerSpec(type="trbf", p=2), seed=0)
    labels, _ = predict_dc(model, ds)
    assert evaluate(labels, ds.y)["error_rate_pct"] == 0.0


def test_train_dc_bit_stable_across_runs():
    ds = blob_dataset(n=100, n_features=8, seed=5, separation=3.0)
    plan = [("rd", 2, 4), ("pca", 2, 4), ("bcd", 2, 4), ("abd", 2, 4)]
    runs = []
    for _ in range(3):
        model = train_dc(ds, plan, seed=11)
        _, scores = predict_dc(model, ds)
        runs.append(scores)
    assert np.array_equal(runs[0], runs[1])
    assert np.array_equal(runs[1], runs[2])


def test_train_dc_thread_count_does_not_change_scores():
    ds = blob_dataset(n=90, n_features=8, seed=7, separation=3.0)
    plan = [("rd", 2, 4), ("dca", 2, 4), ("abd", 2, 4)]
    m1 = train_dc(ds, plan, seed=2, threads=1)
    m4 = train_dc(ds, plan, seed=2, threads=4)
    s1 = predict_dc(m1, ds, threads=1)[1]
    s4 = predict_dc(m4, ds, threads=4)[1]
    assert np.max(np.abs(s1 - s4)) <= 1e-12


def test_train_dc_duplicated_features_share_weight():
    # duplicating the feature block as a second subspace splits the fused
    # contribution evenly between identical locals; predictions match the
    # single-subspace model exactly
    ds = blob_dataset(n=80, n_features=6, seed=9)
    one = train_dc(ds, [("rd", 1, 6)],
                   local=LearnerSpec(type="linear", lam=1.0),
                   global_=LearnerSpec(type="linear", lam=1e-6), seed=4)
    two_parts = [("rd", 1, 6), ("rd", 1, 6)]
    two = train_dc(ds, two_parts,
                   local=LearnerSpec(type="linear", lam=1.0),
                   global_=LearnerSpec(type="linear", lam=1e-6), seed=4)
    assert two.h == 2
    w = two.global_model.weights
    # the duplicated direction carries only the ridge, so the split is even
    # to roughly the solve's conditioning
    assert abs(w[0] - w[1]) <= 1e-5 * abs(w[0] + w[1])
    assert abs((w[0] + w[1]) - one.global_model.weights[0]) <= 1e-4
    l1, _ = predict_dc(one, ds)
    l2, _ = predict_dc(two, ds)
    assert np.array_equal(l1, l2)


def test_train_dc_plan_order_does_not_change_linear_fusion_labels():
    ds = blob_dataset(n=100, n_features=8, seed=13, separation=3.0)
    base = [("pca", 2, 4), ("bcd", 2, 4)]
    swapped = [("bcd", 2, 4), ("pca", 2, 4)]
    kw = dict(local=LearnerSpec(type="linear", lam=1.0),
              global_=LearnerSpec(type="linear", lam=1e-8))
    la = predict_dc(train_dc(ds, base, seed=1, **kw), ds)[0]
    lb = predict_dc(train_dc(ds, swapped, seed=1, **kw), ds)[0]
    assert np.array_equal(la, lb)


def test_train_dc_stage_names_tag_errors():
    ds = blob_dataset(n=40, n_features=30, seed=1)
    # trbf locals on 10-dimensional views with p=4 exceed a tiny intrinsic
    # cap, and the guard fires inside local training
    with pytest.raises(ConfigError, match="local training"):
        train_dc(ds, [("rd", 3, 10)],
                 local=LearnerSpec(type="trbf", p=4),
                 guards=Guards(max_intrinsic_dim=50), seed=0)
    with pytest.raises(ConfigError, match="decomposition fitting"):
        train_dc(ds, [("pca", 3, 10)],
                 guards=Guards(max_dense_features=8), seed=0)


def test_train_dc_crossfit_path():
    ds = blob_dataset(n=100, n_features=8, seed=17)
    m1 = train_dc(ds, [("rd", 2, 4)], crossfit=True, seed=5,
                  global_=LearnerSpec(type="linear", lam=1.0))
    m2 = train_dc(ds, [("rd", 2, 4)], crossfit=True, seed=5,
                  global_=LearnerSpec(type="linear", lam=1.0))
    s1 = predict_dc(m1, ds)[1]
    s2 = predict_dc(m2, ds)[1]
    assert np.array_equal(s1, s2)
    labels, _ = predict_dc(m1, ds)
    assert evaluate(labels, ds.y)["error_rate_pct"] <= 5.0
    tiny = blob_dataset(n=4, n_features=4, seed=0)
    with pytest.raises(DataError):
        train_dc(tiny, [("rd", 1, 4)], crossfit=True, seed=0)


def test_predict_dc_zero_score_maps_positive():
    ds = blob_dataset(n=40, n_features=4, seed=21)
    model = train_dc(ds, [("rd", 1, 4)],
                     global_=LearnerSpec(type="linear", lam=1.0), seed=0)
    # zero out the global model so every fused score is exactly 0
    model.global_model.weights[:] = 0.0
    model.global_model.bias = 0.0
    labels, scores = predict_dc(model, ds)
    assert np.array_equal(scores, np.zeros(ds.n_instances))
    assert np.array_equal(labels, np.ones(ds.n_instances, dtype=np.int64))


def test_train_dc_timing_keys():
    ds = blob_dataset(n=60, n_features=8, seed=2)
    model = train_dc(ds, [("rd", 1, 4), ("pca", 1, 4)], seed=0)
    t = model.fit_timings
    for key in ("fit_rd", "fit_pca", "fit_decomposition", "local_training",
                "fusion"):
        assert key in t and t[key] >= 0.0
    assert t["fit_decomposition"] >= t["fit_rd"] + t["fit_pca"] - 1e-9


def test_train_dc_accepts_matrix_predictions():
    ds = blob_dataset(n=50, n_features=6, seed=8)
    model = train_dc(ds, [("rd", 2, 3)], seed=0)
    from_ds = predict_dc(model, ds)[1]
    from_mat = predict_dc(model, ds.X)[1]
    assert np.array_equal(from_ds, from_mat)


def test_train_dc_rejects_bad_input():
    with pytest.raises(DataError):
        train_dc(np.ones((3, 4)), [("rd", 1, 3)], seed=0)
