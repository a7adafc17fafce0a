import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heritage_assess.classifier import (
    F_REGISTER,
    FAMILIES,
    KNN,
    LR,
    REGISTER,
    RF,
    DEFAULT_GRIDS,
    XGB,
    EncodingError,
    FeatureMatrix,
    RegisterInfo,
    SplitError,
    SplitSpec,
    TrainedModel,
    allocate,
    class_weights,
    encode,
    fit,
    grid_points,
    grid_search,
    stratified_split,
    train_forest,
    train_gbt,
    train_knn,
    train_logistic,
)
from heritage_assess.classifier.encoding import Column, NUMERIC
from heritage_assess.classifier.gbt import mlogloss
from heritage_assess.classifier.logistic import logistic_loss_and_grad
from heritage_assess.classifier.search import SearchError
from heritage_assess.geo_ingest import BuildingType, HeritageTarget
from heritage_assess.llm import FacadeFeatures, parse_response
from heritage_assess.llm.backends import random_features
from heritage_assess.llm.schema import ELEMENTS, FEATURE_SCHEMA, STYLES


def _features(bid, obj):
    out = parse_response(json.dumps(obj))
    assert out.ok, out.report.fields
    return FacadeFeatures(out.features.values, building_id=bid)


def _matrix(X, y, prefix="f"):
    X = np.asarray(X, dtype=float)
    cols = tuple(Column(f"{prefix}{j}", NUMERIC) for j in range(X.shape[1]))
    return FeatureMatrix(X, np.asarray(y), cols, tuple(f"b{i:04d}" for i in range(X.shape[0])))


def _blobs(n, seed, spread=0.6, d=2):
    rng = np.random.default_rng(seed)
    centres = np.array([[0, 0], [4, 0], [2, 4]], dtype=float)
    y = rng.integers(0, 3, n)
    X = centres[y] + rng.normal(0, spread, (n, 2))
    if d > 2:
        X = np.hstack([X, rng.normal(size=(n, d - 2))])
    return X, y


# --- encoding -----------------------------------------------------------------


def test_encode_flags_and_indicators(valid_response):
    valid_response["elements"] = ["balconies", "cornice"]
    feats = [_features("a", valid_response)]
    m = encode(feats, {"a": HeritageTarget.HIGH})
    assert not any(c.from_register for c in m.columns)
    row = dict(zip(m.names, m.X[0]))
    on = [e for e in ELEMENTS if row[f"elements={e}"] == 1.0]
    assert on == ["balconies", "cornice"]
    assert sum(1 for n in m.names if n.startswith("elements=")) == len(ELEMENTS) == 26


def test_style_is_one_hot_over_19_levels():
    rng = np.random.default_rng(0)
    feats = [_features(f"b{i}", random_features(rng)) for i in range(40)]
    m = encode(feats, {f.building_id: HeritageTarget.LOW for f in feats})
    idx = [i for i, n in enumerate(m.names) if n.startswith("style=")]
    assert len(idx) == len(STYLES) == 19
    assert (m.X[:, idx].sum(axis=1) == 1).all()


def test_every_schema_field_is_consumed(valid_response):
    m = encode([_features("a", valid_response)], {"a": HeritageTarget.HIGH})
    used = {n.split("=", 1)[0] for n in m.names}
    assert used == {s.name for s in FEATURE_SCHEMA}


def test_feature_sets(valid_response):
    feats = [_features("a", valid_response), _features("b", dict(valid_response, rarity=5))]
    labels = {"a": HeritageTarget.HIGH, "b": HeritageTarget.LOW, "c": HeritageTarget.MEDIUM}
    reg = {
        "a": RegisterInfo(1908, None, BuildingType.MULTI_FAMILY),
        "b": RegisterInfo(None, None, BuildingType.NON_RESIDENTIAL),
        "c": RegisterInfo(1960, None, BuildingType.NON_RESIDENTIAL),
    }
    both = encode(feats, labels, reg, F_REGISTER)
    assert both.building_ids == ("a",)  # b lacks a register year, c lacks features
    assert any(c.from_register for c in both.columns)
    only = encode(None, labels, reg, REGISTER)
    assert only.building_ids == ("a", "c")
    assert all(c.from_register for c in only.columns)
    row = dict(zip(only.names, only.X[1]))
    assert row["register:construction_year"] == 1960.0
    assert row["register:construction_period=1945-1974"] == 1.0
    with pytest.raises(EncodingError):
        encode(feats, labels, None, F_REGISTER)
    with pytest.raises(EncodingError):
        encode(feats, labels, feature_set="F+x")


def test_hatched_and_unlabelled_rows_dropped(valid_response):
    feats = [_features("a", valid_response), _features("b", valid_response)]
    m = encode(feats, {"a": HeritageTarget.MEDIUM, "b": None})
    assert m.building_ids == ("a",) and m.y.tolist() == [1]


# --- split and weights ----------------------------------------------------------


def test_split_example():
    y = np.repeat([0, 1, 2], [60, 30, 10])
    tr, va, te = stratified_split(_matrix(np.zeros((100, 1)), y), SplitSpec(seed=4))
    assert np.bincount(tr.y).tolist() == [48, 24, 8]
    assert np.bincount(va.y).tolist() == [6, 3, 1]
    assert np.bincount(te.y).tolist() == [6, 3, 1]


def test_split_deterministic_and_seed_sensitive():
    y = np.random.default_rng(0).integers(0, 3, 200)
    m = _matrix(np.arange(200)[:, None], y)
    a = stratified_split(m, SplitSpec(seed=1))
    b = stratified_split(m, SplitSpec(seed=1))
    c = stratified_split(m, SplitSpec(seed=2))
    assert all(p.building_ids == q.building_ids for p, q in zip(a, b))
    assert a[0].building_ids != c[0].building_ids


def test_split_small_class_rejected():
    with pytest.raises(SplitError, match="class 2"):
        stratified_split(_matrix(np.zeros((12, 1)), [0] * 5 + [1] * 5 + [2] * 2))


def test_split_spec_validation():
    with pytest.raises(SplitError):
        SplitSpec((0.5, 0.5, 0.5))


@given(st.integers(0, 500), st.sampled_from([(0.8, 0.1, 0.1), (0.6, 0.2, 0.2), (0.7, 0.15, 0.15)]))
def test_allocate_within_one(n, fr):
    counts = allocate(n, fr)
    assert sum(counts) == n
    assert all(abs(c - n * f) < 1 for c, f in zip(counts, fr))


def test_allocate_leftover_goes_to_empty_later_partition():
    # exact shares 2.4 / 0.3 / 0.3: the single leftover lands in the test share
    assert allocate(3, (0.8, 0.1, 0.1)) == [2, 0, 1]
    assert allocate(10, (0.8, 0.1, 0.1)) == [8, 1, 1]


def test_class_weights():
    assert class_weights(np.repeat([0, 1, 2], 7)).tolist() == [1.0] * 21
    w = class_weights(np.repeat([0, 1], [90, 10]))
    assert w[0] == pytest.approx(0.5556, abs=1e-4) and w[-1] == 5.0
    assert class_weights(np.zeros(4, dtype=int)).tolist() == [1.0] * 4


# --- logistic ---------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(5))
def test_logistic_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    n, d, k = 30, 8, 3
    X = rng.normal(size=(n, d))
    Y = np.eye(k)[rng.integers(0, k, n)]
    w = rng.uniform(0.5, 2.0, n)
    theta = rng.normal(size=k * (d + 1))
    _, g = logistic_loss_and_grad(theta, X, Y, w, 0.7)
    eps = 1e-6
    fd = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = eps
        fd[i] = (logistic_loss_and_grad(theta + e, X, Y, w, 0.7)[0] - logistic_loss_and_grad(theta - e, X, Y, w, 0.7)[0]) / (2 * eps)
    assert np.linalg.norm(g - fd) / np.linalg.norm(fd) <= 1e-5


def test_logistic_separable_and_converged():
    X, y = _blobs(300, 1, spread=0.4)
    m = train_logistic(X, y, np.ones(len(y)), 3, C=10.0)
    assert m.converged
    assert (m.predict(X) == y).mean() >= 0.98
    # stationarity of the fitted optimum
    theta = np.hstack([m.coef, m.intercept[:, None]]).ravel()
    _, g = logistic_loss_and_grad(theta, X, np.eye(3)[y], np.ones(len(y)), 10.0)
    assert np.abs(g).max() < 1e-5


def test_logistic_single_class():
    X = np.random.default_rng(0).normal(size=(20, 3))
    m = train_logistic(X, np.full(20, 2), np.ones(20), 3)
    assert (m.predict(X) == 2).all()


def test_logistic_weight_equals_duplication():
    X, y = _blobs(40, 2, spread=1.5, d=4)
    w = np.ones(40)
    w[7] = 2.0
    a = train_logistic(X, y, w, 3, C=1.0)
    Xd, yd = np.vstack([X, X[7:8]]), np.r_[y, y[7]]
    b = train_logistic(Xd, yd, np.ones(41), 3, C=1.0)
    np.testing.assert_allclose(a.coef, b.coef, atol=1e-8, rtol=0)
    np.testing.assert_allclose(a.intercept, b.intercept, atol=1e-8, rtol=0)


# --- kNN --------------------------------------------------------------------------

PLANE = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [1.6, 1.6], [3.0, 3.0]])
PLANE_Y = np.array([0, 1, 1, 2, 2])


def _brute_knn(q, k, p, weighted):
    d = [sum(abs(a - b) ** p for a, b in zip(q, x)) ** (1 / p) for x in PLANE]
    order = sorted(range(len(PLANE)), key=lambda i: (d[i], i))[:k]
    if weighted and any(d[i] == 0 for i in order):
        return int(PLANE_Y[next(i for i in order if d[i] == 0)])
    votes = [0.0, 0.0, 0.0]
    for i in order:
        votes[PLANE_Y[i]] += 1.0 / d[i] if weighted else 1.0
    return max(range(3), key=lambda c: (votes[c], -c))


@pytest.mark.parametrize("p", [1, 2])
@pytest.mark.parametrize("weights", ["uniform", "distance"])
def test_knn_against_distance_table(p, weights):
    m = train_knn(PLANE, PLANE_Y, 3, n_neighbors=3, weights=weights, p=p)
    grid = [(x, y) for x in np.linspace(-1, 4, 11) for y in np.linspace(-1, 4, 11)]
    got = m.predict(np.array(grid)).tolist()
    assert got == [_brute_knn(q, 3, p, weights == "distance") for q in grid]


def test_knn_p_changes_answer():
    # from (2.0, 0.9): Manhattan 0.9 vs 1.1 favours (2, 0); Euclidean 0.9 vs 0.81 favours (1.6, 1.6)
    q = np.array([[2.0, 0.9]])
    assert train_knn(PLANE, PLANE_Y, 3, n_neighbors=1, p=1).predict(q).tolist() == [1]
    assert train_knn(PLANE, PLANE_Y, 3, n_neighbors=1, p=2).predict(q).tolist() == [2]


def test_knn_exact_match_and_errors():
    m = train_knn(PLANE, PLANE_Y, 3, n_neighbors=5, weights="distance")
    assert m.predict(PLANE).tolist() == PLANE_Y.tolist()
    assert train_knn(PLANE, PLANE_Y, 3, n_neighbors=1).predict(PLANE + 0.01).tolist() == PLANE_Y.tolist()
    with pytest.raises(ValueError):
        train_knn(PLANE, PLANE_Y, 3, n_neighbors=6)


# --- forest -----------------------------------------------------------------------


def _xor(n=400, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (n, 2))
    return X, ((X[:, 0] > 0) ^ (X[:, 1] > 0)).astype(int)


def test_forest_learns_xor():
    X, y = _xor()
    f = train_forest(X, y, np.ones(len(y)), 3, n_estimators=30, seed=0)
    assert (f.predict(X) == y).mean() >= 0.95


def test_forest_deterministic():
    X, y = _xor(seed=1)
    a = train_forest(X, y, class_weights(y), 3, n_estimators=10, seed=5)
    b = train_forest(X, y, class_weights(y), 3, n_estimators=10, seed=5)
    c = train_forest(X, y, class_weights(y), 3, n_estimators=10, seed=6)
    assert a.structure_key() == b.structure_key() != c.structure_key()


def test_forest_pure_class():
    X = np.random.default_rng(0).normal(size=(30, 4))
    f = train_forest(X, np.ones(30, dtype=int), np.ones(30), 3, n_estimators=5)
    assert all(t.n_nodes == 1 for t in f.trees)
    assert (f.predict(X) == 1).all()


def test_forest_importances_normalised():
    X, y = _xor()
    imp = train_forest(X, y, np.ones(len(y)), 3, n_estimators=10).importances()
    assert (imp >= 0).all() and imp.sum() == pytest.approx(1.0)


def test_tree_weight_equals_duplication():
    X, y = _blobs(60, 3, spread=1.5, d=3)
    X = np.round(X, 1)
    w = np.ones(60)
    w[[4, 9]] = 2.0
    kw = dict(n_estimators=1, max_features=None, bootstrap=False, seed=0)
    a = train_forest(X, y, w, 3, **kw)
    b = train_forest(np.vstack([X, X[[4, 9]]]), np.r_[y, y[[4, 9]]], np.ones(62), 3, **kw)
    assert a.structure_key() == b.structure_key()
    g = dict(n_estimators=15, max_depth=3, early_stopping_rounds=None)
    ga = train_gbt(X, y, w, X, y, 3, **g)
    gb = train_gbt(np.vstack([X, X[[4, 9]]]), np.r_[y, y[[4, 9]]], np.ones(62), X, y, 3, **g)
    # same splits everywhere; leaf values agree up to summation order
    for ta, tb in zip([t for r in ga.rounds for t in r], [t for r in gb.rounds for t in r]):
        for f in ("feature", "threshold", "left", "right"):
            assert np.array_equal(getattr(ta, f), getattr(tb, f))
        np.testing.assert_allclose(ta.value, tb.value, rtol=0, atol=1e-12)


# --- boosting ---------------------------------------------------------------------


def test_gbt_training_loss_non_increasing():
    X, y = _blobs(200, 4, spread=1.2, d=5)
    m = train_gbt(X, y, class_weights(y), X[:40], y[:40], 3, learning_rate=0.1, max_depth=3, n_estimators=60, early_stopping_rounds=None)
    loss = np.array(m.train_loss)
    assert len(loss) == 60
    assert (np.diff(loss) <= 1e-12).all()


def _drift():
    X, y = _blobs(200, 5, spread=1.0, d=4)
    rng = np.random.default_rng(6)
    Xv = rng.normal(2, 2, (80, 4))
    yv = rng.integers(0, 3, 80)
    return X, y, Xv, yv


def test_gbt_early_stopping_rolls_back():
    X, y, Xv, yv = _drift()
    m = train_gbt(X, y, np.ones(200), Xv, yv, 3, learning_rate=0.2, max_depth=4, n_estimators=1000)
    assert m.stopped_early
    assert len(m.valid_loss) < 1000
    assert m.best_round < len(m.valid_loss) - 1
    assert len(m.rounds) == m.best_round + 1
    assert m.valid_loss[m.best_round] == min(m.valid_loss)
    # the kept ensemble is exactly the prefix a fixed-length run would build
    ref = train_gbt(X, y, np.ones(200), Xv, yv, 3, learning_rate=0.2, max_depth=4, n_estimators=m.best_round + 1, early_stopping_rounds=None)
    np.testing.assert_array_equal(m.margin(Xv), ref.margin(Xv))
    assert mlogloss(m.margin(Xv), yv) == pytest.approx(m.valid_loss[m.best_round], rel=1e-12)


def test_gbt_only_informative_feature_has_importance():
    rng = np.random.default_rng(0)
    X = np.zeros((90, 3))
    X[:, 1] = rng.normal(size=90)
    y = np.digitize(X[:, 1], [-0.4, 0.4])
    m = train_gbt(X, y, np.ones(90), X, y, 3, n_estimators=20, max_depth=2, early_stopping_rounds=None)
    assert m.importances().tolist() == [0.0, 1.0, 0.0]


def test_gbt_subsample_is_seeded():
    X, y = _blobs(120, 7, d=3)
    kw = dict(n_estimators=10, max_depth=3, subsample=0.8, early_stopping_rounds=None)
    a = train_gbt(X, y, np.ones(120), X, y, 3, seed=1, **kw)
    b = train_gbt(X, y, np.ones(120), X, y, 3, seed=1, **kw)
    c = train_gbt(X, y, np.ones(120), X, y, 3, seed=2, **kw)
    assert np.array_equal(a.margin(X), b.margin(X)) and not np.array_equal(a.margin(X), c.margin(X))


def test_gbt_needs_validation():
    X, y = _blobs(30, 0)
    with pytest.raises(RuntimeError):
        train_gbt(X, y, np.ones(30), X[:0], y[:0], 3)


# --- model wrapper and search ----------------------------------------------------------

SMALL = {
    LR: {"C": 1.0},
    KNN: {"n_neighbors": 3, "weights": "distance", "p": 1},
    RF: {"n_estimators": 10, "max_depth": 5, "min_samples_split": 2},
    XGB: {"learning_rate": 0.2, "max_depth": 3, "n_estimators": 50, "subsample": 0.8, "early_stopping_rounds": 5},
}


@pytest.fixture(scope="module")
def split_blobs():
    X, y = _blobs(150, 11, spread=1.1, d=4)
    return stratified_split(_matrix(X, y), SplitSpec(seed=3))


@pytest.mark.parametrize("family", FAMILIES)
def test_model_json_round_trip(family, split_blobs, tmp_path):
    tr, va, te = split_blobs
    m = fit(family, SMALL[family], tr, class_weights(tr.y), va, seed=2)
    m.save(tmp_path / "m.json")
    back = TrainedModel.load(tmp_path / "m.json")
    assert np.array_equal(m.predict(te), back.predict(te))
    assert back.to_json() == m.to_json()
    again = fit(family, SMALL[family], tr, class_weights(tr.y), va, seed=2)
    assert np.array_equal(again.predict(te), m.predict(te))


@pytest.mark.parametrize("family", FAMILIES)
def test_column_order_does_not_matter(family, split_blobs):
    tr, va, te = split_blobs
    m = fit(family, SMALL[family], tr, class_weights(tr.y), va, seed=0)
    perm = [2, 0, 3, 1]
    shuffled = FeatureMatrix(te.X[:, perm], te.y, tuple(te.columns[i] for i in perm), te.building_ids)
    assert np.array_equal(m.predict(shuffled), m.predict(te))
    imp = m.importances()
    if family == KNN:
        assert imp is None
    else:
        assert (imp >= 0).all()
        if family != LR:
            assert imp.sum() == pytest.approx(1.0)


def test_default_boosting_grid_has_18_points(split_blobs):
    assert len(grid_points(DEFAULT_GRIDS[XGB])) == 18
    tr, va, _ = split_blobs
    grid = dict(DEFAULT_GRIDS[XGB], n_estimators=[30])
    _, log = grid_search(XGB, grid, tr, va, class_weights(tr.y))
    assert len(log) == 18 and all(e.score is not None for e in log)


def test_search_single_point(split_blobs):
    tr, va, _ = split_blobs
    m, log = grid_search(LR, {"C": [0.5]}, tr, va, class_weights(tr.y))
    assert m.hyperparams == {"C": 0.5} and len(log) == 1


def test_search_picks_dominant_point():
    X, y = _xor(120, seed=3)
    tr, va, _ = stratified_split(_matrix(X, y), SplitSpec(seed=0))
    # a 1-level vote over everything cannot separate XOR; one neighbour can
    m, log = grid_search(KNN, {"n_neighbors": [len(tr.y), 1]}, tr, va, class_weights(tr.y))
    assert m.hyperparams["n_neighbors"] == 1
    assert log[1].score > log[0].score


def test_search_skips_failures_and_reports_total_failure(split_blobs):
    tr, va, _ = split_blobs
    m, log = grid_search(KNN, {"n_neighbors": [10_000, 3]}, tr, va, class_weights(tr.y))
    assert log[0].score is None and log[0].error and m.hyperparams["n_neighbors"] == 3
    with pytest.raises(SearchError):
        grid_search(KNN, {"n_neighbors": [10_000]}, tr, va, class_weights(tr.y))


def test_search_tie_keeps_first(split_blobs):
    tr, va, _ = split_blobs
    # liblinear is accepted as an alias, so both points fit the same model
    m, log = grid_search(LR, {"C": [1.0], "solver": ["lbfgs", "liblinear"]}, tr, va, class_weights(tr.y))
    assert log[0].score == log[1].score and m.hyperparams["solver"] == "lbfgs"
