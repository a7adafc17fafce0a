import csv
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heritage_assess.classifier import F, REGISTER, RF, XGB, FeatureMatrix, SplitSpec
from heritage_assess.classifier.encoding import INDICATOR, NUMERIC, Column
from heritage_assess.evaluation import (
    REGISTER_BASELINE,
    STRATIFIED,
    EvaluationError,
    baseline_register,
    baseline_stratified,
    format_table,
    known_scenarios,
    run_scenarios,
    score,
    score_predictions,
    write_confusions,
    write_importances,
    write_scenario_table,
)
from heritage_assess.metrics import confusion_matrix, macro_f1, summarize
from heritage_assess.synthetic import generate_world
from pipeline_support import world_matrices

SMALL_XGB = {"learning_rate": [0.2], "max_depth": [3], "n_estimators": [60], "subsample": [1.0], "early_stopping_rounds": [10]}


def brute_macro_f1(t, p, k=3):
    f1s = []
    for c in range(k):
        tp = sum(1 for a, b in zip(t, p) if a == b == c)
        npred = sum(1 for b in p if b == c)
        ntrue = sum(1 for a in t if a == c)
        if npred == 0 and ntrue == 0:
            continue
        prec = tp / npred if npred else 0.0
        rec = tp / ntrue if ntrue else 0.0
        f1s.append(0.0 if prec + rec == 0 else 2 * prec * rec / (prec + rec))
    return sum(f1s) / len(f1s)


def test_perfect_predictions():
    y = [0, 1, 2, 2, 1]
    rep = score_predictions(y, y, "x")
    assert rep.macro_f1 == 1.0
    assert np.array_equal(rep.confusion, np.diag(np.diag(rep.confusion)))


def test_swapped_classes_give_one_third():
    m = np.array([[5, 0, 0], [0, 0, 5], [0, 5, 0]])
    assert summarize(m).macro_f1 == pytest.approx(1 / 3)


def test_constant_predictor_on_balanced_data():
    # the predicted class scores F1 = 2 * (1/3) / (1/3 + 1) = 1/2, the others 0
    y = np.repeat([0, 1, 2], 20)
    rep = score_predictions(y, np.zeros(60, dtype=int), "const")
    assert rep.macro_f1 == pytest.approx(1 / 6)
    assert rep.per_class["medium"]["flags"] == ["precision-undefined"]


def test_absent_class_excluded():
    rep = score_predictions([0, 0, 1], [0, 1, 1], "x")
    assert rep.excluded_classes == ["low"]
    assert rep.macro_f1 == pytest.approx(brute_macro_f1([0, 0, 1], [0, 1, 1]))


labels = st.lists(st.integers(0, 2), min_size=1, max_size=60)


@given(st.data())
def test_macro_f1_matches_brute_force(data):
    t = data.draw(labels)
    p = data.draw(st.lists(st.integers(0, 2), min_size=len(t), max_size=len(t)))
    assert macro_f1(t, p, 3) == pytest.approx(brute_macro_f1(t, p))
    rep = score_predictions(t, p, "x")
    assert rep.macro_f1 == summarize(rep.confusion).macro_f1


@given(st.data(), st.permutations([0, 1, 2]))
def test_relabelling_invariance(data, perm):
    t = data.draw(labels)
    p = data.draw(st.lists(st.integers(0, 2), min_size=len(t), max_size=len(t)))
    a = macro_f1(t, p, 3)
    b = macro_f1([perm[v] for v in t], [perm[v] for v in p], 3)
    assert a == pytest.approx(b, abs=1e-12)


def test_confusion_matrix_orientation():
    assert confusion_matrix([0, 0, 2], [1, 0, 2], 3).tolist() == [[1, 1, 0], [0, 0, 0], [0, 0, 1]]


def test_stratified_baseline():
    assert (baseline_stratified([2, 2, 2], 50, seed=1) == 2).all()
    train = np.repeat([0, 1, 2], [50, 30, 20])
    pred = baseline_stratified(train, 10_000, seed=3)
    freq = np.bincount(pred, minlength=3) / pred.size
    assert np.all(np.abs(freq - [0.5, 0.3, 0.2]) <= 0.02)
    assert np.array_equal(pred, baseline_stratified(train, 10_000, seed=3))


def test_stratified_baseline_converges_to_closed_form():
    # balanced truth and balanced draws: every class has precision = recall = 1/3
    rng = np.random.default_rng(0)
    truth = rng.integers(0, 3, 10_000)
    pred = baseline_stratified(np.repeat([0, 1, 2], 10), 10_000, seed=9)
    assert macro_f1(truth, pred, 3) == pytest.approx(1 / 3, abs=0.02)


def _register_matrix(n, seed, informative):
    rng = np.random.default_rng(seed)
    era = rng.integers(0, 3, n)
    y = era if informative else rng.integers(0, 3, n)
    cols = (Column("register:construction_year", NUMERIC, True),) + tuple(
        Column(f"register:construction_period=e{i}", INDICATOR, True) for i in range(3)
    )
    X = np.column_stack([1850 + 50 * era + rng.integers(0, 40, n), np.eye(3)[era]])
    return FeatureMatrix(X, y, cols, tuple(f"b{i:04d}" for i in range(n)), REGISTER)


def test_register_baseline_pure_function_of_era():
    m = _register_matrix(300, 0, informative=True)
    rep, model, log = baseline_register(m.subset(range(200)), m.subset(range(200, 250)), m.subset(range(250, 300)), grid=SMALL_XGB)
    assert rep.scenario == REGISTER_BASELINE and rep.macro_f1 == pytest.approx(1.0)
    assert all(i["label"].endswith("*") for i in rep.importances)


def test_register_baseline_independent_target_near_chance():
    m = _register_matrix(900, 1, informative=False)
    tr, va, te = m.subset(range(600)), m.subset(range(600, 750)), m.subset(range(750, 900))
    rep, *_ = baseline_register(tr, va, te, grid=SMALL_XGB)
    strat = score_predictions(te.y, baseline_stratified(tr.y, te.n_rows, 0), STRATIFIED)
    assert abs(rep.macro_f1 - strat.macro_f1) < 0.12


def test_register_baseline_requires_register_columns():
    m = _register_matrix(30, 0, True)
    mixed = FeatureMatrix(m.X, m.y, (Column("rarity", NUMERIC),) + m.columns[1:], m.building_ids)
    with pytest.raises(EvaluationError):
        baseline_register(mixed, mixed, mixed, grid=SMALL_XGB)


@pytest.fixture(scope="module")
def world_run():
    mats = world_matrices(generate_world(240, seed=2))
    grids = {XGB: SMALL_XGB, RF: {"n_estimators": [20], "max_depth": [None], "min_samples_split": [2]}}
    run = run_scenarios(mats, families=(RF, XGB), grids=grids, split=SplitSpec(seed=1))
    return mats, grids, run


def test_scenario_cardinality(world_run):
    _, _, run = world_run
    names = [r.scenario for r in run.reports]
    assert names == ["F-RF", "F-XGB", "F+cp+cy+t-RF", "F+cp+cy+t-XGB", STRATIFIED, REGISTER_BASELINE]
    assert set(names) <= set(known_scenarios((RF, XGB)))
    assert len({r.n for r in run.reports}) == 1
    assert set(run.split) == {"train", "validation", "test"}


def test_scenarios_reproducible(world_run):
    mats, grids, run = world_run
    again = run_scenarios(mats, families=(RF, XGB), grids=grids, split=SplitSpec(seed=1))
    assert [r.to_json() for r in again.reports] == [r.to_json() for r in run.reports]


def test_scenario_subset_and_unknown(world_run):
    mats, grids, _ = world_run
    run = run_scenarios(mats, families=(XGB,), grids=grids, scenarios=["F-XGB", STRATIFIED])
    assert [r.scenario for r in run.reports] == ["F-XGB", STRATIFIED]
    with pytest.raises(EvaluationError, match="F-SVM"):
        run_scenarios(mats, families=(XGB,), grids=grids, scenarios=["F-SVM"])


def test_noise_features_near_stratified():
    mats = world_matrices(generate_world(450, seed=5, signal=0.0))
    run = run_scenarios({F: mats[F]}, families=(XGB,), grids={XGB: SMALL_XGB}, split=SplitSpec(seed=2))
    assert abs(run.report("F-XGB").macro_f1 - run.report(STRATIFIED).macro_f1) < 0.15


def test_score_uses_name_alignment(world_run):
    mats, _, run = world_run
    model = run.models["F-XGB"]
    test_ids = set(run.split["test"])
    m = mats[F]
    te = m.subset([i for i, b in enumerate(m.building_ids) if b in test_ids])
    assert score(model, te).macro_f1 == run.report("F-XGB").macro_f1


def test_writers(world_run, tmp_path):
    _, _, run = world_run
    write_scenario_table(run, tmp_path / "s.csv", tmp_path / "s.json")
    write_confusions(run, tmp_path / "c.json")
    write_importances(run, tmp_path / "i.csv")
    with open(tmp_path / "s.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["scenario"] for r in rows] == [r.scenario for r in run.reports]
    doc = json.loads((tmp_path / "s.json").read_text())
    assert doc["scenarios"][0]["confusion"]["labels"] == ["high", "medium", "low"]
    assert set(json.loads((tmp_path / "c.json").read_text())) == {r.scenario for r in run.reports}
    with open(tmp_path / "i.csv", newline="") as fh:
        imp = list(csv.DictReader(fh))
    assert any(r["feature"].endswith("*") for r in imp if r["scenario"].startswith("F+cp+cy+t"))
    assert "stratified" in format_table(run)
