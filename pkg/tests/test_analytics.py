import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.stats import chi2_contingency

from heritage_assess.feature_analytics import (
    ASSOCIATION_COLUMNS,
    AnalyticsError,
    ContingencyTable,
    association_rows,
    association_table,
    box_stats,
    categorical_variables,
    chi_square,
    cramers_v,
    era_confusion,
    scale_distributions,
    write_csv,
    write_json,
    year_errors,
)
from heritage_assess.geo_ingest import DEFAULT_ERA_SCHEME, EraScheme, HeritageTarget, assign_era
from heritage_assess.llm import FacadeFeatures, parse_response
from heritage_assess.llm.schema import SCALE_FIELDS


def brute_chi_square(counts):
    """Row-by-row expected counts, skipping empty margins."""
    counts = [list(map(float, r)) for r in counts]
    rows = [r for r in counts if sum(r) > 0]
    cols = [j for j in range(len(counts[0])) if sum(r[j] for r in rows) > 0]
    n = sum(sum(r) for r in rows)
    x2 = 0.0
    for r in rows:
        for j in cols:
            e = sum(r) * sum(q[j] for q in rows) / n
            x2 += (r[j] - e) ** 2 / e
    return x2, len(rows), len(cols), n


def T(counts):
    return ContingencyTable.from_counts(counts)


def test_perfect_association():
    t = T([[10, 0], [0, 10]])
    assert chi_square(t) == 20.0
    assert cramers_v(t) == 1.0


@pytest.mark.parametrize("counts", [[[4, 6, 10], [8, 12, 20]], [[3, 3], [3, 3]], [[5, 1, 2], [5, 1, 2], [10, 2, 4]]])
def test_independent_tables(counts):
    assert chi_square(T(counts)) == pytest.approx(0.0, abs=1e-12)
    assert cramers_v(T(counts)) == pytest.approx(0.0, abs=1e-7)


def test_three_by_three_against_oracles():
    counts = [[8, 2, 0], [2, 8, 2], [0, 2, 8]]
    want = chi2_contingency(np.array(counts), correction=False)[0]
    x2, *_ = brute_chi_square(counts)
    assert chi_square(T(counts)) == pytest.approx(want, rel=1e-12)
    assert x2 == pytest.approx(want, rel=1e-12)
    assert cramers_v(T(counts)) == pytest.approx(math.sqrt(want / 32 / 2), rel=1e-9)


def test_zero_margins_are_pruned():
    t = ContingencyTable(("a", "b", "c"), ("x", "y"), np.array([[5, 1], [0, 0], [1, 5]]))
    pruned, rows, cols = t.pruned()
    assert rows == ["b"] and cols == [] and pruned.shape == (2, 2)
    assert chi_square(t) == chi_square(T([[5, 1], [1, 5]]))


def test_invalid_tables():
    with pytest.raises(AnalyticsError):
        T([[1, -1], [2, 2]])
    with pytest.raises(AnalyticsError):
        T([[1.5, 1], [2, 2]])
    with pytest.raises(AnalyticsError):
        cramers_v(T([[3, 4]]))
    with pytest.raises(AnalyticsError):
        chi_square(T([[0, 0], [0, 0]]))


tables = arrays(np.int64, st.tuples(st.integers(2, 5), st.integers(2, 4)), elements=st.integers(0, 30))


@given(tables)
def test_cramers_v_matches_oracle(counts):
    x2, r, k, n = brute_chi_square(counts)
    if min(r, k) < 2:
        return
    v = cramers_v(T(counts))
    assert 0.0 <= v <= 1.0
    assert v == pytest.approx(min(1.0, math.sqrt(x2 / n / (min(r, k) - 1))), rel=1e-9, abs=1e-12)


@given(tables, st.randoms(use_true_random=False))
def test_cramers_v_permutation_invariant(counts, rnd):
    if min(brute_chi_square(counts)[1:3]) < 2:
        return
    rows, cols = list(range(counts.shape[0])), list(range(counts.shape[1]))
    rnd.shuffle(rows)
    rnd.shuffle(cols)
    assert cramers_v(T(counts[np.ix_(rows, cols)])) == pytest.approx(cramers_v(T(counts)), rel=1e-12, abs=1e-15)


@given(st.integers(2, 6), st.integers(1, 20))
def test_permutation_matrix_gives_one(k, scale):
    perm = np.random.default_rng(k).permutation(k)
    assert cramers_v(T(np.eye(k, dtype=int)[perm] * scale)) == pytest.approx(1.0, abs=1e-12)


def test_from_pairs():
    t = ContingencyTable.from_pairs([("a", "x"), ("a", "x"), ("b", "y")], rows=["a", "b", "c"], cols=["x", "y"])
    assert t.counts.tolist() == [[2, 0], [0, 1], [0, 0]] and t.n == 3


# --- construction years ------------------------------------------------------------


def test_year_error_sign_and_means():
    stats = year_errors({"a": 1950, "b": 1900}, {"a": 1900, "b": 1900})
    assert stats.errors == {"a": 50, "b": 0}
    scheme = EraScheme.from_breakpoints([1880, 1920])
    stats = year_errors({"a": 1910, "b": 1890, "c": 1930}, {"a": 1900, "b": 1900, "c": 1900}, scheme)
    era = stats.per_era["1880-1919"]
    assert era.mean_error == 10.0
    assert era.mean_abs_error == pytest.approx(16.667, abs=1e-3)
    assert era.count == 3 and list(stats.per_era) == ["1880-1919"]


def test_year_errors_need_overlap():
    with pytest.raises(AnalyticsError):
        year_errors({"a": 1900}, {"b": 1900})


def test_era_confusion_exact():
    years = {"a": 1650, "b": 1900, "c": 1950, "d": 2010}
    conf = era_confusion(years, years)
    assert np.array_equal(conf.matrix, np.diag(np.diag(conf.matrix)))
    for lab in {assign_era(y) for y in years.values()}:
        assert conf.precision[lab] == conf.recall[lab] == 1.0
    untouched = set(DEFAULT_ERA_SCHEME.labels) - {assign_era(y) for y in years.values()}
    assert all(conf.precision[lab] is None for lab in untouched)


def test_era_confusion_single_era():
    conf = era_confusion({"a": 1900}, {"a": 1901}, EraScheme((), ("all",)))
    assert conf.matrix.tolist() == [[1]]


def test_era_confusion_brute_force():
    rng = np.random.default_rng(7)
    truth = {f"b{i}": int(y) for i, y in enumerate(rng.integers(1650, 2020, 10))}
    pred = {k: int(np.clip(v + rng.integers(-60, 60), 1000, 2100)) for k, v in truth.items()}
    conf = era_confusion(pred, truth)
    labels = DEFAULT_ERA_SCHEME.labels
    for i, a in enumerate(labels):
        for j, p in enumerate(labels):
            want = sum(1 for k in truth if assign_era(truth[k]) == a and assign_era(pred[k]) == p)
            assert conf.matrix[i, j] == want
    assert conf.n == 10
    for j, p in enumerate(labels):
        col = sum(1 for k in truth if assign_era(pred[k]) == p)
        hit = sum(1 for k in truth if assign_era(pred[k]) == p == assign_era(truth[k]))
        assert conf.precision[p] == (hit / col if col else None)


# --- distributions ----------------------------------------------------------------


def test_box_stats_examples():
    assert box_stats([50] * 7)[:3] == (50.0, 50.0, 50.0)
    assert box_stats([50] * 7)[5] == ()
    q25, q50, q75, *_ = box_stats(range(1, 101))
    assert (q25, q50, q75) == (25.75, 50.5, 75.25)
    *_, lo, hi, out = box_stats([10] * 20 + [100])
    assert out == (100.0,) and lo == hi == 10.0


@given(st.lists(st.integers(1, 100), min_size=1, max_size=60))
def test_box_stats_partition(values):
    q25, q50, q75, lo, hi, out = box_stats(values)
    assert q25 <= q50 <= q75 and lo <= hi
    inside = [v for v in values if lo <= v <= hi]
    assert len(inside) + len(out) == len(values)


@pytest.fixture
def corpus(valid_response):
    def make(bid, **kw):
        out = parse_response(json.dumps(dict(valid_response, **kw)))
        assert out.ok, out.report.fields
        return FacadeFeatures(out.features.values, building_id=bid)

    feats = [
        make("h1", aesthetic=90, style="jugend", roof_shape="mansard", elements=["cornice"]),
        make("h2", aesthetic=80, style="jugend", roof_shape="N/A", elements=["cornice", "balconies"]),
        make("m1", aesthetic=50, style="funktionalism", roof_shape="flat", elements=[]),
        make("l1", aesthetic=20, style="funktionalism", roof_shape="flat", elements=[]),
        make("x1", aesthetic=5, style="gotik"),
    ]
    labels = {"h1": HeritageTarget.HIGH, "h2": HeritageTarget.HIGH, "m1": HeritageTarget.MEDIUM, "l1": HeritageTarget.LOW}
    return feats, labels


def test_scale_distributions(corpus):
    feats, labels = corpus
    dists = scale_distributions(feats, labels)
    assert {d.feature for d in dists} == set(SCALE_FIELDS)
    aest = {d.category: d for d in dists if d.feature == "aesthetic"}
    assert set(aest) == {"high", "medium", "low"}
    assert aest["high"].n == 2 and aest["high"].q50 == 85.0
    with pytest.raises(AnalyticsError):
        scale_distributions(feats, {})


def test_association_table(corpus, tmp_path):
    feats, labels = corpus
    assoc = {a.feature: a for a in association_table(feats, labels)}
    assert set(assoc) == set(categorical_variables())
    style = assoc["style"]
    # jugend only among high, funktionalism among medium and low; unlabelled x1 ignored
    assert style.n == 4 and style.cramers_v == pytest.approx(1.0)
    assert "gotik" in style.dropped_levels
    roof = assoc["roof_shape"]
    assert roof.excluded_na == 1 and roof.n == 3
    assert assoc["elements:cornice"].cramers_v == pytest.approx(1.0)
    # every building shares the same technique: degenerate
    assert assoc["construction_technique"].cramers_v is None
    write_csv(association_rows(list(assoc.values())), tmp_path / "a.csv", ASSOCIATION_COLUMNS)
    with open(tmp_path / "a.csv", newline="") as fh:
        assert len(list(csv.DictReader(fh))) == len(assoc)
    write_json({"v": np.float64(0.5), "t": (1, 2)}, tmp_path / "x.json")
    assert json.loads((tmp_path / "x.json").read_text()) == {"t": [1, 2], "v": 0.5}
