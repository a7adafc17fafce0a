"""Test-split scoring, the two baselines and the scenario comparison table."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .classifier.data import SplitSpec, class_weights, stratified_indices
from .classifier.encoding import F, F_REGISTER, REGISTER, FeatureMatrix
from .classifier.model import FAMILIES, XGB, TrainedModel
from .classifier.search import DEFAULT_GRIDS, SearchEntry, grid_search
from .geo_ingest import TARGET_CLASSES
from .metrics import confusion_matrix, summarize

logger = logging.getLogger(__name__)

STRATIFIED = "stratified"
REGISTER_BASELINE = f"{REGISTER}-{XGB}"

INCLUSION_RULE = "macro F1 averages every class present in the test truth or the predictions"


class EvaluationError(ValueError):
    pass


@dataclass
class EvaluationReport:
    scenario: str
    macro_f1: float
    per_class: dict[str, dict[str, Any]]
    confusion: np.ndarray
    seed: int
    excluded_classes: list[str] = field(default_factory=list)
    importances: list[dict[str, Any]] = field(default_factory=list)
    hyperparams: dict[str, Any] = field(default_factory=dict)
    note: str = INCLUSION_RULE

    @property
    def n(self) -> int:
        return int(self.confusion.sum())

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "macro_f1": self.macro_f1,
            "per_class": self.per_class,
            "confusion": {"labels": [c.value for c in TARGET_CLASSES], "matrix": self.confusion.tolist()},
            "excluded_classes": self.excluded_classes,
            "importances": self.importances,
            "hyperparams": self.hyperparams,
            "seed": self.seed,
            "n_test": self.n,
            "note": self.note,
        }


def scenario_name(feature_set: str, family: str) -> str:
    return f"{feature_set}-{family}"


def known_scenarios(families: Sequence[str] = FAMILIES) -> list[str]:
    return [scenario_name(fs, fam) for fs in (F, F_REGISTER) for fam in families] + [STRATIFIED, REGISTER_BASELINE]


def score_predictions(y_true, y_pred, scenario: str, seed: int = 0) -> EvaluationReport:
    y_true = np.asarray(y_true, dtype=np.int64)
    if y_true.size == 0:
        raise EvaluationError("test split is empty")
    m = confusion_matrix(y_true, y_pred, len(TARGET_CLASSES))
    s = summarize(m)
    per_class = {
        TARGET_CLASSES[c].value: {
            "precision": cm.precision,
            "recall": cm.recall,
            "f1": cm.f1,
            "support": cm.support,
            "flags": cm.flags,
        }
        for c, cm in s.per_class.items()
    }
    excluded = [TARGET_CLASSES[c].value for c in s.excluded]
    return EvaluationReport(scenario, s.macro_f1, per_class, m, seed, excluded)


def top_importances(model: TrainedModel, k: int = 10) -> list[dict[str, Any]]:
    """The ``k`` largest importances; register-derived columns are starred."""
    imp = model.importances()
    if imp is None:
        return []
    order = sorted(range(imp.size), key=lambda i: (-imp[i], i))[:k]
    out = []
    for i in order:
        col = model.columns[i]
        out.append({
            "feature": col.name,
            "label": col.name + ("*" if col.from_register else ""),
            "importance": float(imp[i]),
            "from_register": col.from_register,
        })  # fmt: skip
    return out


def score(model: TrainedModel, test: FeatureMatrix, scenario: str | None = None, top_k: int = 10) -> EvaluationReport:
    """Evaluate on the test split; columns are matched to the model by name."""
    name = scenario or scenario_name(model.feature_set, model.family)
    rep = score_predictions(test.y, model.predict(test), name, model.seed)
    rep.importances = top_importances(model, top_k)
    rep.hyperparams = dict(model.hyperparams)
    return rep


def baseline_stratified(train_y, test_size: int, seed: int = 0) -> np.ndarray:
    """Independent draws from the training class frequencies."""
    train_y = np.asarray(train_y, dtype=np.int64)
    if train_y.size == 0:
        raise EvaluationError("stratified baseline needs training targets")
    freq = np.bincount(train_y, minlength=len(TARGET_CLASSES)) / train_y.size
    rng = np.random.default_rng(seed)
    return rng.choice(len(TARGET_CLASSES), size=int(test_size), p=freq)


def baseline_register(
    train: FeatureMatrix,
    validation: FeatureMatrix,
    test: FeatureMatrix,
    seed: int = 0,
    grid: Mapping[str, Sequence] | None = None,
) -> tuple[EvaluationReport, TrainedModel, list[SearchEntry]]:
    """Boosting grid search on register columns alone, scored on the test split."""
    reg = [c.name for c in train.columns if c.from_register]
    if not reg or len(reg) != len(train.columns):
        raise EvaluationError(f"register baseline needs a pure {REGISTER} matrix")
    model, log = grid_search(XGB, grid or DEFAULT_GRIDS[XGB], train, validation, class_weights(train.y), seed)
    return score(model, test, REGISTER_BASELINE), model, log


@dataclass
class ScenarioRun:
    reports: list[EvaluationReport]
    models: dict[str, TrainedModel]
    logs: dict[str, list[SearchEntry]]
    split: dict[str, list[str]]
    seed: int

    def report(self, scenario: str) -> EvaluationReport:
        for r in self.reports:
            if r.scenario == scenario:
                return r
        raise KeyError(scenario)

    def table(self) -> list[dict[str, Any]]:
        return [{"scenario": r.scenario, "macro_f1": r.macro_f1, "n_test": r.n} for r in self.reports]


def _common(matrices: Mapping[str, FeatureMatrix]) -> dict[str, FeatureMatrix]:
    ids = None
    for m in matrices.values():
        ids = set(m.building_ids) if ids is None else ids & set(m.building_ids)
    ids = sorted(ids or ())
    if not ids:
        raise EvaluationError("feature sets share no buildings")
    out, target = {}, None
    for fs, m in matrices.items():
        pos = {b: i for i, b in enumerate(m.building_ids)}
        sub = m.subset([pos[b] for b in ids])
        if target is not None and not np.array_equal(sub.y, target):
            raise EvaluationError("feature sets disagree on the target of a building")
        target = sub.y
        out[fs] = sub
    dropped = {fs: m.n_rows - len(ids) for fs, m in matrices.items() if m.n_rows != len(ids)}
    if dropped:
        logger.warning("restricted scenarios to %d shared buildings (dropped %s)", len(ids), dropped)
    return out


def run_scenarios(
    matrices: Mapping[str, FeatureMatrix],
    families: Sequence[str] = FAMILIES,
    grids: Mapping[str, Mapping[str, Sequence]] | None = None,
    split: SplitSpec = SplitSpec(),
    scenarios: Sequence[str] | None = None,
    top_k: int = 10,
) -> ScenarioRun:
    """Grid-search and score each (feature set, family) pair plus both baselines.

    All feature sets are restricted to their shared buildings and use one
    stratified partition, so every row of the table sees the same test rows.
    ``scenarios`` optionally limits which named rows are produced.
    """
    grids = {**DEFAULT_GRIDS, **(grids or {})}
    mats = _common(matrices)
    any_m = next(iter(mats.values()))
    tr_i, va_i, te_i = stratified_indices(any_m.y, split)
    ids = any_m.building_ids
    split_ids = {k: [ids[i] for i in v] for k, v in (("train", tr_i), ("validation", va_i), ("test", te_i))}
    seed = split.seed

    wanted = []
    for fs in (F, F_REGISTER):
        if fs in mats:
            wanted += [(scenario_name(fs, fam), fs, fam) for fam in families]
    if scenarios is not None:
        unknown = [s for s in scenarios if s not in known_scenarios(families)]
        if unknown:
            raise EvaluationError(f"unknown scenario id(s): {unknown}")
        wanted = [w for w in wanted if w[0] in scenarios]

    reports, models, logs = [], {}, {}
    for name, fs, fam in wanted:
        m = mats[fs]
        tr, va, te = m.subset(tr_i), m.subset(va_i), m.subset(te_i)
        model, log = grid_search(fam, grids[fam], tr, va, class_weights(tr.y), seed)
        reports.append(score(model, te, name, top_k))
        models[name], logs[name] = model, log
        logger.info("%s macro F1 %.4f", name, reports[-1].macro_f1)

    if scenarios is None or STRATIFIED in scenarios:
        pred = baseline_stratified(any_m.y[tr_i], te_i.size, seed)
        reports.append(score_predictions(any_m.y[te_i], pred, STRATIFIED, seed))
    if REGISTER in mats and (scenarios is None or REGISTER_BASELINE in scenarios):
        m = mats[REGISTER]
        rep, model, log = baseline_register(m.subset(tr_i), m.subset(va_i), m.subset(te_i), seed, grids[XGB])
        reports.append(rep)
        models[REGISTER_BASELINE], logs[REGISTER_BASELINE] = model, log
    return ScenarioRun(reports, models, logs, split_ids, seed)


# --- writers -----------------------------------------------------------------


def write_scenario_table(run: ScenarioRun, csv_path: str | Path, json_path: str | Path | None = None) -> None:
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scenario", "macro_f1", "n_test"])
        for row in run.table():
            w.writerow([row["scenario"], repr(row["macro_f1"]), row["n_test"]])
    if json_path is not None:
        doc = {"seed": run.seed, "note": INCLUSION_RULE, "scenarios": [r.to_json() for r in run.reports]}
        Path(json_path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_confusions(run: ScenarioRun, path: str | Path) -> None:
    doc = {
        r.scenario: {
            "labels": [c.value for c in TARGET_CLASSES],
            "matrix": r.confusion.tolist(),
            "per_class": r.per_class,
        }
        for r in run.reports
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_importances(run: ScenarioRun, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scenario", "rank", "feature", "importance", "from_register"])
        for r in run.reports:
            for rank, imp in enumerate(r.importances, 1):
                w.writerow([r.scenario, rank, imp["label"], repr(imp["importance"]), imp["from_register"]])


def format_table(run: ScenarioRun) -> str:
    rows = run.table()
    width = max(len("scenario"), *(len(r["scenario"]) for r in rows))
    lines = [f"{'scenario':<{width}}  macro_f1"]
    lines += [f"{r['scenario']:<{width}}  {r['macro_f1']:.4f}" for r in rows]
    return "\n".join(lines)
