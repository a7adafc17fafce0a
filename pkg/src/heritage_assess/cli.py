"""``heritage-assess``: plan, extract, analyze, train-eval and report over one config file."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import feature_analytics as fa
from .camera_planner import CameraPoint, plan_all, read_cameras, write_cameras, write_rejections
from .classifier.data import SplitSpec
from .classifier.encoding import FEATURE_SETS, RegisterInfo, encode
from .classifier.search import write_search_log
from .config import ConfigError, PipelineConfig, load_config
from .evaluation import format_table, run_scenarios, write_confusions, write_importances, write_scenario_table
from .geo_ingest import BuildingRecord, GeoDataError, load_inventory, map_heritage, read_buildings, read_roads
from .llm.backends import BackendError
from .llm.extraction import (
    BuildingContext,
    ExtractionFailed,
    ExtractionRequest,
    consistency_run,
    extract,
    read_features,
    write_features,
)
from .llm.parsing import FacadeFeatures

logger = logging.getLogger("heritage_assess")

CAMERAS = "cameras.jsonl"
PLAN_REJECTIONS = "plan_rejections.jsonl"
FEATURES = "features.jsonl"
EXTRACT_LOG = "extract_log.jsonl"
CONSISTENCY = "consistency.jsonl"
ANALYTICS = "analytics"
TRAIN = "train_eval"


class PipelineError(RuntimeError):
    pass


def _jsonl(rows, path: Path) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for r in rows:
            fh.write(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n")


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _buildings(cfg: PipelineConfig) -> list[BuildingRecord]:
    records, rejections = read_buildings(cfg.paths.buildings)
    if rejections:
        logger.warning("%d building feature(s) rejected on load", len(rejections))
    return records


def _labels(cfg: PipelineConfig, buildings: Sequence[BuildingRecord]) -> dict:
    if cfg.paths.inventory is not None:
        raw = load_inventory(cfg.paths.inventory)
    else:
        raw = {b.id: b.heritage_raw for b in buildings if b.heritage_raw is not None}
    labels = {bid: map_heritage(r) for bid, r in raw.items()}
    labels = {bid: t for bid, t in labels.items() if t is not None}
    if not labels:
        raise PipelineError("no analyzable buildings: every inventory entry is unclassified or missing")
    return labels


def _one_per_building(features: Sequence[FacadeFeatures]) -> dict[str, FacadeFeatures]:
    """The record of each building's first camera in sorted order."""
    out: dict[str, FacadeFeatures] = {}
    for f in sorted(features, key=lambda f: (f.building_id, f.camera_id)):
        out.setdefault(f.building_id, f)
    return out


def _need(path: Path, what: str) -> Path:
    if not path.is_file():
        raise FileNotFoundError(f"{what} not found: {path} (run the earlier stage first)")
    return path


# --- subcommands --------------------------------------------------------------


def cmd_plan(cfg: PipelineConfig, args) -> int:
    for p in (cfg.paths.buildings, cfg.paths.roads):
        if not p.is_file():
            raise FileNotFoundError(f"no such file: {p}")
    buildings = _buildings(cfg)
    roads, road_rej = read_roads(cfg.paths.roads)
    if road_rej:
        logger.warning("%d road feature(s) rejected on load", len(road_rej))
    if buildings:
        cams, rejections = plan_all(buildings, roads, cfg.camera.make_provider(), cfg.camera.params)
    else:
        cams, rejections = [], []
    out = cfg.paths.output
    out.mkdir(parents=True, exist_ok=True)
    write_cameras(sorted(cams, key=lambda c: (c.building_id, c.camera_id)), out / CAMERAS)
    write_rejections(rejections, out / PLAN_REJECTIONS)
    _emit({"stage": "plan", "buildings": len(buildings), "cameras": len(cams), "rejected": len(rejections)})
    return 0


def _image_for(cfg: PipelineConfig, cam: CameraPoint) -> bytes:
    if cfg.paths.images is not None:
        p = cfg.paths.images / (cam.camera_id.replace("/", "_") + ".jpg")
        if p.is_file():
            return p.read_bytes()
    # stand-in payload when no imagery is on disk: the camera record itself
    return json.dumps(cam.to_json(), sort_keys=True).encode("utf-8")


def cmd_extract(cfg: PipelineConfig, args) -> int:
    out = cfg.paths.output
    cams = read_cameras(_need(out / CAMERAS, "camera file"))
    buildings = {b.id: b for b in _buildings(cfg)}
    backend = cfg.extraction.make_backend()
    ex = cfg.extraction

    def request_for(cam):
        b = buildings.get(cam.building_id)
        req = ExtractionRequest(_image_for(cfg, cam), b.address if b else "", ex.params, ex.retry_limit)
        ctx = BuildingContext(cam.building_id, cam.camera_id, b.construction_year if b else None)
        return req, ctx

    if args.consistency is not None:
        rows = []
        for cam in cams:
            req, ctx = request_for(cam)
            try:
                rep = consistency_run(req, ctx, args.consistency, backend, inject_year=ex.inject_year)
                rows.append({"building_id": ctx.building_id, "camera_id": ctx.camera_id, **rep.to_json()})
            except ValueError as exc:
                rows.append({"building_id": ctx.building_id, "camera_id": ctx.camera_id, "error": str(exc)})
        _jsonl(rows, out / CONSISTENCY)
        _emit({"stage": "extract", "consistency_runs": len(rows), "n": args.consistency})
        return 0

    existing: dict[tuple[str, str], FacadeFeatures] = {}
    feats_path = out / FEATURES
    if feats_path.is_file() and not args.force:
        existing = {(f.building_id, f.camera_id): f for f in read_features(feats_path)}
    records = dict(existing)
    log, failed, skipped = [], 0, 0
    for cam in cams:
        key = (cam.building_id, cam.camera_id)
        if key in existing:
            skipped += 1
            log.append({"building_id": key[0], "camera_id": key[1], "status": "skipped"})
            continue
        req, ctx = request_for(cam)
        try:
            f = extract(req, ctx, backend, inject_year=ex.inject_year, mode=ex.mode)
        except ExtractionFailed as exc:
            failed += 1
            logger.warning("%s", exc)
            log.append({"building_id": key[0], "camera_id": key[1], "status": "failed", "attempts": exc.attempts, "error": str(exc)})
            continue
        records[key] = f
        log.append({"building_id": key[0], "camera_id": key[1], "status": "ok", "attempts": f.attempts})
    write_features([records[k] for k in sorted(records)], feats_path)
    _jsonl(log, out / EXTRACT_LOG)
    _emit({"stage": "extract", "records": len(records), "failed": failed, "skipped": skipped, "warnings": failed})
    return 0


def cmd_analyze(cfg: PipelineConfig, args) -> int:
    out = cfg.paths.output
    feats = list(_one_per_building(read_features(_need(out / FEATURES, "feature file"))).values())
    buildings = _buildings(cfg)
    labels = _labels(cfg, buildings)
    truth = {b.id: b.construction_year for b in buildings if b.construction_year is not None}
    pred = {f.building_id: f["construction_year"] for f in feats}
    joined = [b for b in pred if b in truth]
    if not joined:
        raise PipelineError(f"no buildings join between {len(pred)} feature record(s) and {len(truth)} register year(s)")
    labelled = [f for f in feats if f.building_id in labels]
    if not labelled:
        raise PipelineError(f"no feature record has a heritage label ({len(feats)} records, {len(labels)} labels)")

    errors = fa.year_errors(pred, truth, cfg.eras)
    confusion = fa.era_confusion(pred, truth, cfg.eras)
    dists = fa.scale_distributions(labelled, labels)
    assoc = fa.association_table(labelled, labels)

    d = out / ANALYTICS
    d.mkdir(parents=True, exist_ok=True)
    fa.write_json(errors.to_json(), d / "year_errors.json")
    fa.write_json(confusion.to_json(), d / "era_confusion.json")
    fa.write_csv(fa.distribution_rows(dists), d / "scale_distributions.csv", fa.DISTRIBUTION_COLUMNS)
    fa.write_json([vars(x) for x in dists], d / "scale_distributions.json")
    fa.write_csv(fa.association_rows(assoc), d / "associations.csv", fa.ASSOCIATION_COLUMNS)
    _emit({
        "stage": "analyze",
        "joined": len(joined),
        "unmatched_predictions": len(pred) - len(joined),
        "labelled": len(labelled),
    })  # fmt: skip
    return 0


def cmd_train_eval(cfg: PipelineConfig, args) -> int:
    out = cfg.paths.output
    feats = _one_per_building(read_features(_need(out / FEATURES, "feature file")))
    buildings = _buildings(cfg)
    labels = _labels(cfg, buildings)
    register = {
        b.id: RegisterInfo(b.construction_year, b.construction_period, b.building_type) for b in buildings
    }
    mats = {fs: encode(feats, labels, register, fs, scheme=cfg.eras) for fs in FEATURE_SETS}
    run = run_scenarios(
        mats,
        cfg.models.families,
        cfg.models.grids,
        cfg.split,
        cfg.models.scenarios,
        cfg.models.top_k,
    )
    d = out / TRAIN
    (d / "models").mkdir(parents=True, exist_ok=True)
    (d / "search_logs").mkdir(parents=True, exist_ok=True)
    write_scenario_table(run, d / "scenarios.csv", d / "scenarios.json")
    write_confusions(run, d / "confusions.json")
    write_importances(run, d / "importances.csv")
    (d / "split.json").write_text(json.dumps(run.split, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    for name, model in run.models.items():
        safe = name.replace("+", "_")
        model.save(d / "models" / f"{safe}.json")
        write_search_log(run.logs[name], d / "search_logs" / f"{safe}.csv")
    print(format_table(run))
    return 0


def cmd_report(cfg: PipelineConfig, args) -> int:
    out = cfg.paths.output
    lines = []
    sc = out / TRAIN / "scenarios.json"
    if sc.is_file():
        doc = json.loads(sc.read_text(encoding="utf-8"))
        lines.append("Scenario macro F1 (test split)")
        for s in doc["scenarios"]:
            lines.append(f"  {s['scenario']:<16} {s['macro_f1']:.4f}")
        best = max((s for s in doc["scenarios"] if s["importances"]), key=lambda s: s["macro_f1"], default=None)
        if best is not None:
            lines.append(f"Top features of {best['scenario']} (* = register column)")
            for imp in best["importances"]:
                lines.append(f"  {imp['label']:<40} {imp['importance']:.4f}")
    ye = out / ANALYTICS / "year_errors.json"
    if ye.is_file():
        doc = json.loads(ye.read_text(encoding="utf-8"))
        lines.append("Construction year error by era (predicted - actual)")
        for era, s in doc["per_era"].items():
            lines.append(f"  {era:<12} n={s['count']:<5} mean={s['mean_error']:+.1f} mae={s['mean_abs_error']:.1f}")
    assoc = out / ANALYTICS / "associations.csv"
    if assoc.is_file():
        import csv

        with assoc.open(encoding="utf-8") as fh:
            rows = [r for r in csv.DictReader(fh) if r["cramers_v"]]
        rows.sort(key=lambda r: (-float(r["cramers_v"]), r["feature"]))
        lines.append("Strongest associations with heritage category (Cramér's V)")
        lines += [f"  {r['feature']:<40} {float(r['cramers_v']):.3f}" for r in rows[:10]]
    if not lines:
        raise PipelineError(f"nothing to report in {out}; run analyze or train-eval first")
    text = "\n".join(lines) + "\n"
    (out / "report.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def cmd_synth(args) -> int:
    from .synthetic import generate_world

    world = generate_world(args.n, args.seed, signal=args.signal)
    d = Path(args.out)
    paths = world.write(d)
    cfg = (
        "[paths]\n"
        f'buildings = "{paths["buildings"].name}"\n'
        f'roads = "{paths["roads"].name}"\n'
        f'inventory = "{paths["inventory"].name}"\n'
        'output = "out"\n\n'
        "[extraction]\n"
        'backend = "replay"\n'
        f'replay_file = "{paths["responses"].name}"\n\n'
        "[split]\n"
        f"seed = {args.seed}\n"
    )
    (d / "config.toml").write_text(cfg, encoding="utf-8")
    _emit({"stage": "synth", "buildings": len(world.buildings), "config": str(d / "config.toml")})
    return 0


COMMANDS = {
    "plan": cmd_plan,
    "extract": cmd_extract,
    "analyze": cmd_analyze,
    "train-eval": cmd_train_eval,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="heritage-assess", description="Facade-image heritage screening pipeline.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, type=Path, help="pipeline TOML file")
        sp.add_argument("--seed", type=int, help="override split.seed (and the mock backend seed)")
        return sp

    add("plan", "place cameras in front of building walls")
    ex = add("extract", "query the LLM backend for facade features")
    ex.add_argument("--force", action="store_true", help="re-extract keys already in the feature file")
    ex.add_argument("--consistency", type=int, metavar="N", help="ask each question N times and write spread statistics")
    add("analyze", "feature-quality tables")
    add("train-eval", "grid-search the model families and score every scenario")
    add("report", "summarise existing outputs")
    sy = sub.add_parser("synth", help="write a synthetic city and a matching config")
    sy.add_argument("--out", required=True, type=Path)
    sy.add_argument("--n", type=int, default=200)
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--signal", type=float, default=1.0)
    return p


def _fail(exc: BaseException, code: int) -> int:
    err = {"error": type(exc).__name__, "message": str(exc)}
    path = getattr(exc, "filename", None) or getattr(exc, "path", None)
    if path:
        err["path"] = str(path)
    sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "synth":
            return cmd_synth(args)
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(
                cfg,
                split=SplitSpec(cfg.split.fractions, args.seed),
                extraction=replace(cfg.extraction, seed=args.seed),
            )
        if getattr(args, "consistency", None) is not None and args.consistency < 2:
            raise ConfigError("--consistency needs N >= 2")
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        return _fail(exc, 2)
    except (FileNotFoundError, GeoDataError, BackendError, PipelineError, ValueError, RuntimeError) as exc:
        return _fail(exc, 1)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
