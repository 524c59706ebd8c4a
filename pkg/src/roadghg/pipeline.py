"""End-to-end runs behind the CLI subcommands.

Each ``run_*`` function takes a ``RunConfig`` and only composes public
module operations, so a run can be reproduced by chaining them by hand.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from zoneinfo import ZoneInfo

from . import metrics
from .aadt import (
    FEATURE_NAMES,
    TrainConfig,
    aggregate_directions,
    build_features,
    load_weights,
    predict,
    save_weights,
    train_for_road_type,
    weights_filename,
)
from .counts import estimate_counts
from .emissions import EMISSIONS_HEADER, apportion_aadt, compute_emissions, emissions_rows
from .errors import ParseError, SchemaError, SpeedUnavailableError, ValidationError
from .ingest import (
    DEFAULT_CONFIDENCE_THRESHOLD,
    filter_confident,
    parse_count_history,
    parse_detections,
    parse_factors,
    parse_la_truth,
    validate_site,
    write_count_history,
)
from .speed import BlobThresholds, estimate_live_speed, read_raster
from .speed.estimate import default_max_displacement_m
from .vehicles import LENGTH_CLASSES, VEHICLE_TYPES, AADTVector, RoadType

log = logging.getLogger(__name__)

PATH_KEYS = (
    "history_dir", "observed_dir", "detections_dir", "rasters_dir", "factors", "la_truth", "sites",
    "weights_dir", "output_dir", "predictions_dir",
)


@dataclass
class RunConfig:
    history_dir: str | None = None
    observed_dir: str | None = None
    detections_dir: str | None = None
    rasters_dir: str | None = None
    factors: str | None = None  # None: bundled defaults
    la_truth: str | None = None
    sites: str | None = None
    weights_dir: str = "weights"
    output_dir: str = "out"
    predictions_dir: str | None = None  # evaluate reads predictions here; defaults to output_dir
    speed_source: str = "historical"
    speed_fallback_historical: bool = False
    historical_speed_mode: str = "interval"  # "interval": the 15-minute mean; "daily": that day's mean
    road_type: str = "motorways"
    no_vehicle_type: bool = False
    timezone: str = "Europe/London"
    test_year: int = 2018
    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD
    hidden_layers: str = "32,32"
    learning_rate: float = 1e-3
    batch_size: int = 64
    patience: int = 3
    val_fraction: float = 0.1
    max_epochs: int = 200
    min_area_px: int = 4
    min_compactness: float = 0.3
    min_rectangularity: float = 0.5
    intensity_quantile: float = 0.995
    max_speed_mph: float = 70.0
    sparse_share: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.speed_source not in ("historical", "estimated"):
            raise ValidationError(f"speed_source must be 'historical' or 'estimated', got {self.speed_source!r}")
        if self.historical_speed_mode not in ("interval", "daily"):
            raise ValidationError(
                f"historical_speed_mode must be 'interval' or 'daily', got {self.historical_speed_mode!r}")

    @property
    def road_types(self) -> list[RoadType]:
        return [RoadType.parse(t) for t in str(self.road_type).split(",") if t.strip()]

    @property
    def thresholds(self) -> BlobThresholds:
        return BlobThresholds(self.min_area_px, self.min_compactness, self.min_rectangularity, self.intensity_quantile)

    def train_config(self) -> TrainConfig:
        hidden = tuple(int(h) for h in str(self.hidden_layers).split(",") if h.strip())
        return TrainConfig(hidden, self.learning_rate, self.batch_size, self.patience, self.val_fraction,
                           self.max_epochs, self.seed, self.test_year)

    def require(self, *keys) -> None:
        missing = [k for k in keys if getattr(self, k) is None]
        if missing:
            raise SchemaError(f"config is missing required setting(s): {', '.join(missing)}")
        for k in keys:
            if k in PATH_KEYS and not Path(getattr(self, k)).exists():
                raise SchemaError(f"{k} path does not exist: {getattr(self, k)}")


def _coerce(value, target_type: str):
    if value is None:
        return None
    if "bool" in target_type:
        if isinstance(value, str):
            return value.strip().lower() in ("1", "true", "yes", "on")
        return bool(value)
    if "int" in target_type:
        return int(value)
    if "float" in target_type:
        return float(value)
    return str(value)


def load_config(path=None, overrides=None) -> RunConfig:
    """Flat JSON config; relative paths resolve against the config file's directory.

    ``overrides`` (from the command line) win over file values.
    """
    values, base = {}, Path.cwd()
    if path is not None:
        path = Path(path)
        try:
            values = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"config is not valid JSON: {exc.msg}", exc.lineno, path) from exc
        if not isinstance(values, dict) or any(isinstance(v, (dict, list)) for v in values.values()):
            raise SchemaError(f"{path}: config must be a flat key/value object")
        base = path.parent
    types = {f.name: str(f.type) for f in fields(RunConfig)}
    unknown = sorted(set(values) - set(types))
    if unknown:
        raise SchemaError(f"unknown config key(s): {', '.join(unknown)}")
    for key, value in values.items():
        if key in PATH_KEYS and value is not None and not Path(value).is_absolute():
            values[key] = str(base / value)
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig(**{k: _coerce(v, types[k]) for k, v in values.items()})


def read_sites(path) -> dict:
    """site_id -> la_name."""
    with Path(path).open(newline="") as fh:
        return {row["site_id"]: row["la_name"] for row in csv.DictReader(fh)}


# -- train -------------------------------------------------------------------------------

@dataclass
class TrainResult:
    weights_paths: list = field(default_factory=list)
    skipped: dict = field(default_factory=dict)  # site_id -> reason
    logs: dict = field(default_factory=dict)


def run_train(cfg: RunConfig) -> TrainResult:
    cfg.require("history_dir", "la_truth", "sites")
    truth = parse_la_truth(cfg.la_truth)
    sites = read_sites(cfg.sites)
    weights_dir = Path(cfg.weights_dir)
    weights_dir.mkdir(parents=True, exist_ok=True)
    tconf = cfg.train_config()
    result = TrainResult()
    summary = []
    for path in sorted(Path(cfg.history_dir).glob("*.csv")):
        records = parse_count_history(path)
        if not records:
            continue
        site_id = records[0].site_id
        if site_id not in sites:
            raise ValidationError(f"{path}: site {site_id} not listed in {cfg.sites}")
        report = validate_site(records)
        if not report.usable:
            result.skipped[site_id] = f"missing fraction {report.missing_fraction:.3f} exceeds 0.10"
            summary.append([site_id, "", "skipped", result.skipped[site_id]])
            continue
        for road_type in cfg.road_types:
            weights, tlog = train_for_road_type(records, truth, sites[site_id], road_type, tconf, site_id=site_id)
            name = weights_filename(site_id, road_type)
            save_weights(weights_dir / name, weights)
            tlog.write(weights_dir / name.replace(".json", ".log.json"))
            result.weights_paths.append(weights_dir / name)
            result.logs[(site_id, road_type)] = tlog
            summary.append([site_id, road_type.value, "trained",
                            f"best_epoch={tlog.best_epoch} val_mape={tlog.final_val_mape!r}"])
    with (weights_dir / "train_summary.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["site_id", "road_type", "status", "detail"])
        writer.writerows(summary)
    return result


# -- predict ------------------------------------------------------------------------------

@dataclass
class DirectionRun:
    stem: str
    meta: object
    detections: list
    speed_kmh: float
    speed_source: str
    speed_estimate: object | None
    count_record: object
    count_estimate: object
    features: dict  # RoadType -> FeatureVector
    aadt: dict  # RoadType -> AADTVector


@dataclass
class PredictResult:
    directions: list
    la_aadt: dict  # (la, RoadType) -> AADTVector used for emissions
    la_mean: dict  # (la, RoadType) -> mean of directional predictions
    reports: dict  # (la, RoadType) -> EmissionsReport
    trace: list
    paths: dict = field(default_factory=dict)


def observed_lookup(observed_dir) -> dict:
    """(site_id, timestamp) -> CountRecord over every file in ``observed_dir``."""
    index = {}
    for path in sorted(Path(observed_dir).glob("*.csv")):
        for r in parse_count_history(path):
            index[(r.site_id, r.timestamp)] = r
    return index


def local_interval(meta, tz: str):
    local = meta.acquisition_timestamp.astimezone(ZoneInfo(tz)).replace(tzinfo=None)
    return local.replace(minute=local.minute - local.minute % 15, second=0, microsecond=0)


def historical_speed(observed: dict, site_id: str, interval, mode: str = "interval") -> float:
    if mode == "daily":
        speeds = [r.mean_speed_kmh for (site, ts), r in observed.items()
                  if site == site_id and ts.date() == interval.date() and r.mean_speed_kmh is not None]
        if not speeds:
            raise SpeedUnavailableError(f"no historical speed for site {site_id} on {interval.date()}")
        return sum(speeds) / len(speeds)
    rec = observed.get((site_id, interval))
    if rec is None or rec.mean_speed_kmh is None:
        raise SpeedUnavailableError(f"no historical speed for site {site_id} at {interval}")
    return rec.mean_speed_kmh


def run_predict(cfg: RunConfig) -> PredictResult:
    cfg.require("detections_dir")
    if cfg.speed_source == "historical" or cfg.speed_fallback_historical:
        cfg.require("observed_dir")
    if cfg.speed_source == "estimated":
        cfg.require("rasters_dir")
    factors = parse_factors(cfg.factors)
    observed = observed_lookup(cfg.observed_dir) if cfg.observed_dir else {}
    trace = []
    runs = []
    for path in sorted(Path(cfg.detections_dir).glob("*.json")):
        stem = path.stem
        detections, meta = parse_detections(path)
        detections = filter_confident(detections, cfg.confidence_threshold)
        interval = local_interval(meta, cfg.timezone)
        trace.append({"stem": stem, "step": "ingest", "n_detections": len(detections)})

        estimate, source = None, cfg.speed_source
        if cfg.speed_source == "estimated":
            raster = read_raster(Path(cfg.rasters_dir) / f"{stem}.dbr")
            estimate = estimate_live_speed(
                raster, cfg.thresholds, default_max_displacement_m(raster.time_lag_s, cfg.max_speed_mph))
            trace.append({"stem": stem, "step": "speed_estimation", "status": estimate.status,
                          "pairs": estimate.pair_count})
            if estimate.failed:
                if not cfg.speed_fallback_historical:
                    raise SpeedUnavailableError(
                        f"live speed estimation failed for site {meta.site_id} ({stem}): no vehicle pairs; "
                        f"rerun with --speed-source historical or --speed-fallback-historical")
                speed = historical_speed(observed, meta.site_id, interval, cfg.historical_speed_mode)
                source = "historical-fallback"
            else:
                speed = estimate.mean_speed_kmh
        else:
            speed = historical_speed(observed, meta.site_id, interval, cfg.historical_speed_mode)

        count_est = estimate_counts(detections, speed, meta.segment_length_km)
        record = count_est.to_record(interval, meta.site_id, meta.direction)
        trace.append({"stem": stem, "step": "counts", "total_15min": record.total})
        feats, aadt = {}, {}
        for road_type in cfg.road_types:
            weights = load_weights(Path(cfg.weights_dir) / weights_filename(meta.site_id, road_type))
            feats[road_type] = build_features(record, weights.minmax)
            aadt[road_type] = predict(weights, feats[road_type], road_type)
            trace.append({"stem": stem, "step": "aadt", "road_type": road_type.value})
        runs.append(DirectionRun(stem, meta, detections, speed, source, estimate, record, count_est, feats, aadt))

    la_mean, la_aadt, reports = {}, {}, {}
    for la in dict.fromkeys(r.meta.la_name for r in runs):
        group = [r for r in runs if r.meta.la_name == la]
        for road_type in cfg.road_types:
            mean = aggregate_directions([r.aadt[road_type] for r in group])
            la_mean[(la, road_type)] = mean
            if cfg.no_vehicle_type:
                used = apportion_aadt(mean.total, [d for r in group for d in r.detections])
                trace.append({"la": la, "step": "apportion", "road_type": road_type.value})
            else:
                used = mean
            la_aadt[(la, road_type)] = used
            reports[(la, road_type)] = compute_emissions(used, factors, la, road_type)
            trace.append({"la": la, "step": "emissions", "road_type": road_type.value})
    result = PredictResult(runs, la_aadt, la_mean, reports, trace)
    result.paths = write_predictions(result, cfg)
    return result


def _r(v) -> str:
    return repr(float(v))


def write_predictions(result: PredictResult, cfg: RunConfig) -> dict:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}

    paths["counts"] = out / "counts.csv"
    write_count_history(paths["counts"], [r.count_record for r in result.directions])

    paths["speeds"] = out / "speeds.csv"
    with paths["speeds"].open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stem", "site_id", "speed_source", "speed_kmh", "pair_count", "status"])
        for r in result.directions:
            est = r.speed_estimate
            w.writerow([r.stem, r.meta.site_id, r.speed_source, _r(r.speed_kmh),
                        "" if est is None else est.pair_count, "" if est is None else est.status])

    paths["features"] = out / "features.csv"
    with paths["features"].open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stem", "road_type", *FEATURE_NAMES])
        for r in result.directions:
            for rt, fv in r.features.items():
                w.writerow([r.stem, rt.value, *(_r(v) for v in fv.as_array())])

    vt_cols = [v.value for v in VEHICLE_TYPES]
    paths["aadt_directions"] = out / "aadt_directions.csv"
    with paths["aadt_directions"].open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stem", "site_id", "la", "direction", "road_type", *vt_cols])
        for r in result.directions:
            for rt, vec in r.aadt.items():
                w.writerow([r.stem, r.meta.site_id, r.meta.la_name, r.meta.direction.value, rt.value,
                            *(_r(v) for v in vec.as_tuple())])

    paths["aadt_mean"] = out / "aadt_mean.csv"
    method = "apportioned" if cfg.no_vehicle_type else "vehicle_type"
    with paths["aadt_mean"].open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["la", "road_type", "method", *vt_cols])
        for (la, rt), vec in result.la_aadt.items():
            w.writerow([la, rt.value, method, *(_r(v) for v in vec.as_tuple())])

    paths["emissions"] = out / "emissions.csv"
    with paths["emissions"].open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EMISSIONS_HEADER)
        for row in emissions_rows(result.reports.values()):
            w.writerow(row[:4] + [_r(v) for v in row[4:]])
    paths["emissions_table"] = out / "emissions.txt"
    paths["emissions_table"].write_text("\n\n".join(rep.format() for rep in result.reports.values()) + "\n")

    paths["trace"] = out / "trace.json"
    paths["trace"].write_text(json.dumps(result.trace, indent=1) + "\n")
    return paths


# -- evaluate -------------------------------------------------------------------------------

def _read_vectors(path, key_cols) -> dict:
    out = {}
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            key = tuple(row[c] for c in key_cols)
            out[key] = AADTVector.from_sequence([row[v.value] for v in VEHICLE_TYPES])
    return out


def run_evaluate(cfg: RunConfig) -> tuple[metrics.RunResults, dict]:
    cfg.require("la_truth")
    pred_dir = Path(cfg.predictions_dir or cfg.output_dir)
    if not (pred_dir / "aadt_mean.csv").exists():
        raise SchemaError(f"no predictions in {pred_dir}; run 'predict' first")
    truth = {(t.la_name, t.road_type): t for t in parse_la_truth(cfg.la_truth) if t.year == cfg.test_year}
    means = {(la, RoadType(rt)): v for (la, rt), v in _read_vectors(pred_dir / "aadt_mean.csv", ("la", "road_type")).items()}
    missing = sorted(f"{la}/{rt.value}" for la, rt in set(means) - set(truth))
    if missing:
        raise ValidationError(f"predictions without {cfg.test_year} ground truth: {', '.join(missing)}")

    ghg_pred = {}
    with (pred_dir / "emissions.csv").open(newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["la"], RoadType(row["road_type"]))
            ghg_pred[key] = ghg_pred.get(key, 0.0) + float(row["kgco2e"])
    factors = parse_factors(cfg.factors)
    directions = _read_vectors(pred_dir / "aadt_directions.csv", ("site_id", "la", "road_type"))

    results = metrics.RunResults(sparse_share=cfg.sparse_share)
    for (la, rt), pred in means.items():
        t = truth[(la, rt)]
        ghg_true = t.ghg_kgco2e
        if ghg_true is None:
            ghg_true = compute_emissions(t.aadt, factors, la, rt).total_kgco2e
        dirs = {site: vec for (site, la2, rt2), vec in directions.items() if la2 == la and RoadType(rt2) is rt}
        results.la_results.append(metrics.LAResult(la, rt.value, pred, t.aadt, ghg_pred[(la, rt)], ghg_true, dirs))

    if cfg.observed_dir:
        observed = observed_lookup(cfg.observed_dir)
        for est in parse_count_history(pred_dir / "counts.csv", allow_fractional=True):
            obs = observed.get((est.site_id, est.timestamp))
            if obs is None:
                raise ValidationError(f"no observed counts for {est.site_id} at {est.timestamp}")
            results.count_pairs[est.site_id] = [(est.counts[c], obs.counts[c]) for c in LENGTH_CLASSES]
    paths = metrics.report(results, Path(cfg.output_dir) / "evaluation")
    return results, paths


# -- speed ------------------------------------------------------------------------------------

def run_speed(cfg: RunConfig) -> tuple[list, Path]:
    cfg.require("rasters_dir")
    rows = []
    for path in sorted(Path(cfg.rasters_dir).glob("*.dbr")):
        raster = read_raster(path)
        est = estimate_live_speed(
            raster, cfg.thresholds, default_max_displacement_m(raster.time_lag_s, cfg.max_speed_mph))
        rows.append((path.stem, est))
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "speed_estimates.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["raster", "status", "mean_speed_kmh", "pair_count", "n_bright", "n_dark"])
        for stem, est in rows:
            w.writerow([stem, est.status, "" if est.failed else _r(est.mean_speed_kmh),
                        est.pair_count, est.n_bright, est.n_dark])
        ok = [e.mean_speed_kmh for _, e in rows if not e.failed]
        w.writerow(["SUMMARY", f"{len(ok)}/{len(rows)} ok", _r(sum(ok) / len(ok)) if ok else "",
                    sum(e.pair_count for _, e in rows), sum(e.n_bright for _, e in rows),
                    sum(e.n_dark for _, e in rows)])
    return rows, path
