"""Deterministic synthetic fixtures standing in for proprietary imagery and count data.

Every generator takes an integer seed and draws from numpy's PCG64
(``np.random.default_rng([seed, stream])``), so output is identical across
platforms for a given numpy major version. Counts are independent Poisson
draws per interval: fine for pipeline tests, unrealistic as traffic.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from datetime import date, datetime, timedelta, timezone
from pathlib import Path
from zoneinfo import ZoneInfo

import numpy as np

from .counts import flow_per_vehicle
from .emissions import compute_emissions
from .errors import ValidationError
from .ingest import (
    CountRecord,
    Detection,
    EmissionsFactors,
    ImageMeta,
    LATruth,
    parse_factors,
    write_count_history,
    write_detections,
    write_factors,
    write_la_truth,
)
from .speed.raster import DualBandRaster, write_raster
from .vehicles import LENGTH_CLASSES, VEHICLE_TYPES, AADTVector, Direction, LengthClass, RoadType, VehicleType
from .aadt.model import derive_la_target

INTERVALS_PER_DAY = 96

# vehicles/hour per direction at the diurnal mean
DEFAULT_BASE_FLOW = {
    LengthClass.SMALL: 2400.0,
    LengthClass.MEDIUM: 320.0,
    LengthClass.LARGE: 260.0,
    LengthClass.VERY_LARGE: 420.0,
}
# share of AADT by vehicle type used to build synthetic ground truth
DEFAULT_TYPE_SHARES = (0.75, 0.14, 0.10, 0.01)


@dataclass(frozen=True)
class SiteSpec:
    site_id: str
    la_name: str
    direction: Direction
    flow_multiplier: float = 1.0


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 7
    sites: tuple = (SiteSpec("LUT01A", "Luton", Direction.A, 1.0),)
    start: date = date(2017, 1, 1)
    days: int = 340
    base_flow: dict = field(default_factory=lambda: dict(DEFAULT_BASE_FLOW))
    diurnal_amplitude: float = 0.6
    weekly_amplitude: float = 0.15
    monthly_amplitude: float = 0.08
    speed_mean_kmh: float = 100.0
    speed_sd_kmh: float = 6.0
    missing_rate: float = 0.0

    def __post_init__(self):
        if any(v < 0 for v in self.base_flow.values()):
            raise ValidationError("base flows must be non-negative")
        if self.days < 1:
            raise ValidationError("days must be positive")


def modulation(ts: datetime, config: SynthConfig) -> float:
    hour = ts.hour + ts.minute / 60.0
    diurnal = 1.0 + config.diurnal_amplitude * math.cos(2 * math.pi * (hour - 13.0) / 24.0)
    weekly = 1.0 - config.weekly_amplitude * (ts.isoweekday() >= 6)
    monthly = 1.0 + config.monthly_amplitude * math.cos(2 * math.pi * (ts.month - 7) / 12.0)
    return max(diurnal * weekly * monthly, 0.0)


def expected_counts(ts: datetime, site: SiteSpec, config: SynthConfig) -> dict:
    """Mean count per length class in the 15-minute interval starting at ``ts``."""
    m = modulation(ts, config) * site.flow_multiplier / 4.0
    return {c: config.base_flow[c] * m for c in LENGTH_CLASSES}


def _timestamps(config: SynthConfig):
    t0 = datetime(config.start.year, config.start.month, config.start.day)
    return [t0 + timedelta(minutes=15 * i) for i in range(config.days * INTERVALS_PER_DAY)]


def history_records(config: SynthConfig, site_index: int) -> list[CountRecord]:
    site = config.sites[site_index]
    rng = np.random.default_rng([config.seed, site_index])
    stamps = _timestamps(config)
    lam = np.array([[expected_counts(ts, site, config)[c] for c in LENGTH_CLASSES] for ts in stamps])
    counts = rng.poisson(lam)
    mod = np.array([modulation(ts, config) for ts in stamps])
    speeds = config.speed_mean_kmh - 12.0 * (mod - 1.0) + rng.normal(0.0, config.speed_sd_kmh, len(stamps))
    speeds = np.round(np.clip(speeds, 5.0, None), 1)
    missing = rng.random(len(stamps)) < config.missing_rate
    records = []
    for i, ts in enumerate(stamps):
        c = {cls: int(counts[i, k]) for k, cls in enumerate(LENGTH_CLASSES)}
        records.append(CountRecord(
            timestamp=ts, site_id=site.site_id, direction=site.direction, counts=c,
            total=sum(c.values()), mean_speed_kmh=None if missing[i] else float(speeds[i]),
        ))
    return records


def gen_history(config: SynthConfig, out_dir) -> dict:
    """Write one count file per site; returns site_id -> path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    for i, site in enumerate(config.sites):
        path = out / f"{site.site_id}.csv"
        write_count_history(path, history_records(config, i))
        paths[site.site_id] = path
    return paths


def site_aadt(site: SiteSpec, config: SynthConfig, year: int, shares=DEFAULT_TYPE_SHARES) -> AADTVector:
    """Expected daily flow over ``year`` split into vehicle types."""
    cfg = replace(config, start=date(year, 1, 1), days=365)
    daily = sum(sum(expected_counts(ts, site, cfg).values()) for ts in _timestamps(cfg)) / 365.0
    return AADTVector.from_sequence([daily * s for s in shares])


ROAD_TYPE_RATIO = {RoadType.MOTORWAYS: 1.0, RoadType.A_ROADS: 0.55, RoadType.MINOR_ROADS: 0.2}
YEAR_GROWTH = {2017: 1.0, 2018: 1.01}


def la_truth_rows(config: SynthConfig, factors: EmissionsFactors | None = None, years=(2017, 2018)) -> list[LATruth]:
    rows = []
    for la in dict.fromkeys(s.la_name for s in config.sites):
        sites = [s for s in config.sites if s.la_name == la]
        for year in years:
            per_site = {}
            for s in sites:
                vec = site_aadt(s, config, 2017).scaled(YEAR_GROWTH.get(year, 1.0))
                for vtype in VEHICLE_TYPES:
                    per_site[(s.site_id, s.direction, vtype)] = vec[vtype]
            motorway = derive_la_target(per_site)
            for road_type, ratio in ROAD_TYPE_RATIO.items():
                aadt = motorway.scaled(ratio)
                ghg = None
                if factors is not None and (la, road_type) in factors.road_length_km:
                    ghg = compute_emissions(aadt, factors, la, road_type).total_kgco2e
                rows.append(LATruth(la, year, road_type, aadt, ghg))
    return rows


def synth_targets(records, base: AADTVector = AADTVector(42000.0, 8000.0, 6000.0, 500.0)) -> np.ndarray:
    """Noiseless targets that depend on every model input."""
    weights = np.array([6.0, 1.2, 0.9, 0.05])
    out = np.empty((len(records), 4))
    base_arr = np.array(base.as_tuple())
    for i, r in enumerate(records):
        ts = r.timestamp
        factor = (
            1.0
            + 0.08 * math.sin(2 * math.pi * ts.hour / 24.0)
            + 0.03 * math.cos(2 * math.pi * ts.isoweekday() / 7.0)
            + 0.02 * (ts.month - 6.5) / 5.5
            + 0.002 * (r.mean_speed_kmh - 100.0)
        )
        out[i] = base_arr * factor + weights * r.total + np.array(
            [2.0 * r.counts[LengthClass.SMALL], r.counts[LengthClass.MEDIUM],
             r.counts[LengthClass.LARGE] + r.counts[LengthClass.VERY_LARGE], 0.1 * r.counts[LengthClass.VERY_LARGE]])
    return out


# -- rasters --------------------------------------------------------------------------

@dataclass(frozen=True)
class RasterConfig:
    rows: int = 128
    cols: int = 128
    object_rows: int = 3
    object_cols: int = 2  # along the motion; must not exceed shift_px for an unbiased estimate
    shift_px: int = 4  # along columns
    n_objects: int = 1
    contrast: float = 80.0
    noise: float = 0.0
    gsd_m_per_px: float = 1.0
    time_lag_s: float = 0.26
    seed: int = 0

    @property
    def implied_speed_kmh(self) -> float:
        return self.shift_px * self.gsd_m_per_px / self.time_lag_s * 3.6


def _background(cfg: RasterConfig, rng: np.random.Generator) -> np.ndarray:
    block = 8
    coarse = rng.normal(0.0, 20.0, size=(-(-cfg.rows // block), -(-cfg.cols // block)))
    tex = np.kron(coarse, np.ones((block, block)))[: cfg.rows, : cfg.cols]
    return 120.0 + tex


def object_origins(cfg: RasterConfig) -> list[tuple[int, int]]:
    spacing = cfg.rows // (cfg.n_objects + 1)
    col0 = cfg.cols // 4
    return [(spacing * (k + 1) - cfg.object_rows // 2, col0) for k in range(cfg.n_objects)]


def gen_raster(cfg: RasterConfig) -> DualBandRaster:
    """Band B is band A with each object moved ``shift_px`` columns, plus independent noise."""
    if cfg.shift_px < 0:
        raise ValidationError("shift must be non-negative")
    rng = np.random.default_rng([cfg.seed, 1])
    bg = _background(cfg, rng)
    band_a, band_b = bg.copy(), bg.copy()
    for r0, c0 in object_origins(cfg):
        r1, c1 = r0 + cfg.object_rows, c0 + cfg.object_cols
        if r0 < 0 or r1 > cfg.rows or c0 < 0 or c1 + cfg.shift_px > cfg.cols:
            raise ValidationError(f"object at ({r0}, {c0}) leaves the frame after a {cfg.shift_px} px shift")
        band_a[r0:r1, c0:c1] += cfg.contrast
        band_b[r0:r1, c0 + cfg.shift_px:c1 + cfg.shift_px] += cfg.contrast
    if cfg.noise > 0:
        band_a = band_a + rng.normal(0.0, cfg.noise, band_a.shape)
        band_b = band_b + rng.normal(0.0, cfg.noise, band_b.shape)
    return DualBandRaster(band_a, band_b, cfg.gsd_m_per_px, cfg.time_lag_s)


# -- detections --------------------------------------------------------------------------

# vehicle lengths (cm) drawn inside each class, clear of the boundaries
_LENGTH_RANGES_CM = {
    LengthClass.SMALL: (350, 510),
    LengthClass.MEDIUM: (530, 650),
    LengthClass.LARGE: (700, 1150),
    LengthClass.VERY_LARGE: (1200, 1650),
}
DEFAULT_CLASS_LABELS = {
    LengthClass.SMALL: ("Small car",),
    LengthClass.MEDIUM: ("Pickup Truck",),
    LengthClass.LARGE: ("Cargo Truck",),
    LengthClass.VERY_LARGE: ("Truck Tractor",),
}


@dataclass(frozen=True)
class SynthDetections:
    detections: list
    meta: ImageMeta
    n_per_class: dict
    flow_per_vehicle: float
    rounding_error: dict  # LengthClass -> |N*flow - truth|, vehicles per 15 min

    @property
    def max_rounding_error(self) -> float:
        return max(self.rounding_error.values())


def gen_detections(
    truth: CountRecord,
    speed_kmh: float,
    segment_length_km: float,
    gsd_m_per_px: float = 0.31,
    la_name: str = "",
    acquisition_timestamp: datetime | None = None,
    labels: dict | None = None,
    seed: int = 0,
    band_time_lag_s: float = 0.26,
) -> SynthDetections:
    """Detections whose count per class reproduces ``truth`` through the count estimator.

    ``N_i = round(truth_i / f)`` with ``f`` the 15-minute flow one detected
    vehicle stands for; the residual is at most ``f / 2`` per class.
    """
    if not speed_kmh > 0:
        raise ValidationError("speed must be positive to invert the count estimator")
    if truth.missing:
        raise ValidationError("truth record has missing fields")
    labels = labels or DEFAULT_CLASS_LABELS
    rng = np.random.default_rng([seed, 2])
    per_vehicle = flow_per_vehicle(speed_kmh, segment_length_km)
    detections, n_per_class, err = [], {}, {}
    x = 10.0
    for cls in LENGTH_CLASSES:
        n = int(round(truth.counts[cls] / per_vehicle))
        n_per_class[cls] = n
        err[cls] = abs(n * per_vehicle - truth.counts[cls])
        lo, hi = _LENGTH_RANGES_CM[cls]
        names = labels[cls]
        for k in range(n):
            length_px = int(rng.integers(lo, hi + 1)) / 100.0 / gsd_m_per_px
            width_px = 2.0 / gsd_m_per_px
            y = 20.0 + 10.0 * (k % 3)
            detections.append(Detection(
                bbox=(x, x + length_px, y, y + width_px),
                source_class=names[k % len(names)],
                confidence=round(float(rng.uniform(0.5, 0.99)), 3),
                gsd_m_per_px=gsd_m_per_px,
            ))
            x += length_px + 5.0
    ts = acquisition_timestamp or truth.timestamp.replace(tzinfo=timezone.utc)
    meta = ImageMeta(ts, truth.site_id, la_name, truth.direction, segment_length_km, gsd_m_per_px, band_time_lag_s)
    return SynthDetections(detections, meta, n_per_class, per_vehicle, err)


# -- end-to-end fixture -------------------------------------------------------------------

FIXTURE_SITES = (
    SiteSpec("LUT01A", "Luton", Direction.A, 1.0),
    SiteSpec("LUT01B", "Luton", Direction.B, 0.9),
    SiteSpec("HAV02A", "Havering", Direction.A, 1.3),
    SiteSpec("HAV02B", "Havering", Direction.B, 1.15),
)
# invented non-motorway lengths so the A-road/minor-road paths can run
FIXTURE_EXTRA_LENGTHS = {
    ("Luton", RoadType.A_ROADS): 38.5,
    ("Luton", RoadType.MINOR_ROADS): 380.0,
    ("Havering", RoadType.A_ROADS): 61.0,
    ("Havering", RoadType.MINOR_ROADS): 590.0,
}
FIXTURE_ACQUISITION_LOCAL = datetime(2018, 6, 12, 11, 0)
FIXTURE_TIMEZONE = "Europe/London"


def fixture_factors() -> EmissionsFactors:
    base = parse_factors()
    lengths = dict(base.road_length_km)
    lengths.update(FIXTURE_EXTRA_LENGTHS)
    return replace(base, road_length_km=lengths)


def build_fixture(
    out_dir,
    seed: int = 7,
    days: int = 60,
    sites=FIXTURE_SITES,
    detection_labels: dict | None = None,
    raster_gsd: float = 1.0,
) -> Path:
    """Write a complete two-direction fixture plus ``config.json``; returns the config path.

    Training history covers ``days`` days from 2017-01-01. The 2018
    acquisition day is written separately as observed data (historical
    speeds and 15-minute truth counts).
    """
    out = Path(out_dir)
    for sub in ("history", "observed", "detections", "rasters"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    train_cfg = SynthConfig(seed=seed, sites=tuple(sites), start=date(2017, 1, 1), days=days)
    obs_cfg = replace(train_cfg, seed=seed + 1, start=FIXTURE_ACQUISITION_LOCAL.date(), days=1)
    gen_history(train_cfg, out / "history")
    gen_history(obs_cfg, out / "observed")

    factors = fixture_factors()
    write_factors(out / "factors.csv", factors)
    write_la_truth(out / "la_truth.csv", la_truth_rows(train_cfg, factors))
    with (out / "sites.csv").open("w") as fh:
        fh.write("site_id,la_name,direction\n")
        for s in sites:
            fh.write(f"{s.site_id},{s.la_name},{s.direction.value}\n")

    tz = ZoneInfo(FIXTURE_TIMEZONE)
    acq_utc = FIXTURE_ACQUISITION_LOCAL.replace(minute=5, tzinfo=tz).astimezone(timezone.utc)
    for i, site in enumerate(sites):
        truth = next(r for r in history_records(obs_cfg, i) if r.timestamp == FIXTURE_ACQUISITION_LOCAL)
        synth = gen_detections(
            truth, truth.mean_speed_kmh, segment_length_km=1.5, gsd_m_per_px=0.31, la_name=site.la_name,
            acquisition_timestamp=acq_utc, labels=detection_labels, seed=seed + i,
        )
        stem = site.site_id
        write_detections(out / "detections" / f"{stem}.json", synth.detections, synth.meta)
        shift = max(1, int(round(truth.mean_speed_kmh / 3.6 * 0.26 / raster_gsd)))
        raster = gen_raster(RasterConfig(
            rows=256, cols=256, n_objects=3, shift_px=shift, noise=1.0, gsd_m_per_px=raster_gsd, seed=seed + i))
        write_raster(out / "rasters" / f"{stem}.dbr", raster)

    config = {
        "history_dir": "history",
        "observed_dir": "observed",
        "detections_dir": "detections",
        "rasters_dir": "rasters",
        "factors": "factors.csv",
        "la_truth": "la_truth.csv",
        "sites": "sites.csv",
        "weights_dir": "weights",
        "output_dir": "out",
        "timezone": FIXTURE_TIMEZONE,
        "road_type": "motorways,a-roads",
        "speed_source": "historical",
        "seed": seed,
        "max_epochs": 30,
    }
    path = out / "config.json"
    path.write_text(json.dumps(config, indent=1, sort_keys=True) + "\n")
    return path
