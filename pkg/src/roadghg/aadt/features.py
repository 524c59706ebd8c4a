"""Model inputs: time fields, speed, and min-max scaled counts."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..vehicles import LENGTH_CLASSES

COUNT_FEATURES = ("small", "medium", "large", "very_large", "total")
FEATURE_NAMES = ("hour_of_day", "day_of_week", "month_of_year", "speed_kmh", *COUNT_FEATURES)
N_FEATURES = len(FEATURE_NAMES)


def raw_counts(record) -> tuple[float, ...]:
    return (*(record.counts[c] for c in LENGTH_CLASSES), record.total)


@dataclass(frozen=True)
class MinMaxParams:
    """Per-feature (min, max) for the five count features, from training rows."""

    mins: tuple[float, ...]
    maxs: tuple[float, ...]

    def __post_init__(self):
        if len(self.mins) != len(COUNT_FEATURES) or len(self.maxs) != len(COUNT_FEATURES):
            raise ValueError(f"need {len(COUNT_FEATURES)} (min, max) pairs")
        for name, lo, hi in zip(COUNT_FEATURES, self.mins, self.maxs):
            if hi < lo:
                raise ValueError(f"{name}: max {hi} < min {lo}")

    def scale(self, values) -> np.ndarray:
        """Constant features map to 0; values beyond the training range pass through unclamped."""
        v = np.asarray(values, dtype=np.float64)
        lo = np.asarray(self.mins)
        span = np.asarray(self.maxs) - lo
        safe = np.where(span > 0, span, 1.0)
        return np.where(span > 0, (v - lo) / safe, 0.0)

    def unscale(self, scaled) -> np.ndarray:
        s = np.asarray(scaled, dtype=np.float64)
        lo = np.asarray(self.mins)
        return lo + s * (np.asarray(self.maxs) - lo)

    def to_json(self) -> dict:
        return {"features": list(COUNT_FEATURES), "min": list(self.mins), "max": list(self.maxs)}

    @classmethod
    def from_json(cls, doc) -> "MinMaxParams":
        if list(doc["features"]) != list(COUNT_FEATURES):
            raise ValueError(f"min-max features {doc['features']} do not match {COUNT_FEATURES}")
        return cls(tuple(float(v) for v in doc["min"]), tuple(float(v) for v in doc["max"]))


def fit_minmax(history) -> MinMaxParams:
    rows = [raw_counts(r) for r in history if not r.missing]
    if not rows:
        raise ValidationError("cannot fit min-max scaling on an empty history")
    arr = np.asarray(rows, dtype=np.float64)
    return MinMaxParams(tuple(arr.min(axis=0).tolist()), tuple(arr.max(axis=0).tolist()))


@dataclass(frozen=True)
class FeatureVector:
    hour_of_day: int
    day_of_week: int  # 1 = Monday
    month_of_year: int
    speed_kmh: float
    scaled_counts: tuple[float, float, float, float]  # S, M, L, VL
    total_vehicles: float  # scaled

    def __post_init__(self):
        if not (0 <= self.hour_of_day <= 23 and 1 <= self.day_of_week <= 7 and 1 <= self.month_of_year <= 12):
            raise ValidationError(
                f"time fields out of range: hour={self.hour_of_day} day={self.day_of_week} month={self.month_of_year}")

    def as_array(self) -> np.ndarray:
        return np.array([
            self.hour_of_day, self.day_of_week, self.month_of_year, self.speed_kmh,
            *self.scaled_counts, self.total_vehicles,
        ], dtype=np.float64)


def build_features(record, params: MinMaxParams) -> FeatureVector:
    if record.missing:
        raise ValidationError(f"record at {record.timestamp} has missing fields; cannot build features")
    ts = record.timestamp
    scaled = params.scale(raw_counts(record))
    return FeatureVector(
        hour_of_day=ts.hour,
        day_of_week=ts.isoweekday(),
        month_of_year=ts.month,
        speed_kmh=float(record.mean_speed_kmh),
        scaled_counts=tuple(float(v) for v in scaled[:4]),
        total_vehicles=float(scaled[4]),
    )


def feature_matrix(records, params: MinMaxParams) -> np.ndarray:
    """Vectorised ``build_features`` over complete records."""
    if not records:
        return np.empty((0, N_FEATURES))
    time_speed = np.array(
        [(r.timestamp.hour, r.timestamp.isoweekday(), r.timestamp.month, r.mean_speed_kmh) for r in records],
        dtype=np.float64,
    )
    counts = params.scale(np.array([raw_counts(r) for r in records], dtype=np.float64))
    return np.hstack([time_speed, counts])
