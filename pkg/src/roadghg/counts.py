"""15-minute traffic counts from vehicles detected on a masked road segment.

Vehicles seen on a segment of length ``l`` km moving at ``v`` km/h all pass a
fixed point within ``l / v`` hours, so ``N`` detections become
``N * v * (15/60) / l`` vehicles per 15 minutes.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime

from .errors import SpeedUnavailableError, ValidationError
from .ingest import CountRecord, Detection, write_count_history
from .vehicles import LENGTH_CLASSES, Direction, LengthClass, length_class_for_cm

MINUTES_PER_INTERVAL = 15


def vehicle_length_cm(d: Detection) -> float:
    # longer bbox edge; underestimates vehicles lying diagonally in the box
    return max(d.width_px, d.height_px) * d.gsd_m_per_px * 100.0


def classify_length(d: Detection) -> LengthClass:
    return length_class_for_cm(vehicle_length_cm(d))


@dataclass(frozen=True)
class CountEstimate:
    counts_15min: dict  # LengthClass -> vehicles per 15 minutes
    speed_used_kmh: float
    segment_length_km: float
    n_detected: dict  # LengthClass -> int

    @property
    def total_15min(self) -> float:
        return sum(self.counts_15min[c] for c in LENGTH_CLASSES)

    def to_record(self, timestamp: datetime, site_id: str, direction: Direction) -> CountRecord:
        """Same shape as a ground-truth row, so both feed the AADT model alike."""
        return CountRecord(
            timestamp=timestamp.replace(minute=timestamp.minute - timestamp.minute % 15, second=0, microsecond=0),
            site_id=site_id,
            direction=direction,
            counts=dict(self.counts_15min),
            total=self.total_15min,
            mean_speed_kmh=self.speed_used_kmh,
        )


def flow_per_vehicle(speed_kmh: float, segment_length_km: float) -> float:
    """15-minute flow represented by one vehicle seen on the segment."""
    return speed_kmh * (MINUTES_PER_INTERVAL / 60.0) / segment_length_km


def _speed_value(speed) -> float:
    # accepts a number or a SpeedEstimate-like object
    if speed is None:
        raise SpeedUnavailableError("no speed available; supply a historical speed for this site")
    if hasattr(speed, "mean_speed_kmh"):
        if speed.mean_speed_kmh is None:
            raise SpeedUnavailableError(
                "live speed estimation failed (no vehicle pairs); supply a historical speed for this site")
        speed = speed.mean_speed_kmh
    speed = float(speed)
    if not speed >= 0:
        raise ValidationError(f"speed must be non-negative, got {speed}")
    return speed


def estimate_counts(detections, speed_kmh, segment_length_km: float) -> CountEstimate:
    if not segment_length_km > 0:
        raise ValidationError(f"segment_length_km must be positive, got {segment_length_km}")
    speed = _speed_value(speed_kmh)
    n_detected = {c: 0 for c in LENGTH_CLASSES}
    for d in detections:
        n_detected[classify_length(d)] += 1
    per_vehicle = flow_per_vehicle(speed, segment_length_km)
    counts = {c: n_detected[c] * per_vehicle for c in LENGTH_CLASSES}
    return CountEstimate(counts, speed, segment_length_km, n_detected)


def write_count_estimates(path, estimates) -> None:
    """``estimates`` is an iterable of ``(CountEstimate, timestamp, site_id, direction)``."""
    write_count_history(path, [e.to_record(ts, site, direction) for e, ts, site, direction in estimates])
