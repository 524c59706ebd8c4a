from __future__ import annotations

import math
from dataclasses import dataclass, field

from .blobs import Blob, BlobThresholds, Polarity, detect_moving_objects
from .change import build_change_image
from .raster import DualBandRaster

MPH_TO_MPS = 1609.344 / 3600.0
# a car is not expected to exceed the UK motorway limit between the two exposures
DEFAULT_MAX_SPEED_MPH = 70.0


def default_max_displacement_m(time_lag_s: float = 0.26, max_speed_mph: float = DEFAULT_MAX_SPEED_MPH) -> float:
    return max_speed_mph * MPH_TO_MPS * time_lag_s


def _distance_px(a: Blob, b: Blob) -> float:
    return math.hypot(a.centroid[0] - b.centroid[0], a.centroid[1] - b.centroid[1])


def pair_blobs(blobs, max_displacement_m: float, gsd: float) -> list[tuple[Blob, Blob]]:
    """Greedy nearest-first matching of bright to dark blobs.

    Candidate pairs within ``max_displacement_m`` are accepted in order of
    increasing distance; each blob is used at most once.
    """
    if not max_displacement_m > 0:
        raise ValueError(f"max_displacement_m must be positive, got {max_displacement_m}")
    bright = [b for b in blobs if b.polarity is Polarity.BRIGHT]
    dark = [b for b in blobs if b.polarity is Polarity.DARK]
    candidates = []
    for i, b in enumerate(bright):
        for j, d in enumerate(dark):
            dist = _distance_px(b, d) * gsd
            if dist <= max_displacement_m:
                candidates.append((dist, i, j))
    candidates.sort()
    used_b, used_d, pairs = set(), set(), []
    for _, i, j in candidates:
        if i in used_b or j in used_d:
            continue
        used_b.add(i)
        used_d.add(j)
        pairs.append((bright[i], dark[j]))
    return pairs


@dataclass(frozen=True)
class SpeedEstimate:
    """Mean live speed; ``mean_speed_kmh`` is None when no pair was formed."""

    mean_speed_kmh: float | None
    pair_count: int
    pair_displacements_m: tuple[float, ...] = ()
    n_bright: int = 0
    n_dark: int = 0
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def failed(self) -> bool:
        return self.pair_count == 0

    @property
    def status(self) -> str:
        return "failed" if self.failed else "ok"


def estimate_speed(pairs, gsd: float, time_lag_s: float, n_bright: int = 0, n_dark: int = 0) -> SpeedEstimate:
    if not time_lag_s > 0:
        raise ValueError(f"time_lag_s must be positive, got {time_lag_s}")
    displacements = tuple(_distance_px(b, d) * gsd for b, d in pairs)
    if not displacements:
        return SpeedEstimate(None, 0, (), n_bright, n_dark)
    speeds = [m / time_lag_s * 3.6 for m in displacements]
    return SpeedEstimate(sum(speeds) / len(speeds), len(displacements), displacements, n_bright, n_dark)


def estimate_live_speed(
    raster: DualBandRaster,
    thresholds: BlobThresholds | None = None,
    max_displacement_m: float | None = None,
) -> SpeedEstimate:
    """Change image, blob detection, pairing and speed in one call."""
    if max_displacement_m is None:
        max_displacement_m = default_max_displacement_m(raster.time_lag_s)
    blobs = detect_moving_objects(build_change_image(raster), thresholds)
    pairs = pair_blobs(blobs, max_displacement_m, raster.gsd_m_per_px)
    n_bright = sum(b.polarity is Polarity.BRIGHT for b in blobs)
    return estimate_speed(pairs, raster.gsd_m_per_px, raster.time_lag_s, n_bright, len(blobs) - n_bright)
