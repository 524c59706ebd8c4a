"""Moving-object blobs in a PCA change image and their shape measures."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ._backend import component_stats, label_components


_TIE_RTOL = 1e-9


class Polarity(str, enum.Enum):
    BRIGHT = "bright"
    DARK = "dark"

    @property
    def opposite(self) -> "Polarity":
        return Polarity.DARK if self is Polarity.BRIGHT else Polarity.BRIGHT


@dataclass(frozen=True)
class Blob:
    centroid: tuple[float, float]  # (row, col) in pixels
    area_px: int
    perimeter_px: int
    compactness: float
    rectangularity: float
    polarity: Polarity


@dataclass(frozen=True)
class BlobThresholds:
    """Shape filters for vehicle blobs. Defaults were picked on synthetic scenes only."""

    min_area_px: int = 4
    min_compactness: float = 0.3
    min_rectangularity: float = 0.5
    intensity_quantile: float = 0.995

    def __post_init__(self):
        if not 0.0 <= self.intensity_quantile <= 1.0:
            raise ValueError(f"intensity_quantile must be in [0, 1], got {self.intensity_quantile}")


def _convex_hull(points: np.ndarray) -> np.ndarray:
    """Andrew's monotone chain; points is (n, 2) of unique integer corners."""
    pts = sorted(map(tuple, points.tolist()))
    if len(pts) <= 2:
        return np.array(pts, dtype=float)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1], dtype=float)


def min_bounding_rect_area(pixel_rows: np.ndarray, pixel_cols: np.ndarray) -> float:
    """Area of the minimum-area (rotated) rectangle enclosing the pixel squares."""
    r = np.asarray(pixel_rows)
    c = np.asarray(pixel_cols)
    corners = np.concatenate([
        np.stack([r, c], 1), np.stack([r + 1, c], 1),
        np.stack([r, c + 1], 1), np.stack([r + 1, c + 1], 1),
    ])
    hull = _convex_hull(np.unique(corners, axis=0))
    best = np.ptp(hull[:, 0]) * np.ptp(hull[:, 1])
    edges = np.roll(hull, -1, axis=0) - hull
    for dx, dy in edges:
        norm = math.hypot(dx, dy)
        if norm == 0:
            continue
        ux, uy = dx / norm, dy / norm
        along = hull @ np.array([ux, uy])
        across = hull @ np.array([-uy, ux])
        best = min(best, np.ptp(along) * np.ptp(across))
    return float(best)


def _blobs_from_mask(mask: np.ndarray, polarity: Polarity) -> list[Blob]:
    labels, n = label_components(mask)
    if n == 0:
        return []
    stats = component_stats(labels, n)
    blobs = []
    for k in range(n):
        area = int(stats["area"][k])
        perimeter = int(stats["perimeter"][k])
        r0, r1 = stats["row_min"][k], stats["row_max"][k] + 1
        c0, c1 = stats["col_min"][k], stats["col_max"][k] + 1
        rr, cc = np.nonzero(labels[r0:r1, c0:c1] == k + 1)
        rect = min_bounding_rect_area(rr, cc)
        blobs.append(Blob(
            centroid=(stats["sum_row"][k] / area, stats["sum_col"][k] / area),
            area_px=area,
            perimeter_px=perimeter,
            compactness=4.0 * math.pi * area / perimeter**2,
            rectangularity=min(area / rect, 1.0),
            polarity=polarity,
        ))
    return blobs


def intensity_threshold(change_map: np.ndarray, quantile: float) -> float:
    return float(np.quantile(np.abs(change_map), quantile))


def candidate_blobs(change_map, intensity_quantile: float = 0.995) -> list[Blob]:
    """All connected components of the thresholded change map, unfiltered by shape."""
    change = np.asarray(change_map, dtype=np.float64)
    if not np.all(np.isfinite(change)):
        raise ValueError("change map contains non-finite values")
    thr = intensity_threshold(change, intensity_quantile)
    # tied object pixels must survive rounding (e.g. after rescaling); exact zeros are never change
    strong = (np.abs(change) >= thr * (1.0 - _TIE_RTOL)) & (change != 0)
    return (_blobs_from_mask(strong & (change > 0), Polarity.BRIGHT)
            + _blobs_from_mask(strong & (change < 0), Polarity.DARK))


def passes(blob: Blob, thresholds: BlobThresholds) -> bool:
    return (
        blob.area_px >= thresholds.min_area_px
        and blob.compactness >= thresholds.min_compactness
        and blob.rectangularity >= thresholds.min_rectangularity
    )


def detect_moving_objects(change_map, thresholds: BlobThresholds | None = None) -> list[Blob]:
    """Bright and dark vehicle blobs, largest first.

    Bright and dark pixels are labelled separately (8-connectivity), so a
    vehicle that moved less than its own length still yields two blobs.
    """
    thresholds = thresholds or BlobThresholds()
    blobs = [b for b in candidate_blobs(change_map, thresholds.intensity_quantile) if passes(b, thresholds)]
    blobs.sort(key=lambda b: (-b.area_px, b.polarity.value, b.centroid))
    return blobs
