"""Live speed from the band time-lag of a single multispectral image."""
from ._backend import BACKEND
from .blobs import Blob, BlobThresholds, Polarity, detect_moving_objects
from .change import build_change_image
from .estimate import (
    SpeedEstimate,
    default_max_displacement_m,
    estimate_live_speed,
    estimate_speed,
    pair_blobs,
)
from .raster import DualBandRaster, read_raster, write_raster

__all__ = [
    "BACKEND", "Blob", "BlobThresholds", "DualBandRaster", "Polarity", "SpeedEstimate",
    "build_change_image", "default_max_displacement_m", "detect_moving_objects",
    "estimate_live_speed", "estimate_speed", "pair_blobs", "read_raster", "write_raster",
]
