"""Dual-band raster container and its on-disk format.

Binary layout (little-endian)::

    offset  size  field
    0       4     magic b"DBR1"
    4       4     uint32 rows
    8       4     uint32 cols
    12      4     uint32 bands (always 2)
    16      ...   float32 band_a, row-major, rows*cols values
    ...     ...   float32 band_b, row-major, rows*cols values

A JSON sidecar ``<file>.json`` carries ``gsd_m_per_px`` and ``time_lag_s``.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ParseError, ValidationError

MAGIC = b"DBR1"
_HEADER = struct.Struct("<4sIII")


@dataclass(frozen=True, eq=False)
class DualBandRaster:
    band_a: np.ndarray
    band_b: np.ndarray
    gsd_m_per_px: float
    time_lag_s: float = 0.26

    def __post_init__(self):
        a = np.asarray(self.band_a, dtype=np.float64)
        b = np.asarray(self.band_b, dtype=np.float64)
        if a.ndim != 2 or a.shape != b.shape:
            raise ValidationError(f"bands must be 2-D with equal shapes, got {a.shape} and {b.shape}")
        if not self.gsd_m_per_px > 0:
            raise ValidationError(f"gsd_m_per_px must be positive, got {self.gsd_m_per_px}")
        if not self.time_lag_s > 0:
            raise ValidationError(f"time_lag_s must be positive, got {self.time_lag_s}")
        object.__setattr__(self, "band_a", a)
        object.__setattr__(self, "band_b", b)

    @property
    def shape(self) -> tuple[int, int]:
        return self.band_a.shape

    def swapped(self) -> "DualBandRaster":
        return DualBandRaster(self.band_b, self.band_a, self.gsd_m_per_px, self.time_lag_s)


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_raster(path, raster: DualBandRaster) -> None:
    path = Path(path)
    rows, cols = raster.shape
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, rows, cols, 2))
        fh.write(raster.band_a.astype("<f4").tobytes(order="C"))
        fh.write(raster.band_b.astype("<f4").tobytes(order="C"))
    sidecar_path(path).write_text(json.dumps(
        {"gsd_m_per_px": raster.gsd_m_per_px, "time_lag_s": raster.time_lag_s}, sort_keys=True) + "\n")


def read_raster(path) -> DualBandRaster:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read raster: {exc}", path=path) from exc
    if len(data) < _HEADER.size:
        raise ParseError("truncated raster header", path=path)
    magic, rows, cols, bands = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ParseError(f"bad magic {magic!r}", path=path)
    if bands != 2:
        raise ParseError(f"expected 2 bands, got {bands}", path=path)
    n = rows * cols
    expected = _HEADER.size + 2 * 4 * n
    if len(data) != expected:
        raise ParseError(f"raster body is {len(data)} bytes, expected {expected}", path=path)
    values = np.frombuffer(data, dtype="<f4", offset=_HEADER.size).astype(np.float64)
    try:
        meta = json.loads(sidecar_path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"missing or invalid sidecar: {exc}", path=path) from exc
    return DualBandRaster(
        values[:n].reshape(rows, cols),
        values[n:].reshape(rows, cols),
        gsd_m_per_px=float(meta["gsd_m_per_px"]),
        time_lag_s=float(meta.get("time_lag_s", 0.26)),
    )
