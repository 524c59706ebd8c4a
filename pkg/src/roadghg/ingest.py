"""Readers, writers and validators for every external input.

File formats
------------
Detections (JSON)::

    {"meta": {"site_id": ..., "la_name": ..., "direction": "A",
              "acquisition_timestamp": "2018-06-12T11:05:00Z",
              "segment_length_km": 1.2, "gsd_m_per_px": 0.31,
              "band_time_lag_s": 0.26},
     "detections": [{"bbox": [x_min, x_max, y_min, y_max],
                     "class": "Small car", "confidence": 0.9}, ...]}

Count history (CSV) with header ``COUNT_HEADER``; an empty cell is a
missing value.

Factors (CSV) with header ``table,key,subkey,value,vintage`` where
``table`` is one of ``FACTOR_TABLES``.

LA ground truth (CSV) with header ``LA_TRUTH_HEADER``; ``ghg_kgco2e`` may
be empty.
"""
from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

from .errors import ParseError, SchemaError, ValidationError
from .vehicles import (
    LENGTH_CLASSES,
    AADTVector,
    Direction,
    LengthClass,
    RoadType,
    VehicleType,
    VEHICLE_TYPES,
)

DEFAULT_BAND_TIME_LAG_S = 0.26
# detector confidence cut-off applied before counting; not validated against imagery
DEFAULT_CONFIDENCE_THRESHOLD = 0.25

COUNT_HEADER = [
    "timestamp", "site_id", "direction",
    "small", "medium", "large", "very_large", "total", "mean_speed_kmh",
]
FACTOR_HEADER = ["table", "key", "subkey", "value", "vintage"]
FACTOR_TABLES = ("road_length_km", "conversion_kgco2e_per_litre", "fuel_km_per_litre", "fuel_mix")
LA_TRUTH_HEADER = ["la", "year", "road_type", *(v.value for v in VEHICLE_TYPES), "ghg_kgco2e"]

_META_FIELDS = (
    "site_id", "la_name", "direction", "acquisition_timestamp",
    "segment_length_km", "gsd_m_per_px",
)


# -- detections ---------------------------------------------------------------

@dataclass(frozen=True)
class Detection:
    bbox: tuple[float, float, float, float]  # x_min, x_max, y_min, y_max (pixels)
    source_class: str
    confidence: float
    gsd_m_per_px: float

    def __post_init__(self):
        x_min, x_max, y_min, y_max = self.bbox
        if not x_min < x_max:
            raise ValidationError(f"bbox invariant x_min < x_max violated: {x_min} >= {x_max}")
        if not y_min < y_max:
            raise ValidationError(f"bbox invariant y_min < y_max violated: {y_min} >= {y_max}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError(f"confidence must be in [0, 1], got {self.confidence}")
        if not self.gsd_m_per_px > 0:
            raise ValidationError(f"gsd_m_per_px must be positive, got {self.gsd_m_per_px}")

    @property
    def width_px(self) -> float:
        return self.bbox[1] - self.bbox[0]

    @property
    def height_px(self) -> float:
        return self.bbox[3] - self.bbox[2]


@dataclass(frozen=True)
class ImageMeta:
    acquisition_timestamp: datetime
    site_id: str
    la_name: str
    direction: Direction
    segment_length_km: float
    gsd_m_per_px: float
    band_time_lag_s: float = DEFAULT_BAND_TIME_LAG_S

    def __post_init__(self):
        if not self.segment_length_km > 0:
            raise ValidationError(f"segment_length_km must be positive, got {self.segment_length_km}")
        if not self.gsd_m_per_px > 0:
            raise ValidationError(f"gsd_m_per_px must be positive, got {self.gsd_m_per_px}")
        if not self.band_time_lag_s > 0:
            raise ValidationError(f"band_time_lag_s must be positive, got {self.band_time_lag_s}")

    def to_json(self) -> dict:
        ts = self.acquisition_timestamp.astimezone(timezone.utc)
        return {
            "site_id": self.site_id,
            "la_name": self.la_name,
            "direction": self.direction.value,
            "acquisition_timestamp": ts.strftime("%Y-%m-%dT%H:%M:%SZ"),
            "segment_length_km": self.segment_length_km,
            "gsd_m_per_px": self.gsd_m_per_px,
            "band_time_lag_s": self.band_time_lag_s,
        }


def _parse_utc(text: str) -> datetime:
    ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def _record_lines(text: str) -> list[int]:
    """Line number at which each element of the ``detections`` array starts."""
    match = re.search(r'"detections"\s*:\s*\[', text)
    if match is None:
        return []
    decoder = json.JSONDecoder()
    pos, lines = match.end(), []
    while True:
        while pos < len(text) and text[pos] in " \t\r\n,":
            pos += 1
        if pos >= len(text) or text[pos] == "]":
            return lines
        lines.append(text.count("\n", 0, pos) + 1)
        _, pos = decoder.raw_decode(text, pos)


def parse_detections(path) -> tuple[list[Detection], ImageMeta]:
    path = Path(path)
    text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, path=path) from exc
    if not isinstance(doc, dict) or "meta" not in doc or "detections" not in doc:
        raise SchemaError(f"{path}: document needs top-level 'meta' and 'detections'")

    raw_meta = doc["meta"]
    missing = [k for k in _META_FIELDS if k not in raw_meta]
    if missing:
        raise SchemaError(f"{path}: meta is missing field(s) {missing}")
    try:
        meta = ImageMeta(
            acquisition_timestamp=_parse_utc(str(raw_meta["acquisition_timestamp"])),
            site_id=str(raw_meta["site_id"]),
            la_name=str(raw_meta["la_name"]),
            direction=Direction(raw_meta["direction"]),
            segment_length_km=float(raw_meta["segment_length_km"]),
            gsd_m_per_px=float(raw_meta["gsd_m_per_px"]),
            band_time_lag_s=float(raw_meta.get("band_time_lag_s", DEFAULT_BAND_TIME_LAG_S)),
        )
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"{path}: invalid meta: {exc}") from exc

    lines = _record_lines(text)
    detections = []
    for i, rec in enumerate(doc["detections"]):
        line = lines[i] if i < len(lines) else None
        try:
            bbox = tuple(float(v) for v in rec["bbox"])
            if len(bbox) != 4:
                raise ValidationError(f"bbox needs 4 values, got {len(bbox)}")
            detections.append(Detection(
                bbox=bbox,
                source_class=str(rec["class"]),
                confidence=float(rec["confidence"]),
                gsd_m_per_px=meta.gsd_m_per_px,
            ))
        except KeyError as exc:
            raise ParseError(f"detection {i}: missing field {exc}", line=line, path=path) from exc
        except (ValueError, TypeError) as exc:
            raise ParseError(f"detection {i}: {exc}", line=line, path=path) from exc
    return detections, meta


def write_detections(path, detections: list[Detection], meta: ImageMeta) -> None:
    # one record per line so parse errors can point at a line
    body = ",\n".join(
        "  " + json.dumps({"bbox": list(d.bbox), "class": d.source_class, "confidence": d.confidence})
        for d in detections
    )
    text = '{"meta": ' + json.dumps(meta.to_json(), sort_keys=True) + ',\n"detections": [\n'
    text += body + ("\n" if body else "") + "]}\n"
    Path(path).write_text(text)


def filter_confident(detections, threshold: float = DEFAULT_CONFIDENCE_THRESHOLD) -> list[Detection]:
    return [d for d in detections if d.confidence >= threshold]


# -- count history --------------------------------------------------------------

@dataclass(frozen=True)
class CountRecord:
    """One 15-minute observation. ``None`` marks a missing field."""

    timestamp: datetime
    site_id: str
    direction: Direction
    counts: dict  # LengthClass -> count or None
    total: float | None
    mean_speed_kmh: float | None
    line: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.timestamp.minute not in (0, 15, 30, 45) or self.timestamp.second or self.timestamp.microsecond:
            raise ValidationError(f"timestamp {self.timestamp} is not on a 15-minute boundary")
        for cls in LENGTH_CLASSES:
            v = self.counts.get(cls)
            if v is not None and v < 0:
                raise ValidationError(f"negative {cls.column} count {v}")
        if self.total is not None and self.total < 0:
            raise ValidationError(f"negative total {self.total}")
        if self.mean_speed_kmh is not None and self.mean_speed_kmh < 0:
            raise ValidationError(f"negative mean speed {self.mean_speed_kmh}")
        if not self.missing:
            s = sum(self.counts[c] for c in LENGTH_CLASSES)
            if not math.isclose(s, self.total, rel_tol=1e-9, abs_tol=1e-9):
                raise ValidationError(f"counts sum to {s} but total is {self.total}")

    @property
    def missing(self) -> bool:
        return (
            self.total is None
            or self.mean_speed_kmh is None
            or any(self.counts.get(c) is None for c in LENGTH_CLASSES)
        )


def _cell(text: str, convert):
    text = text.strip()
    return None if text == "" else convert(text)


def _int_count(text: str) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError(f"count {text!r} is not an integer")
    return int(value)


def _parse_local(text: str) -> datetime:
    ts = datetime.fromisoformat(text.strip())
    if ts.tzinfo is not None:
        raise ValueError("count timestamps are timezone-naive local time")
    return ts


def parse_count_history(path, allow_fractional: bool = False) -> list[CountRecord]:
    """Read a count file. Rows with empty cells are kept and flagged ``missing``.

    ``allow_fractional`` accepts real-valued counts, as written for
    estimated counts.
    """
    path = Path(path)
    count = float if allow_fractional else _int_count
    records = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != COUNT_HEADER:
            raise SchemaError(f"{path}: header must be {','.join(COUNT_HEADER)}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(COUNT_HEADER):
                raise ParseError(f"expected {len(COUNT_HEADER)} fields, got {len(row)}", line, path)
            try:
                ts = _parse_local(row[0])
            except ValueError as exc:
                raise ParseError(f"unparseable timestamp {row[0]!r}", line, path) from exc
            try:
                counts = {cls: _cell(row[3 + i], count) for i, cls in enumerate(LENGTH_CLASSES)}
                records.append(CountRecord(
                    timestamp=ts,
                    site_id=row[1].strip(),
                    direction=Direction(row[2].strip()),
                    counts=counts,
                    total=_cell(row[7], count),
                    mean_speed_kmh=_cell(row[8], float),
                    line=line,
                ))
            except ValueError as exc:
                raise ParseError(f"row {line}: {exc}", line, path) from exc
    records.sort(key=lambda r: r.timestamp)
    return records


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, int) or (isinstance(value, float) and value.is_integer() and abs(value) < 1e15):
        return str(int(value))
    return repr(float(value))


def count_rows(records) -> list[list[str]]:
    rows = []
    for r in records:
        rows.append([
            r.timestamp.strftime("%Y-%m-%dT%H:%M"), r.site_id, r.direction.value,
            *(_fmt(r.counts.get(c)) for c in LENGTH_CLASSES),
            _fmt(r.total), _fmt(r.mean_speed_kmh),
        ])
    return rows


def write_count_history(path, records) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COUNT_HEADER)
        writer.writerows(count_rows(records))


@dataclass(frozen=True)
class SiteReport:
    n_records: int
    n_missing: int
    missing_fraction: float
    usable: bool
    max_missing_fraction: float = 0.10


def validate_site(records, max_missing_fraction: float = 0.10) -> SiteReport:
    """Flag a site unusable when more than 10% of its rows have missing values."""
    records = list(records)
    if not records:
        raise ValidationError("cannot validate a site with no records")
    n_missing = sum(r.missing for r in records)
    fraction = n_missing / len(records)
    return SiteReport(len(records), n_missing, fraction, fraction <= max_missing_fraction, max_missing_fraction)


# -- emissions factors ------------------------------------------------------------

@dataclass(frozen=True)
class EmissionsFactors:
    road_length_km: dict  # (la_name, RoadType) -> km
    conversion_kgco2e_per_litre: dict  # fuel -> kg CO2e / litre
    fuel_km_per_litre: dict  # (VehicleType, fuel) -> km / litre
    fuel_mix: dict  # fuel -> fraction of fleet
    vintage: dict = field(default_factory=dict, compare=False)  # (table, key, subkey) -> year text

    def __post_init__(self):
        for name in FACTOR_TABLES:
            for key, value in getattr(self, name).items():
                if not value > 0:
                    raise ValidationError(f"{name}[{key}] must be positive, got {value}")
        mix = sum(self.fuel_mix.values())
        if mix > 1.0 + 1e-12:
            raise ValidationError(f"fuel_mix fractions sum to {mix} > 1")

    @property
    def fuel_mix_residual(self) -> float:
        return 1.0 - sum(self.fuel_mix.values())

    def fuels_for(self, vtype: VehicleType) -> list[str]:
        return sorted(fuel for (vt, fuel) in self.fuel_km_per_litre if vt == vtype)


def _read_factor_rows(path: Path, text: str):
    reader = csv.reader(io.StringIO(text))
    header = None
    for row in reader:
        line = reader.line_num
        if not row or row[0].lstrip().startswith("#"):
            continue
        if header is None:
            header = [h.strip() for h in row]
            if header[:4] != FACTOR_HEADER[:4]:
                raise SchemaError(f"{path}: header must start with {','.join(FACTOR_HEADER[:4])}")
            continue
        row = [c.strip() for c in row] + [""] * (len(FACTOR_HEADER) - len(row))
        yield line, row


def parse_factors(path=None) -> EmissionsFactors:
    """Read a factor table; ``None`` loads the bundled defaults."""
    if path is None:
        text = resources.files("roadghg").joinpath("data/factors_default.csv").read_text()
        path = Path("<bundled factors_default.csv>")
    else:
        path = Path(path)
        text = path.read_text()
    tables = {name: {} for name in FACTOR_TABLES}
    vintage = {}
    for line, (table, key, subkey, value, vint, *_) in _read_factor_rows(path, text):
        if table not in tables:
            raise ParseError(f"unknown factor table {table!r}; expected one of {FACTOR_TABLES}", line, path)
        try:
            number = float(value)
        except ValueError as exc:
            raise ParseError(f"factor value {value!r} is not a number", line, path) from exc
        if not number > 0:
            raise ParseError(f"{table}[{key},{subkey}] must be positive, got {number}", line, path)
        try:
            if table == "road_length_km":
                k = (key, RoadType.parse(subkey))
            elif table == "fuel_km_per_litre":
                k = (VehicleType(key), subkey.lower())
            else:
                k = key.lower()
        except ValueError as exc:
            raise ParseError(str(exc), line, path) from exc
        if k in tables[table]:
            raise ParseError(f"duplicate entry {table}[{key},{subkey}]", line, path)
        tables[table][k] = number
        if vint:
            vintage[(table, key, subkey)] = vint
    try:
        return EmissionsFactors(vintage=vintage, **tables)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def write_factors(path, factors: EmissionsFactors) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FACTOR_HEADER)
        for (la, road), v in factors.road_length_km.items():
            writer.writerow(["road_length_km", la, road.value, repr(v), factors.vintage.get(("road_length_km", la, road.value), "")])
        for fuel, v in factors.conversion_kgco2e_per_litre.items():
            writer.writerow(["conversion_kgco2e_per_litre", fuel, "", repr(v), factors.vintage.get(("conversion_kgco2e_per_litre", fuel, ""), "")])
        for (vt, fuel), v in factors.fuel_km_per_litre.items():
            writer.writerow(["fuel_km_per_litre", vt.value, fuel, repr(v), factors.vintage.get(("fuel_km_per_litre", vt.value, fuel), "")])
        for fuel, v in factors.fuel_mix.items():
            writer.writerow(["fuel_mix", fuel, "", repr(v), factors.vintage.get(("fuel_mix", fuel, ""), "")])


# -- LA ground truth ----------------------------------------------------------------

@dataclass(frozen=True)
class LATruth:
    la_name: str
    year: int
    road_type: RoadType
    aadt: AADTVector
    ghg_kgco2e: float | None = None


def parse_la_truth(path) -> list[LATruth]:
    path = Path(path)
    out = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != LA_TRUTH_HEADER:
            raise SchemaError(f"{path}: header must be {','.join(LA_TRUTH_HEADER)}")
        for row in reader:
            if not row:
                continue
            line = reader.line_num
            if len(row) != len(LA_TRUTH_HEADER):
                raise ParseError(f"expected {len(LA_TRUTH_HEADER)} fields, got {len(row)}", line, path)
            try:
                out.append(LATruth(
                    la_name=row[0].strip(),
                    year=int(row[1]),
                    road_type=RoadType.parse(row[2]),
                    aadt=AADTVector.from_sequence(row[3:7]),
                    ghg_kgco2e=_cell(row[7], float),
                ))
            except ValueError as exc:
                raise ParseError(str(exc), line, path) from exc
    return out


def write_la_truth(path, rows) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LA_TRUTH_HEADER)
        for t in rows:
            writer.writerow([t.la_name, t.year, t.road_type.value, *(_fmt(v) for v in t.aadt.as_tuple()), _fmt(t.ghg_kgco2e)])


def truth_lookup(rows) -> dict:
    """Index ground-truth rows by ``(la_name, year, RoadType)``."""
    return {(t.la_name, t.year, t.road_type): t for t in rows}
