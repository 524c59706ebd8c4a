"""Error metrics and the evaluation report tables.

Pairs are ``(predicted, truth)``, either plain tuples or ``EvalPair``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .vehicles import VEHICLE_TYPES, AADTVector


@dataclass(frozen=True)
class EvalPair:
    predicted: float
    truth: float
    label: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.predicted) and math.isfinite(self.truth)):
            raise ValidationError(f"non-finite evaluation pair {self}")

    def __iter__(self):
        return iter((self.predicted, self.truth))


def _arrays(pairs) -> tuple[np.ndarray, np.ndarray]:
    rows = [tuple(p)[:2] for p in pairs]
    if not rows:
        raise ValidationError("no evaluation pairs")
    arr = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValidationError("evaluation pairs must be finite")
    return arr[:, 0], arr[:, 1]


def rmse(pairs) -> float:
    pred, truth = _arrays(pairs)
    return math.sqrt(float(np.mean((pred - truth) ** 2)))


@dataclass(frozen=True)
class MAPEResult:
    value: float
    n_used: int
    n_excluded: int


def mape_detail(pairs) -> MAPEResult:
    """MAPE over pairs with non-zero truth; zero-truth pairs are counted, not used."""
    pred, truth = _arrays(pairs)
    used = truth != 0
    if not used.any():
        raise ValidationError("every truth value is zero; MAPE is undefined")
    value = float(np.mean(np.abs(pred[used] - truth[used]) / np.abs(truth[used])))
    return MAPEResult(value, int(used.sum()), int((~used).sum()))


def mape(pairs) -> float:
    return mape_detail(pairs).value


def mape_arrays(pred, truth) -> float:
    """Array form used for training logs; NaN when every truth is zero."""
    pred = np.asarray(pred, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    used = truth != 0
    if not used.any():
        return float("nan")
    return float(np.mean(np.abs(pred[used] - truth[used]) / np.abs(truth[used])))


def r_squared(pairs) -> float:
    pred, truth = _arrays(pairs)
    if len(truth) < 2:
        raise ValidationError("R^2 needs at least 2 pairs")
    ss_tot = float(np.sum((truth - truth.mean()) ** 2))
    if ss_tot == 0:
        raise ValidationError("truth values have zero variance; R^2 is undefined")
    return 1.0 - float(np.sum((truth - pred) ** 2)) / ss_tot


# -- reports -----------------------------------------------------------------------

@dataclass
class LAResult:
    la_name: str
    road_type: str
    aadt_pred: AADTVector
    aadt_true: AADTVector
    ghg_pred: float  # kg CO2e / year, all vehicle types
    ghg_true: float
    directions: dict = field(default_factory=dict)  # label -> AADTVector


@dataclass
class RunResults:
    count_pairs: dict = field(default_factory=dict)  # site label -> list of (pred, truth)
    la_results: list = field(default_factory=list)
    sparse_share: float = 0.02


def _row(label, group, pairs) -> dict:
    m = mape_detail(pairs)
    return {"label": label, "group": group, "rmse": rmse(pairs), "mape": m.value, "n_excluded": m.n_excluded}


def with_average(rows: list[dict], group_key: str = "group") -> list[dict]:
    """Append one unweighted AVERAGE row per group."""
    out = list(rows)
    for group in dict.fromkeys(r[group_key] for r in rows):
        members = [r for r in rows if r[group_key] == group]
        out.append({
            "label": "AVERAGE", "group": group,
            "rmse": float(np.mean([r["rmse"] for r in members])),
            "mape": float(np.mean([r["mape"] for r in members])),
            "n_excluded": sum(r["n_excluded"] for r in members),
        })
    return out


def _per_type_pairs(pred, truth):
    return [(pred[v], truth[v]) for v in VEHICLE_TYPES]


def count_table(count_pairs) -> list[dict]:
    return with_average([_row(site, "", pairs) for site, pairs in count_pairs.items()])


def aadt_table(la_results) -> list[dict]:
    return with_average([
        _row(r.la_name, r.road_type, _per_type_pairs(r.aadt_pred, r.aadt_true)) for r in la_results
    ])


def ghg_table(la_results) -> list[dict]:
    return with_average([_row(r.la_name, r.road_type, [(r.ghg_pred, r.ghg_true)]) for r in la_results])


def scatter_rows(la_results) -> list[dict]:
    return [{
        "la": r.la_name, "road_type": r.road_type,
        "aadt_pred": r.aadt_pred.total, "aadt_true": r.aadt_true.total,
        "ghg_pred": r.ghg_pred, "ghg_true": r.ghg_true,
    } for r in la_results]


def vehicle_type_mape_rows(la_results, sparse_share: float = 0.02) -> list[dict]:
    """Per-type AADT MAPE; types whose true share is below ``sparse_share`` are flagged excluded."""
    rows = []
    for road_type in dict.fromkeys(r.road_type for r in la_results):
        group = [r for r in la_results if r.road_type == road_type]
        for v in VEHICLE_TYPES:
            pairs = [(r.aadt_pred[v], r.aadt_true[v]) for r in group]
            shares = [r.aadt_true[v] / r.aadt_true.total for r in group if r.aadt_true.total > 0]
            sparse = bool(shares) and float(np.mean(shares)) < sparse_share
            try:
                value = mape(pairs)
            except ValidationError:
                value, sparse = float("nan"), True
            rows.append({"road_type": road_type, "vehicle_type": v.value, "mape": value, "excluded": sparse})
    return rows


def direction_rows(la_results) -> list[dict]:
    rows = []
    for r in la_results:
        for label, vec in r.directions.items():
            rows.append({"la": r.la_name, "road_type": r.road_type, "site": label,
                         **{v.value: vec[v] for v in VEHICLE_TYPES}})
    return rows


def write_rows(path, rows: list[dict], columns=None) -> Path:
    path = Path(path)
    columns = columns or (list(rows[0]) if rows else [])
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return path


def report(results: RunResults, out_dir) -> dict:
    """Write every table and plot-data file; returns name -> path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    metric_cols = ["label", "group", "rmse", "mape", "n_excluded"]
    if results.count_pairs:
        rows = count_table(results.count_pairs)
        paths["counts"] = write_rows(out / "counts_table.csv", rows, ["label", "rmse", "mape", "n_excluded"])
    if results.la_results:
        paths["aadt"] = write_rows(out / "aadt_table.csv", aadt_table(results.la_results), metric_cols)
        paths["ghg"] = write_rows(out / "ghg_table.csv", ghg_table(results.la_results), metric_cols)
        paths["scatter"] = write_rows(
            out / "scatter.csv", scatter_rows(results.la_results),
            ["la", "road_type", "aadt_pred", "aadt_true", "ghg_pred", "ghg_true"])
        paths["vehicle_type_mape"] = write_rows(
            out / "vehicle_type_mape.csv", vehicle_type_mape_rows(results.la_results, results.sparse_share),
            ["road_type", "vehicle_type", "mape", "excluded"])
        drows = direction_rows(results.la_results)
        if drows:
            paths["directions"] = write_rows(
                out / "aadt_directions.csv", drows, ["la", "road_type", "site", *(v.value for v in VEHICLE_TYPES)])
    return paths


def format_table(rows: list[dict], columns) -> str:
    """Fixed-width text rendering for terminal output."""
    def cell(v):
        return f"{v:.4g}" if isinstance(v, float) else str(v)

    body = [[cell(r.get(c, "")) for c in columns] for r in rows]
    widths = [max(len(c), *(len(b[i]) for b in body)) if body else len(c) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(b, widths)) for b in body]
    return "\n".join(lines)
