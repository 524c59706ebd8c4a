"""Trained per-site weights, their file format, and inference."""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ValidationError
from ..vehicles import VEHICLE_TYPES, AADTVector, RoadType
from .features import N_FEATURES, FeatureVector, MinMaxParams
from .network import Layer, check_chain, forward

FORMAT_VERSION = 1
N_OUTPUTS = len(VEHICLE_TYPES)


@dataclass
class ModelWeights:
    layers: list
    minmax: MinMaxParams
    site_id: str
    la_name: str
    road_type: RoadType
    date_range: tuple[str, str] = ("", "")
    seed: int = 0
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        check_chain(self.layers, N_FEATURES, N_OUTPUTS)

    def to_json(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "metadata": {
                "site_id": self.site_id,
                "la_name": self.la_name,
                "road_type": self.road_type.value,
                "date_range": list(self.date_range),
                "seed": self.seed,
                "config": self.config,
                "minmax": self.minmax.to_json(),
                "outputs": [v.value for v in VEHICLE_TYPES],
            },
            "layers": [
                {
                    "activation": layer.activation,
                    "shape": list(layer.weights.shape),
                    "weights": layer.weights.ravel(order="C").tolist(),
                    "bias": layer.bias.tolist(),
                }
                for layer in self.layers
            ],
        }

    @classmethod
    def from_json(cls, doc) -> "ModelWeights":
        version = doc.get("format_version")
        if version != FORMAT_VERSION:
            raise ValidationError(f"unsupported weights format_version {version!r}")
        meta = doc["metadata"]
        layers = [
            Layer(np.array(l["weights"], dtype=np.float64).reshape(l["shape"]), np.array(l["bias"]), l["activation"])
            for l in doc["layers"]
        ]
        return cls(
            layers=layers,
            minmax=MinMaxParams.from_json(meta["minmax"]),
            site_id=meta["site_id"],
            la_name=meta["la_name"],
            road_type=RoadType(meta["road_type"]),
            date_range=tuple(meta.get("date_range", ("", ""))),
            seed=meta.get("seed", 0),
            config=meta.get("config", {}),
        )


def save_weights(path, weights: ModelWeights) -> None:
    # json writes floats with repr(), which round-trips exactly
    Path(path).write_text(json.dumps(weights.to_json(), indent=1, sort_keys=True) + "\n")


def load_weights(path) -> ModelWeights:
    return ModelWeights.from_json(json.loads(Path(path).read_text()))


def weights_filename(site_id: str, road_type: RoadType) -> str:
    safe = "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in site_id)
    return f"{safe}__{road_type.slug}.json"


def predict_array(weights: ModelWeights, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != N_FEATURES:
        raise ValueError(f"expected {N_FEATURES} features, got {x.shape[1]}")
    out = forward(weights.layers, x)
    if np.any(out < 0):
        warnings.warn(f"clamping {int(np.sum(out < 0))} negative AADT output(s) to 0", RuntimeWarning, stacklevel=2)
        out = np.maximum(out, 0.0)
    return out


def predict(weights: ModelWeights, features: FeatureVector, road_type: RoadType | None = None) -> AADTVector:
    """Forward pass for one feature vector.

    Passing ``road_type`` guards against using, say, motorway weights for
    an A-road prediction.
    """
    if road_type is not None and RoadType(road_type) is not weights.road_type:
        raise ValidationError(
            f"weights for {weights.site_id} target {weights.road_type.value}, not {RoadType(road_type).value}")
    x = features.as_array() if isinstance(features, FeatureVector) else np.asarray(features, dtype=np.float64)
    return AADTVector.from_sequence(predict_array(weights, x)[0])


def derive_la_target(site_aadt_by_direction) -> AADTVector:
    """Worst-case LA AADT: per vehicle type, the maximum over sites and directions.

    ``site_aadt_by_direction`` maps ``(site, direction, vehicle_type)`` to AADT.
    """
    best = {}
    for (_, _, vtype), value in site_aadt_by_direction.items():
        key = getattr(vtype, "value", vtype)
        best[key] = max(best.get(key, float("-inf")), float(value))
    missing = [v.value for v in VEHICLE_TYPES if v.value not in best]
    if missing:
        raise ValidationError(f"no site AADT for vehicle type(s) {missing}")
    return AADTVector(**best)


def aggregate_directions(predictions) -> AADTVector:
    predictions = list(predictions)
    if not predictions:
        raise ValidationError("no directional predictions to aggregate")
    arr = np.array([p.as_tuple() for p in predictions], dtype=np.float64)
    return AADTVector.from_sequence(arr.mean(axis=0))
