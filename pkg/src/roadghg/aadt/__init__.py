"""Per-site networks mapping 15-minute features to LA AADT per vehicle type."""
from .features import (
    COUNT_FEATURES,
    FEATURE_NAMES,
    FeatureVector,
    MinMaxParams,
    build_features,
    feature_matrix,
    fit_minmax,
)
from .model import (
    ModelWeights,
    aggregate_directions,
    derive_la_target,
    load_weights,
    predict,
    predict_array,
    save_weights,
    weights_filename,
)
from .training import (
    EarlyStopping,
    TrainConfig,
    TrainingLog,
    la_targets_for,
    retarget_road_type,
    train,
    train_for_road_type,
)

__all__ = [
    "COUNT_FEATURES", "FEATURE_NAMES", "EarlyStopping", "FeatureVector", "MinMaxParams", "ModelWeights",
    "TrainConfig", "TrainingLog", "aggregate_directions", "build_features", "derive_la_target",
    "feature_matrix", "fit_minmax", "la_targets_for", "load_weights", "predict", "predict_array",
    "retarget_road_type", "save_weights", "train", "train_for_road_type", "weights_filename",
]
