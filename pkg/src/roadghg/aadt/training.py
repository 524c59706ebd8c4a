"""Per-site training with a temporal validation split and early stopping."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DivergenceError, LeakageError, ValidationError
from ..metrics import mape_arrays
from ..vehicles import AADTVector, RoadType
from .features import N_FEATURES, feature_matrix, fit_minmax
from .model import N_OUTPUTS, ModelWeights
from .network import Adam, Layer, forward, init_layers, loss_and_grads, mse

log = logging.getLogger(__name__)

TEST_YEAR = 2018


@dataclass(frozen=True)
class TrainConfig:
    hidden_layers: tuple[int, ...] = (32, 32)
    learning_rate: float = 1e-3
    batch_size: int = 64
    patience: int = 3
    val_fraction: float = 0.1
    max_epochs: int = 200
    seed: int = 0
    test_year: int = TEST_YEAR

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(h) for h in self.hidden_layers))
        if not 0 < self.val_fraction < 1:
            raise ValueError(f"val_fraction must be in (0, 1), got {self.val_fraction}")
        if self.patience < 1 or self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("patience, batch_size and max_epochs must be positive")


class EarlyStopping:
    """Stop once the monitored loss fails to improve for ``patience`` consecutive epochs."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best_loss = math.inf
        self.best_epoch = None
        self.stale = 0

    def update(self, epoch: int, loss: float) -> bool:
        """Record ``loss``; returns True when training should stop."""
        if loss < self.best_loss:
            self.best_loss = loss
            self.best_epoch = epoch
            self.stale = 0
            return False
        self.stale += 1
        return self.stale >= self.patience

    @property
    def improved_last(self) -> bool:
        return self.stale == 0


@dataclass
class TrainingLog:
    epochs: list = field(default_factory=list)
    best_epoch: int | None = None
    stopped_epoch: int | None = None
    stopped_early: bool = False
    n_train: int = 0
    n_val: int = 0
    n_dropped_missing: int = 0
    max_record_year: int | None = None
    date_range: tuple[str, str] = ("", "")

    @property
    def final_val_mape(self) -> float:
        return self.epochs[self.best_epoch - 1]["val_mape"]

    def to_json(self) -> dict:
        return asdict(self)

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n")


def check_leakage(records, test_year: int = TEST_YEAR) -> None:
    leaked = [r for r in records if r.timestamp.year >= test_year]
    if leaked:
        raise LeakageError(
            f"{len(leaked)} record(s) dated {test_year} or later (first: {leaked[0].timestamp}); "
            f"the {test_year}+ period is reserved for testing")


def _target_array(targets, n: int) -> np.ndarray:
    if isinstance(targets, AADTVector):
        return np.tile(np.array(targets.as_tuple(), dtype=np.float64), (n, 1))
    rows = [t.as_tuple() if isinstance(t, AADTVector) else t for t in targets]
    arr = np.asarray(rows, dtype=np.float64)
    if arr.shape != (n, N_OUTPUTS):
        raise ValidationError(f"targets have shape {arr.shape}, expected ({n}, {N_OUTPUTS})")
    return arr


def _standardizer(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mu = a.mean(axis=0)
    sd = a.std(axis=0)
    return mu, np.where(sd > 0, sd, 1.0)


def fold_standardization(layers, x_mu, x_sd, y_mu, y_sd) -> list[Layer]:
    """Absorb input/target standardisation into the first and last layers.

    The returned network takes raw features and emits raw AADT.
    """
    out = [l.copy() for l in layers]
    first = out[0]
    w = first.weights / x_sd[:, None]
    first.bias = first.bias - (x_mu / x_sd) @ first.weights
    first.weights = w
    last = out[-1]
    last.weights = last.weights * y_sd[None, :]
    last.bias = last.bias * y_sd + y_mu
    return out


def train(
    history,
    targets,
    config: TrainConfig = TrainConfig(),
    site_id: str = "",
    la_name: str = "",
    road_type: RoadType = RoadType.MOTORWAYS,
) -> tuple[ModelWeights, TrainingLog]:
    """Fit one site's network by minibatch gradient descent (Adam) on MSE.

    ``targets`` is either one AADTVector for every row or a sequence aligned
    with ``history``. Rows with missing fields are dropped and counted.
    Features and targets are standardised internally and the scaling is
    folded back into the weights, so the saved network consumes raw
    features.
    """
    history = list(history)
    check_leakage(history, config.test_year)
    y_all = _target_array(targets, len(history))
    keep = [i for i, r in enumerate(history) if not r.missing]
    order = sorted(keep, key=lambda i: history[i].timestamp)
    records = [history[i] for i in order]
    y = y_all[order]
    n = len(records)
    n_val = max(1, int(math.ceil(config.val_fraction * n)))
    if n - n_val < 2:
        raise ValidationError(f"need at least {n_val + 2} complete rows to train, got {n}")

    train_recs, val_recs = records[:-n_val], records[-n_val:]
    minmax = fit_minmax(train_recs)
    x_tr, x_va = feature_matrix(train_recs, minmax), feature_matrix(val_recs, minmax)
    y_tr, y_va = y[:-n_val], y[-n_val:]
    x_mu, x_sd = _standardizer(x_tr)
    y_mu, y_sd = _standardizer(y_tr)
    xs_tr, xs_va = (x_tr - x_mu) / x_sd, (x_va - x_mu) / x_sd
    ys_tr, ys_va = (y_tr - y_mu) / y_sd, (y_va - y_mu) / y_sd

    rng = np.random.default_rng(config.seed)
    layers = init_layers([N_FEATURES, *config.hidden_layers, N_OUTPUTS], rng)
    opt = Adam(layers, config.learning_rate)
    stopper = EarlyStopping(config.patience)
    best_layers = [l.copy() for l in layers]
    tlog = TrainingLog(
        n_train=len(train_recs), n_val=n_val, n_dropped_missing=len(history) - n,
        max_record_year=max(r.timestamp.year for r in records),
        date_range=(records[0].timestamp.isoformat(), records[-1].timestamp.isoformat()),
    )

    # overflow is reported as DivergenceError below, not as numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, config.max_epochs + 1):
            perm = rng.permutation(len(xs_tr))
            for start in range(0, len(perm), config.batch_size):
                idx = perm[start:start + config.batch_size]
                _, grads = loss_and_grads(layers, xs_tr[idx], ys_tr[idx])
                opt.step(layers, grads)
            train_loss = mse(forward(layers, xs_tr), ys_tr)
            val_pred = forward(layers, xs_va)
            val_loss = mse(val_pred, ys_va)
            if not (math.isfinite(train_loss) and math.isfinite(val_loss)):
                raise DivergenceError(
                    f"loss became non-finite at epoch {epoch}; last stable epoch {epoch - 1 or None}",
                    last_stable_epoch=epoch - 1 or None)
            val_mape = mape_arrays(val_pred * y_sd + y_mu, y_va)
            tlog.epochs.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss, "val_mape": val_mape})
            log.debug("epoch %d train %.6g val %.6g mape %.4f", epoch, train_loss, val_loss, val_mape)
            stop = stopper.update(epoch, val_loss)
            if stopper.improved_last:
                best_layers = [l.copy() for l in layers]
            if stop:
                tlog.stopped_early = True
                break
    tlog.best_epoch = stopper.best_epoch
    tlog.stopped_epoch = epoch

    weights = ModelWeights(
        layers=fold_standardization(best_layers, x_mu, x_sd, y_mu, y_sd),
        minmax=minmax,
        site_id=site_id,
        la_name=la_name,
        road_type=RoadType(road_type),
        date_range=tlog.date_range,
        seed=config.seed,
        config={k: list(v) if isinstance(v, tuple) else v for k, v in asdict(config).items()},
    )
    return weights, tlog


def la_targets_for(history, truth_rows, la_name: str, road_type: RoadType) -> list[AADTVector]:
    """Per-row targets: the LA's ground-truth AADT for the row's year and road type."""
    index = {(t.la_name, t.year, t.road_type): t.aadt for t in truth_rows}
    out = []
    for r in history:
        key = (la_name, r.timestamp.year, RoadType(road_type))
        if key not in index:
            raise ValidationError(f"no {key[2].value} ground-truth AADT for {la_name} in {key[1]}")
        out.append(index[key])
    return out


def train_for_road_type(history, truth_rows, la_name: str, road_type: RoadType, config: TrainConfig = TrainConfig(),
                        site_id: str = ""):
    """Same pipeline as ``train`` with the target swapped to the LA's AADT on ``road_type``.

    Motorway count data thus learns the mapping to nearby A-road or minor
    road traffic in the same LA.
    """
    history = list(history)
    check_leakage(history, config.test_year)
    targets = la_targets_for(history, truth_rows, la_name, road_type)
    return train(history, targets, config, site_id=site_id, la_name=la_name, road_type=road_type)


retarget_road_type = train_for_road_type
