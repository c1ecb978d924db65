"""
Cross-validated training: one model per fold, Adam on the masked MSE
plus L2 loss, early stopping on the fold's validation MAE.
"""
import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np
import pandas as pd

from autodiff.losses import mse_l2_loss
from autodiff.optim import adam_step
from autodiff.tensor import no_grad
from nettwin.exceptions import FixedOutputWidthError, TrainingError
from nettwin.parallel import map_workers
from nettwin.seeding import derive_seed
from plannet.config import GENERIC_GNN
from plannet.services import new_params, predict
from .crossval import split_cv

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ['fold', 'epoch', 'train_loss', 'val_mae']


@dataclass(frozen=True)
class Standardizer:
    """Target scaling fitted on a fold's training targets."""

    mean: float
    std: float

    @classmethod
    def fit(cls, values):
        values = np.asarray(values, dtype=np.float64)
        values = values[np.isfinite(values)]
        if values.size == 0:
            raise TrainingError("no defined targets to fit the target scaling on")
        std = float(values.std())
        return cls(mean=float(values.mean()), std=std if std > 0 else 1.0)

    def apply(self, values):
        return (np.asarray(values, dtype=np.float64) - self.mean) / self.std

    def invert(self, values):
        return np.asarray(values, dtype=np.float64) * self.std + self.mean


@dataclass
class FoldResult:
    fold: int
    params: object
    standardizer: Standardizer
    best_epoch: int
    best_val_mae: float
    curve: List[tuple] = field(default_factory=list)
    train_indices: List[int] = field(default_factory=list)
    val_indices: List[int] = field(default_factory=list)
    updated_on: List[int] = field(default_factory=list)


@dataclass
class TrainResult:
    folds: List[FoldResult]

    @property
    def curves(self):
        rows = [(f.fold, epoch, loss, mae) for f in self.folds for epoch, loss, mae in f.curve]
        return pd.DataFrame(rows, columns=CURVE_COLUMNS)


def check_output_width(dataset, model_config):
    if model_config.variant != GENERIC_GNN:
        return
    counts = dataset.path_counts()
    if counts != [model_config.output_width]:
        raise FixedOutputWidthError(
            f"generic_gnn predicts exactly {model_config.output_width} paths but the dataset "
            f"has path counts {counts}: the output dimension is predefined")


def validation_mae(dataset, indices, params, model_config, train_config, standardizer):
    truth = dataset.targets(train_config.kpi, indices)
    defined = np.isfinite(truth)
    if not defined.any():
        raise TrainingError("validation fold has no defined targets")
    with no_grad():
        pred = standardizer.invert(predict(dataset.scenarios(indices), params, model_config).values)
    return float(np.mean(np.abs(truth[defined] - pred[defined])))


def train_fold(dataset, train_idx, val_idx, fold, model_config, train_config):
    kpi = train_config.kpi
    train_idx = [int(i) for i in train_idx]
    val_idx = [int(i) for i in val_idx]
    standardizer = Standardizer.fit(dataset.targets(kpi, train_idx))
    params = new_params(model_config, seed=derive_seed(train_config.seed, f'fold{fold}:init'))
    rng = np.random.default_rng(derive_seed(train_config.seed, f'fold{fold}:shuffle'))
    best = None
    best_mae, best_epoch, waited = np.inf, 0, 0
    curve, updated_on = [], set()
    for epoch in range(1, train_config.epochs + 1):
        order = [train_idx[i] for i in rng.permutation(len(train_idx))]
        losses = []
        for start in range(0, len(order), train_config.batch_size):
            batch = order[start:start + train_config.batch_size]
            target = dataset.targets(kpi, batch)
            mask = np.isfinite(target)
            if not mask.any():
                continue
            params.zero_grad()
            pred = predict(dataset.scenarios(batch), params, model_config)
            loss = mse_l2_loss(pred, standardizer.apply(target), mask, params, train_config.l2)
            loss.backward()
            adam_step(params, lr=train_config.lr)
            losses.append(loss.item())
            updated_on.update(batch)
        if not losses:
            raise TrainingError(f"fold {fold} has no defined {kpi} targets to train on")
        val_mae = validation_mae(dataset, val_idx, params, model_config, train_config, standardizer)
        curve.append((epoch, float(np.mean(losses)), val_mae))
        if val_mae < best_mae:
            best, best_mae, best_epoch, waited = params.copy(), val_mae, epoch, 0
        else:
            waited += 1
            if waited >= train_config.patience:
                logger.info(f"Fold {fold}: early stop at epoch {epoch}, best epoch {best_epoch}")
                break
    if best is None:
        raise TrainingError(
            f"fold {fold} never reached a finite validation MAE in {len(curve)} epochs; "
            f"lower the learning rate or check the {kpi} targets")
    leaked = updated_on & set(val_idx)
    if leaked:
        raise TrainingError(f"fold {fold} updated on validation samples {sorted(leaked)}")
    logger.info(f"Fold {fold} finished: best validation MAE {best_mae:.6g} at epoch {best_epoch}")
    return FoldResult(
        fold=fold, params=best, standardizer=standardizer, best_epoch=best_epoch,
        best_val_mae=best_mae, curve=curve, train_indices=train_idx, val_indices=val_idx,
        updated_on=sorted(updated_on))


def _fold_job(job):
    return train_fold(*job)


def train(dataset, model_config, train_config, workers=1):
    """Train one model per cross-validation fold and keep each fold's best checkpoint."""
    if len(dataset) == 0:
        raise TrainingError("cannot train on an empty dataset")
    check_output_width(dataset, model_config)
    splits = split_cv(len(dataset), train_config.folds, train_config.seed)
    jobs = [(dataset, train, val, fold, model_config, train_config)
            for fold, (train, val) in enumerate(splits)]
    folds = map_workers(_fold_job, jobs, workers=workers)
    logger.info(
        f"Trained {len(folds)} {model_config.variant} folds on {train_config.kpi}: "
        f"validation MAE {[round(f.best_val_mae, 6) for f in folds]}")
    return TrainResult(folds=folds)
