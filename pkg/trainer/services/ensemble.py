"""
Fold-best checkpoints on disk and the ensemble that averages them.

A checkpoint directory holds fold<i>.ckpt with its fold<i>.json manifest
and an ensemble.json listing the members.
"""
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from autodiff.checkpoint import read_checkpoint, read_manifest, write_checkpoint
from autodiff.tensor import no_grad
from nettwin.exceptions import CheckpointFormatError, InvalidArgument
from plannet.serializers import model_config_from_dict
from plannet.services import check_params, predict
from plannet.config import GENERIC_GNN
from .training import Standardizer

logger = logging.getLogger(__name__)

ENSEMBLE_FILE = 'ensemble.json'


@dataclass
class Member:
    params: object
    model_config: object
    kpi: str
    standardizer: Standardizer
    manifest: dict

    @property
    def variant(self):
        return self.model_config.variant


def fold_manifest(fold_result, model_config, train_config, dataset_hash=None):
    return {
        'kpi': train_config.kpi,
        'fold': fold_result.fold,
        'model': model_config.as_dict(),
        'train': train_config.as_dict(),
        'train_config_hash': train_config.digest(),
        'target_mean': fold_result.standardizer.mean,
        'target_std': fold_result.standardizer.std,
        'best_epoch': fold_result.best_epoch,
        'best_val_mae': fold_result.best_val_mae,
        'dataset_hash': dataset_hash,
    }


def write_ensemble(out_dir, train_result, model_config, train_config, dataset_hash=None):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    members = []
    for fold in train_result.folds:
        name = f'fold{fold.fold}.ckpt'
        write_checkpoint(out_dir / name, fold.params,
                         fold_manifest(fold, model_config, train_config, dataset_hash))
        members.append(name)
    summary = {
        'kpi': train_config.kpi,
        'variant': model_config.variant,
        'members': members,
        'train_config_hash': train_config.digest(),
        'dataset_hash': dataset_hash,
    }
    (out_dir / ENSEMBLE_FILE).write_text(json.dumps(summary, indent=2, sort_keys=True) + '\n',
                                         encoding='utf-8')
    logger.info(f"Wrote {len(members)}-member {model_config.variant} ensemble to {out_dir}")
    return out_dir


def load_member(checkpoint):
    manifest = read_manifest(checkpoint)
    try:
        model_config = model_config_from_dict(manifest['model'])
        standardizer = Standardizer(float(manifest['target_mean']), float(manifest['target_std']))
        kpi = manifest['kpi']
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointFormatError(f"manifest of {checkpoint} is incomplete: {e}")
    params = read_checkpoint(checkpoint)
    return Member(params=params, model_config=model_config, kpi=kpi,
                  standardizer=standardizer, manifest=manifest)


def load_ensemble(path):
    """Members of an ensemble directory, or the single checkpoint `path` points at."""
    path = Path(path)
    if path.is_file():
        return [load_member(path)]
    index = path / ENSEMBLE_FILE
    try:
        summary = json.loads(index.read_text(encoding='utf-8'))
    except (OSError, ValueError) as e:
        raise CheckpointFormatError(f"cannot read {index}: {e}")
    return [load_member(path / name) for name in summary['members']]


def check_members(members):
    if not members:
        raise InvalidArgument("an ensemble needs at least one checkpoint")
    kpis = {m.kpi for m in members}
    if len(kpis) > 1:
        raise InvalidArgument(f"ensemble mixes KPIs {sorted(kpis)}")
    variants = {m.variant for m in members}
    if len(variants) > 1:
        raise InvalidArgument(f"ensemble mixes variants {sorted(variants)}")
    for member in members:
        if member.variant != GENERIC_GNN:
            check_params(member.params, member.model_config)


def predict_ensemble(members, scenarios):
    """
    Mean of the members' de-standardized outputs, one value per path of
    every scenario in listing order.
    """
    check_members(members)
    if not isinstance(scenarios, (list, tuple)):
        scenarios = [scenarios]
    outputs = []
    with no_grad():
        for member in members:
            raw = predict(scenarios, member.params, member.model_config).values
            outputs.append(member.standardizer.invert(raw))
    return np.mean(outputs, axis=0)
