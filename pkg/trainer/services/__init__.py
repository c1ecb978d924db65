# Services package for datasets, training and ensembles
from .crossval import split_cv
from .dataset import (
    ROLES, build_dataset, build_scenario, kpi_ranges, metadata_path, read_dataset,
    write_dataset,
)
from .ensemble import Member, load_ensemble, predict_ensemble, write_ensemble
from .training import Standardizer, TrainResult, train, train_fold

__all__ = [
    'split_cv', 'ROLES', 'build_dataset', 'build_scenario', 'kpi_ranges', 'metadata_path',
    'read_dataset', 'write_dataset', 'Member', 'load_ensemble',
    'predict_ensemble', 'write_ensemble', 'Standardizer', 'TrainResult',
    'train', 'train_fold',
]
