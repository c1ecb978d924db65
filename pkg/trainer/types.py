"""Datasets, their generator spec and the training configuration."""
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Tuple

import numpy as np
from django.conf import settings

from netmodel.types import RadioConfig, Scenario
from nettwin.exceptions import InvalidArgument
from nettwin.seeding import config_hash
from simcore.types import KPI_FIELDS, FlowKpis, SimConfig

FAMILIES = ('nsfnet', 'grid', 'perturbed-grid')


def _setting(name, cast=None):
    if cast is None:
        return lambda: getattr(settings, name)
    return lambda: cast(getattr(settings, name))


@dataclass(frozen=True)
class GeneratorSpec:
    """
    Everything needed to draw one sample: topology family and geometry,
    traffic, routing and the simulator. `radio` only applies to the grid
    families.
    """

    family: str = 'nsfnet'
    num_paths: int = field(default_factory=_setting('TRAFFIC_NUM_PATHS'))
    max_hops: int = field(default_factory=_setting('TRAFFIC_MAX_HOPS'))
    mean_set: Tuple[float, ...] = field(default_factory=_setting('TRAFFIC_MEAN_SET', tuple))
    data_rate: float = field(default_factory=_setting('TRAFFIC_DATA_RATE_KBPS'))
    pair_seed: int = field(default_factory=_setting('PATH_PAIR_SEED'))
    rows: int = field(default_factory=_setting('GRID_ROWS'))
    cols: int = field(default_factory=_setting('GRID_COLS'))
    spacing: float = field(default_factory=_setting('GRID_SPACING_M'))
    perturb_radius: float = field(default_factory=_setting('PERTURB_RADIUS_M'))
    radio: RadioConfig = field(default_factory=RadioConfig)
    sim: SimConfig = field(default_factory=SimConfig)

    def __post_init__(self):
        object.__setattr__(self, 'mean_set', tuple(float(v) for v in self.mean_set))
        if self.family not in FAMILIES:
            raise InvalidArgument(f"unknown topology family {self.family!r}, expected one of {FAMILIES}")
        if self.num_paths < 1:
            raise InvalidArgument(f"num_paths must be at least 1, got {self.num_paths}")
        if self.max_hops < 1:
            raise InvalidArgument(f"max_hops must be at least 1, got {self.max_hops}")
        if not self.data_rate > 0:
            raise InvalidArgument(f"data rate must be positive, got {self.data_rate}")

    @property
    def wireless(self):
        return self.family != 'nsfnet'

    def as_dict(self):
        data = asdict(self)
        data['mean_set'] = list(self.mean_set)
        data['radio'] = self.radio.as_dict() if self.wireless else None
        data['sim'] = self.sim.as_dict()
        return data

    def digest(self):
        return config_hash(self.as_dict())


@dataclass
class Sample:
    scenario: Scenario
    kpis: List[FlowKpis]
    seed: int

    def __post_init__(self):
        if len(self.kpis) != self.scenario.num_paths:
            raise InvalidArgument(
                f"sample has {len(self.kpis)} KPI records for {self.scenario.num_paths} paths")

    def target(self, kpi):
        """Per-path values of `kpi`, NaN where undefined."""
        return np.array([np.nan if k.value(kpi) is None else k.value(kpi) for k in self.kpis],
                        dtype=np.float64)


@dataclass
class Dataset:
    samples: List[Sample] = field(default_factory=list)
    metadata: Dict = field(default_factory=dict)

    def __len__(self):
        return len(self.samples)

    def __getitem__(self, index):
        return self.samples[index]

    def __iter__(self):
        return iter(self.samples)

    def scenarios(self, indices=None):
        indices = range(len(self)) if indices is None else indices
        return [self.samples[i].scenario for i in indices]

    def targets(self, kpi, indices=None):
        """Flat per-path targets over the chosen samples, in listing order."""
        indices = range(len(self)) if indices is None else indices
        parts = [self.samples[i].target(kpi) for i in indices]
        return np.concatenate(parts) if parts else np.zeros(0)

    def path_counts(self):
        return sorted({sample.scenario.num_paths for sample in self.samples})


@dataclass(frozen=True)
class TrainConfig:
    kpi: str = 'delay'
    folds: int = field(default_factory=_setting('TRAIN_FOLDS'))
    epochs: int = field(default_factory=_setting('TRAIN_EPOCHS'))
    batch_size: int = field(default_factory=_setting('TRAIN_BATCH_SIZE'))
    lr: float = field(default_factory=_setting('TRAIN_LR'))
    l2: float = field(default_factory=_setting('TRAIN_L2'))
    patience: int = field(default_factory=_setting('TRAIN_PATIENCE'))
    seed: int = 0

    def __post_init__(self):
        if self.kpi not in KPI_FIELDS:
            raise InvalidArgument(f"unknown KPI {self.kpi!r}, expected one of {sorted(KPI_FIELDS)}")
        if self.folds < 2:
            raise InvalidArgument(f"folds must be at least 2, got {self.folds}")
        if not self.lr > 0:
            raise InvalidArgument(f"learning rate must be positive, got {self.lr}")
        if self.l2 < 0:
            raise InvalidArgument(f"l2 lambda must be non-negative, got {self.l2}")
        if self.epochs < 1 or self.batch_size < 1 or self.patience < 1:
            raise InvalidArgument("epochs, batch_size and patience must be at least 1")

    def as_dict(self):
        return asdict(self)

    def digest(self):
        return config_hash(self.as_dict())
