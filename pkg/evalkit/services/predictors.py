"""
Methods compared on a test set. Each predictor maps a dataset sample to
per-path values of the KPIs it covers, NaN where it has no value.
"""
import logging
from dataclasses import replace

import numpy as np
from django.conf import settings

from nettwin.exceptions import FixedOutputWidthError
from nettwin.seeding import derive_seed
from plannet.config import GENERIC_GNN
from simcore.services import simulate_avg
from simcore.types import KPI_FIELDS, SimConfig
from trainer.services import load_ensemble, predict_ensemble

logger = logging.getLogger(__name__)


def kpi_values(kpis, kpi):
    return np.array([np.nan if k.value(kpi) is None else k.value(kpi) for k in kpis],
                    dtype=np.float64)


class Predictor:
    name = 'predictor'
    kpis = tuple(KPI_FIELDS)

    def check(self, dataset):
        """Raise when the predictor cannot serve every sample of `dataset`."""

    def predict(self, sample):
        raise NotImplementedError


class GroundTruth(Predictor):
    """Passes the simulated ground truth through."""

    name = 'ground_truth'

    def predict(self, sample):
        return {kpi: kpi_values(sample.kpis, kpi) for kpi in self.kpis}


class SimulatorAverage(Predictor):
    """
    Mean over `runs` fresh simulations of the sample's scenario. Seeds are
    drawn apart from the ground-truth run; with `reroute` every run picks
    its own equal-hop routes.
    """

    def __init__(self, runs, config=None, reroute=False, seed_offset=None):
        self.runs = runs
        self.config = config if config is not None else SimConfig()
        self.reroute = reroute
        self.seed_offset = settings.EVAL_SIM_SEED_OFFSET if seed_offset is None else seed_offset
        self.name = f"sim_avg_{runs}" + ('_reroute' if reroute else '')

    def predict(self, sample):
        scenario = sample.scenario
        seed = derive_seed(sample.seed + self.seed_offset, 'sim-avg')
        config = replace(self.config, seed=seed)
        kpis = simulate_avg(scenario.graph, scenario.paths, scenario.traffic, config,
                            self.runs, reroute=self.reroute)
        return {kpi: kpi_values(kpis, kpi) for kpi in self.kpis}


class EnsemblePredictor(Predictor):
    """Fold-best ensemble of one KPI."""

    def __init__(self, members, name=None):
        self.members = members
        self.kpis = (members[0].kpi,)
        self.name = name or members[0].variant

    @classmethod
    def from_path(cls, path, name=None):
        return cls(load_ensemble(path), name=name)

    def check(self, dataset):
        config = self.members[0].model_config
        if config.variant == GENERIC_GNN and dataset.path_counts() not in ([], [config.output_width]):
            raise FixedOutputWidthError(
                f"{self.name} predicts exactly {config.output_width} paths, "
                f"test set has {dataset.path_counts()}")

    def predict(self, sample):
        return {self.kpis[0]: predict_ensemble(self.members, [sample.scenario])}
