"""
Dataset generation: draw scenarios from a generator spec, simulate each
once for ground truth, and store them as JSON Lines plus a metadata file.
"""
import json
import logging
from dataclasses import replace
from pathlib import Path

import numpy as np
from django.conf import settings

from netmodel.services import (
    gen_grid, gen_nsfnet, perturb, sample_traffic_matrix, scenario_from_pairs,
    select_path_pairs,
)
from nettwin.exceptions import DatasetBuildError, InvalidArgument
from nettwin.parallel import map_workers
from nettwin.seeding import config_hash, derive_seed
from simcore.services import simulate
from simcore.types import KPI_FIELDS
from ..serializers import sample_from_line, sample_to_line
from ..types import Dataset, Sample

logger = logging.getLogger(__name__)


def sample_seed(seed, index):
    return derive_seed(seed, f'sample:{index}')


def build_graph(spec, seed):
    if spec.family == 'nsfnet':
        return gen_nsfnet()
    graph = gen_grid(spec.rows, spec.cols, spec.spacing, spec.radio)
    if spec.family == 'perturbed-grid':
        graph = perturb(graph, spec.perturb_radius, spec.radio, seed=derive_seed(seed, 'perturb'))
    return graph


def build_scenario(spec, seed):
    """
    One scenario of the generator's family. Fixed topologies reuse its
    pair seed so every sample routes the same pairs; a perturbed grid
    draws its pairs per sample.
    """
    graph = build_graph(spec, seed)
    pair_seed = derive_seed(seed, 'pairs') if spec.family == 'perturbed-grid' else spec.pair_seed
    pairs = select_path_pairs(graph, spec.num_paths, spec.max_hops, pair_seed)
    traffic = sample_traffic_matrix(
        spec.num_paths, spec.mean_set, spec.data_rate, derive_seed(seed, 'traffic'))
    return scenario_from_pairs(graph, pairs, traffic)


def simulate_sample(job):
    """Worker entry point: returns (index, Sample or None, error message)."""
    spec, index, seed = job
    try:
        scenario = build_scenario(spec, seed)
        config = replace(spec.sim, seed=derive_seed(seed, 'sim'))
        kpis = simulate(scenario.graph, scenario.paths, scenario.traffic, config)
        return index, Sample(scenario=scenario, kpis=kpis, seed=seed), None
    except Exception as e:
        return index, None, f"{type(e).__name__}: {e}"


ROLES = ('train', 'test')


def reference_samples(role):
    if role not in ROLES:
        raise InvalidArgument(f"unknown dataset role {role!r}, expected one of {ROLES}")
    return settings.REFERENCE_TRAIN_SAMPLES if role == 'train' else settings.REFERENCE_TEST_SAMPLES


def build_dataset(spec, n_samples, seed, workers=1, role='train'):
    """
    Draw and simulate `n_samples` scenarios. Failing samples are skipped
    and logged; more than the allowed skip ratio aborts the build.

    `role` picks the reference sample count the metadata's scale factor
    is taken against.
    """
    reference = reference_samples(role)
    jobs = [(spec, index, sample_seed(seed, index)) for index in range(n_samples)]
    samples, skipped = [], []
    for index, sample, error in map_workers(simulate_sample, jobs, workers=workers):
        if sample is None:
            logger.warning(f"Skipping sample {index}: {error}")
            skipped.append(index)
        else:
            samples.append(sample)
    if n_samples and len(skipped) / n_samples > settings.DATASET_MAX_SKIP_RATIO:
        logger.error(f"{len(skipped)} of {n_samples} samples failed")
        raise DatasetBuildError(
            f"{len(skipped)} of {n_samples} samples failed, "
            f"more than {settings.DATASET_MAX_SKIP_RATIO:.0%} allowed")
    metadata = {
        'family': spec.family,
        'data_rate_kbps': spec.data_rate,
        'seed': seed,
        'seed_range': [0, n_samples],
        'requested': n_samples,
        'samples': len(samples),
        'skipped': skipped,
        'spec': spec.as_dict(),
        'spec_hash': spec.digest(),
        'sim_config_hash': config_hash(spec.sim.as_dict()),
        'role': role,
        'reference_samples': reference,
        'reference_scale': n_samples / reference,
    }
    logger.info(f"Built {spec.family} dataset: {len(samples)} samples, {len(skipped)} skipped")
    return Dataset(samples=samples, metadata=metadata)


def kpi_ranges(dataset):
    """(min, max) of every KPI over the defined values, None when nothing is defined."""
    ranges = {}
    for kpi in KPI_FIELDS:
        values = dataset.targets(kpi)
        values = values[np.isfinite(values)]
        ranges[kpi] = (float(values.min()), float(values.max())) if values.size else None
    return ranges


def metadata_path(path):
    path = Path(path)
    return path.with_name(path.stem + '.meta.json')


def write_dataset(dataset, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        for sample in dataset.samples:
            handle.write(sample_to_line(sample) + '\n')
    metadata_path(path).write_text(
        json.dumps(dataset.metadata, indent=2, sort_keys=True) + '\n', encoding='utf-8')
    logger.info(f"Wrote {len(dataset)} samples to {path}")
    return path


def read_dataset(path):
    path = Path(path)
    with open(path, encoding='utf-8') as handle:
        samples = [sample_from_line(line) for line in handle if line.strip()]
    meta = metadata_path(path)
    metadata = json.loads(meta.read_text(encoding='utf-8')) if meta.exists() else {}
    return Dataset(samples=samples, metadata=metadata)
