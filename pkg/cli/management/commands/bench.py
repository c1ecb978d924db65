import logging
import timeit
from dataclasses import replace

import numpy as np
import pandas as pd
from django.conf import settings

from autodiff.tensor import no_grad
from cli.base import PipelineCommand, UsageError
from nettwin.seeding import derive_seed
from plannet.config import GENERIC_GNN, VARIANTS, ModelConfig
from plannet.services import new_params, predict
from simcore.services import simulate
from trainer.serializers import spec_from_dict
from trainer.services import build_scenario, load_ensemble, read_dataset
from trainer.types import FAMILIES, GeneratorSpec
from .dataset import resolve_sim

logger = logging.getLogger(__name__)

BENCH_FILE = 'bench.csv'
MIN_REPETITIONS = 3
BENCH_COLUMNS = ['target', 'median_s', 'min_s', 'max_s', 'repetitions']
MAX_RATE_DOUBLINGS = 6


def time_call(func, repetitions):
    """Wall-clock seconds of `repetitions` single calls."""
    return np.array(timeit.repeat(func, number=1, repeat=repetitions))


def with_data_rate(scenario, data_rate):
    return replace(scenario, traffic=replace(scenario.traffic, data_rate=float(data_rate)))


class Command(PipelineCommand):
    help = 'Time model forward passes against one simulation run of the same scenario'
    name = 'bench'
    title = 'Inference Benchmark'

    def add_command_arguments(self, parser):
        parser.add_argument('--dataset', help='Take the scenario from this dataset (.jsonl)')
        parser.add_argument('--sample', type=int, help='Sample index within --dataset')
        parser.add_argument('--family', choices=FAMILIES, help='Generate the scenario instead')
        parser.add_argument('--num-paths', type=int, help='Paths of a generated scenario')
        parser.add_argument('--data-rate', type=float,
                            help='Per-path rate (kb/s) a generated scenario starts the congestion search from')
        parser.add_argument('--ensemble', help='Also time this trained checkpoint directory or file')
        parser.add_argument('--repetitions', type=int, help='Timed repetitions per target')
        parser.add_argument('--duration', type=float, help='Simulated seconds')

    def resolve(self, run_config, options):
        get = run_config.get
        self.repetitions = get('bench', 'repetitions', options.get('repetitions'),
                               settings.BENCH_REPETITIONS, int)
        if self.repetitions < MIN_REPETITIONS:
            raise UsageError(f"--repetitions must be at least {MIN_REPETITIONS}, got {self.repetitions}")
        dataset_file = get('bench', 'dataset', options.get('dataset'))
        spec = GeneratorSpec(
            family=get('bench', 'family', options.get('family'), 'grid'),
            num_paths=get('bench', 'num_paths', options.get('num_paths'),
                          settings.TRAFFIC_NUM_PATHS, int))
        self.data_rate = get('bench', 'data_rate', options.get('data_rate'),
                             settings.BENCH_DATA_RATE_KBPS, float)
        if not self.data_rate > 0:
            raise UsageError(f"--data-rate must be positive, got {self.data_rate}")
        spec = replace(spec, data_rate=self.data_rate)
        if dataset_file:
            dataset = read_dataset(dataset_file)
            index = get('bench', 'sample', options.get('sample'), 0, int)
            if not 0 <= index < len(dataset):
                raise UsageError(f"--sample {index} is outside the {len(dataset)} samples of {dataset_file}")
            self.scenario = dataset[index].scenario
            if dataset.metadata.get('spec'):
                spec = replace(spec, sim=spec_from_dict(dataset.metadata['spec']).sim)
        else:
            self.scenario = build_scenario(spec, derive_seed(self.seed, 'bench-scenario'))
        self.sim = replace(resolve_sim(run_config, 'bench', options, spec.sim),
                           seed=derive_seed(self.seed, 'bench-sim'))
        self.ensemble = get('bench', 'ensemble', options.get('ensemble'))

    def models(self):
        """(target name, params, config) of every timed model."""
        targets = []
        for variant in VARIANTS:
            extra = {'output_width': self.scenario.num_paths} if variant == GENERIC_GNN else {}
            config = ModelConfig(variant=variant, **extra)
            targets.append((variant, new_params(config, derive_seed(self.seed, variant)), config))
        if self.ensemble:
            member = load_ensemble(self.ensemble)[0]
            targets.append((f"trained_{member.variant}", member.params, member.model_config))
        return targets

    def congest(self, scenario):
        """
        Double the per-path data rate until one simulation run drops
        packets. Returns the scenario and its total drops.
        """
        for _ in range(MAX_RATE_DOUBLINGS + 1):
            kpis = simulate(scenario.graph, scenario.paths, scenario.traffic, self.sim)
            drops = float(sum(k.drops for k in kpis))
            if drops > 0:
                return scenario, drops
            logger.info(f"No drops at {scenario.traffic.data_rate:g} kb/s, doubling the data rate")
            scenario = with_data_rate(scenario, 2 * scenario.traffic.data_rate)
        scenario = with_data_rate(scenario, scenario.traffic.data_rate / 2)
        logger.warning(f"Scenario stays uncongested up to {scenario.traffic.data_rate:g} kb/s")
        return scenario, drops

    def run(self):
        scenario, drops = self.congest(self.scenario)
        self.stdout.write(
            f"Scenario: {scenario.graph.family}, {scenario.graph.num_nodes} nodes, "
            f"{scenario.graph.num_links} links, {scenario.num_paths} paths, "
            f"{scenario.traffic.data_rate:g} kb/s per path, {drops:g} drops")
        rows = []
        for name, params, config in self.models():
            def forward():
                with no_grad():
                    predict([scenario], params, config)
            forward()
            times = time_call(forward, self.repetitions)
            rows.append((name, float(np.median(times)), float(times.min()), float(times.max()),
                         self.repetitions))

        def run_simulation():
            simulate(scenario.graph, scenario.paths, scenario.traffic, self.sim)
        times = time_call(run_simulation, self.repetitions)
        rows.append(('simulation', float(np.median(times)), float(times.min()), float(times.max()),
                     self.repetitions))

        table = pd.DataFrame(rows, columns=BENCH_COLUMNS)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        table.to_csv(self.out_dir / BENCH_FILE, index=False, float_format='%.6g')

        medians = dict(zip(table['target'], table['median_s']))
        ratio = medians['simulation'] / medians['plan_net']
        for target, median in medians.items():
            self.stdout.write(f"  {target}: median {median * 1000:.3f} ms")
        self.stdout.write(self.style.SUCCESS(
            f"✓ One plan_net forward pass is {ratio:.0f}x faster than one simulation run"))
        logger.info(f"Benchmark over {self.repetitions} repetitions: ratio {ratio:.1f}")
        return {'medians_s': medians, 'ratio': ratio, 'repetitions': self.repetitions,
                'data_rate_kbps': scenario.traffic.data_rate, 'drops': drops}
