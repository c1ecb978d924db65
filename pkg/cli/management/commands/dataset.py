import json
import logging
from pathlib import Path

from decouple import Csv
from django.conf import settings

from cli.base import PipelineCommand, UsageError
from nettwin.exceptions import InvalidArgument
from simcore.types import SimConfig
from trainer.serializers import spec_from_dict
from trainer.services import ROLES, build_dataset, kpi_ranges, write_dataset
from trainer.types import FAMILIES, GeneratorSpec
from .topology import add_radio_arguments, resolve_radio

logger = logging.getLogger(__name__)


def load_spec(path):
    """GeneratorSpec from a spec JSON file or from a dataset metadata file."""
    try:
        data = json.loads(Path(path).read_text(encoding='utf-8'))
    except (OSError, ValueError) as e:
        raise InvalidArgument(f"cannot read spec file {path}: {e}")
    if isinstance(data, dict) and 'spec' in data:
        data = data['spec']
    return spec_from_dict(data)


def resolve_sim(run_config, section, options, base):
    return SimConfig(
        duration=run_config.get(section, 'duration', options.get('duration'), base.duration, float),
        packet_size=run_config.get(section, 'packet_size', options.get('packet_size'),
                                   base.packet_size, int),
        queue_capacity=run_config.get(section, 'queue_capacity', options.get('queue_capacity'),
                                      base.queue_capacity, int),
        backoff_mean=run_config.get(section, 'backoff_mean', None, base.backoff_mean, float),
        interference_radius=run_config.get(section, 'interference_radius', None,
                                           base.interference_radius, float),
        prop_delay=run_config.get(section, 'prop_delay', None, base.prop_delay, float),
    )


class Command(PipelineCommand):
    help = 'Generate and simulate a dataset of scenarios (JSON Lines plus metadata)'
    name = 'dataset'
    title = 'Dataset Builder'

    def add_command_arguments(self, parser):
        parser.add_argument('--spec', help='Generator spec JSON (or a dataset .meta.json)')
        parser.add_argument('--role', choices=ROLES, help='train (default) or test set')
        parser.add_argument('--n', type=int, help='Number of samples (default by role)')
        parser.add_argument('--name', help='Dataset file stem (default: dataset)')
        parser.add_argument('--family', choices=FAMILIES, help='Topology family')
        parser.add_argument('--num-paths', type=int, help='Paths per scenario')
        parser.add_argument('--max-hops', type=int, help='Maximum hops of a routed pair')
        parser.add_argument('--data-rate', type=float, help='Source rate while on (kb/s)')
        parser.add_argument('--duration', type=float, help='Simulated seconds per sample')
        parser.add_argument('--packet-size', type=int, help='Packet size (bytes)')
        parser.add_argument('--queue-capacity', type=int, help='Waiting packets per link queue')
        add_radio_arguments(parser)

    def resolve(self, run_config, options):
        spec_file = run_config.get('dataset', 'spec', options.get('spec'))
        base = load_spec(spec_file) if spec_file else GeneratorSpec()
        self.role = run_config.get('dataset', 'role', options.get('role'), 'train')
        if self.role not in ROLES:
            raise UsageError(f"--role must be one of {ROLES}, got {self.role!r}")
        default_n = settings.TRAIN_SAMPLES if self.role == 'train' else settings.TEST_SAMPLES
        self.n_samples = run_config.get('dataset', 'n', options.get('n'), default_n, int)
        if self.n_samples < 0:
            raise UsageError(f"--n must be non-negative, got {self.n_samples}")
        self.name_stem = run_config.get('dataset', 'name', options.get('name'), 'dataset')
        get = run_config.get
        self.spec = GeneratorSpec(
            family=get('dataset', 'family', options.get('family'), base.family),
            num_paths=get('dataset', 'num_paths', options.get('num_paths'), base.num_paths, int),
            max_hops=get('dataset', 'max_hops', options.get('max_hops'), base.max_hops, int),
            mean_set=get('dataset', 'mean_set', None, base.mean_set, Csv(cast=float)),
            data_rate=get('dataset', 'data_rate', options.get('data_rate'), base.data_rate, float),
            pair_seed=get('dataset', 'pair_seed', None, base.pair_seed, int),
            rows=get('dataset', 'rows', None, base.rows, int),
            cols=get('dataset', 'cols', None, base.cols, int),
            spacing=get('dataset', 'spacing', None, base.spacing, float),
            perturb_radius=get('dataset', 'perturb_radius', None, base.perturb_radius, float),
            radio=resolve_radio(run_config, 'dataset', options, base.radio),
            sim=resolve_sim(run_config, 'dataset', options, base.sim),
        )

    def run(self):
        self.stdout.write(f" samples "
                          f"with {self.workers} worker(s)...")
        dataset = build_dataset(self.spec, self.n_samples, self.seed, workers=self.workers,
                                role=self.role)
        path = write_dataset(dataset, self.out_dir / f"{self.name_stem}.jsonl")
        ranges = kpi_ranges(dataset)
        skipped = dataset.metadata['skipped']

        self.stdout.write(self.style.SUCCESS(
            f"✓ {len(dataset)} samples, {len(skipped)} skipped"))
        self.stdout.write(f"  Data rate: {self.spec.data_rate:g} kb/s")
        for kpi, bounds in ranges.items():
            text = 'undefined' if bounds is None else f"{bounds[0]:.6g} .. {bounds[1]:.6g}"
            self.stdout.write(f"  {kpi}: {text}")
        if skipped:
            self.stdout.write(self.style.WARNING(f"  Skipped sample indices: {skipped}"))
        self.stdout.write(f"  Written to: {path}")
        return {'file': str(path), 'samples': len(dataset), 'skipped': len(skipped),
                'kpi_ranges': ranges, 'spec_hash': dataset.metadata['spec_hash']}
