import logging
from pathlib import Path

from decouple import Csv
from django.conf import settings

from cli.base import PipelineCommand, UsageError
from evalkit.services import EnsemblePredictor, GroundTruth, SimulatorAverage, compare
from evalkit.services.compare import GROUPINGS
from nettwin.exceptions import NetTwinError
from simcore.types import KPI_FIELDS, SimConfig
from trainer.serializers import spec_from_dict
from trainer.services import read_dataset

logger = logging.getLogger(__name__)


def parse_ensemble(entry):
    """'name=path' or a bare path."""
    name, sep, path = entry.partition('=')
    if not sep:
        return None, entry
    return name.strip() or None, path.strip()


class Command(PipelineCommand):
    help = 'Compare trained ensembles and simulator averages on a test dataset'
    name = 'eval'
    title = 'Evaluation'

    def add_command_arguments(self, parser):
        parser.add_argument('--dataset', help='Test dataset (.jsonl)')
        parser.add_argument('--ensemble', action='append',
                            help='Checkpoint directory or file, optionally as name=path (repeatable)')
        parser.add_argument('--sim-avg', action='append', type=int,
                            help='Simulator average over this many runs (repeatable)')
        parser.add_argument('--reroute', action='store_true', default=None,
                            help='Simulator averages redraw equal-hop routes per run')
        parser.add_argument('--ground-truth', action='store_true', default=None,
                            help='Include the ground truth passthrough')
        parser.add_argument('--kpi', action='append', choices=sorted(KPI_FIELDS),
                            help='KPI to evaluate (repeatable, default all)')
        parser.add_argument('--group-by', choices=GROUPINGS, help='Report grouping')
        parser.add_argument('--alpha', type=float, help='Significance level')

    def resolve(self, run_config, options):
        get = run_config.get
        dataset_file = get('eval', 'dataset', options.get('dataset'))
        if dataset_file is None:
            raise UsageError("--dataset is required")
        self.dataset_file = Path(dataset_file)
        if not self.dataset_file.is_file():
            raise UsageError(f"dataset {self.dataset_file} does not exist")
        self.ensembles = get('eval', 'ensembles', options.get('ensemble'), [], Csv())
        self.sim_runs = get('eval', 'sim_avg', options.get('sim_avg'), [], Csv(cast=int))
        self.reroute = get('eval', 'reroute', options.get('reroute'), False, bool)
        self.ground_truth = get('eval', 'ground_truth', options.get('ground_truth'), False, bool)
        self.kpis = get('eval', 'kpis', options.get('kpi'), list(KPI_FIELDS), Csv())
        self.group_by = get('eval', 'group_by', options.get('group_by'), 'none')
        self.alpha = get('eval', 'alpha', options.get('alpha'), settings.EVAL_ALPHA, float)
        if not (self.ensembles or self.sim_runs or self.ground_truth):
            raise UsageError("no predictors: give --ensemble, --sim-avg or --ground-truth")
        if any(runs < 1 for runs in self.sim_runs):
            raise UsageError(f"--sim-avg runs must be at least 1, got {self.sim_runs}")
        unknown = [kpi for kpi in self.kpis if kpi not in KPI_FIELDS]
        if unknown:
            raise UsageError(f"unknown KPIs {unknown}")
        if self.group_by not in GROUPINGS:
            raise UsageError(f"unknown grouping {self.group_by!r}, expected one of {GROUPINGS}")
        if not 0 < self.alpha < 1:
            raise UsageError(f"--alpha must lie in (0, 1), got {self.alpha}")

    def build_predictors(self, dataset):
        predictors, failed = [], {}
        if self.ground_truth:
            predictors.append(GroundTruth())
        spec = dataset.metadata.get('spec')
        sim = spec_from_dict(spec).sim if spec else SimConfig()
        for runs in self.sim_runs:
            predictors.append(SimulatorAverage(runs, sim, reroute=self.reroute))
        taken = {p.name for p in predictors}
        for entry in self.ensembles:
            name, path = parse_ensemble(entry)
            try:
                predictor = EnsemblePredictor.from_path(path, name=name)
            except NetTwinError as e:
                self.stdout.write(self.style.WARNING(f"⚠ Skipping ensemble {entry}: {e}"))
                logger.warning(f"Skipping ensemble {entry}: {e}")
                failed[name or path] = str(e)
                continue
            base, suffix = predictor.name, 2
            while predictor.name in taken:
                predictor.name = f"{base}_{suffix}"
                suffix += 1
            taken.add(predictor.name)
            predictors.append(predictor)
        return predictors, failed

    def run(self):
        dataset = read_dataset(self.dataset_file)
        predictors, failed = self.build_predictors(dataset)
        self.stdout.write(
            f"Evaluating {len(predictors)} predictor(s) on {len(dataset)} samples: "
            f"{', '.join(p.name for p in predictors)}")
        report = compare(dataset, predictors, self.kpis, group_by=self.group_by,
                         alpha=self.alpha, workers=self.workers)
        report.skipped.update(failed)
        report.write(self.out_dir)

        for name, reason in report.skipped.items():
            self.stdout.write(self.style.WARNING(f"⚠ Skipped {name}: {reason}"))
        for cell in report.degenerate:
            self.stdout.write(self.style.WARNING(f"⚠ No NMAE for {cell}: zero ground-truth spread"))
        self.stdout.write("\nLowest NMAE:")
        self.stdout.write("-" * 40)
        winners = report.winners()
        for (kpi, group), method in sorted(winners.items()):
            self.stdout.write(f"  {kpi} [{group}]: {method}")
        return {
            'rows': len(report.rows),
            'winners': {f"{kpi}/{group}": method for (kpi, group), method in winners.items()},
            'skipped': report.skipped,
        }
