import logging
from pathlib import Path

from decouple import Csv

from cli.base import PipelineCommand, UsageError
from nettwin.exceptions import FixedOutputWidthError
from nettwin.seeding import file_hash
from plannet.config import GENERIC_GNN, VARIANTS, ModelConfig
from simcore.types import KPI_FIELDS
from trainer.services import read_dataset, train, write_ensemble
from trainer.types import TrainConfig

logger = logging.getLogger(__name__)

CHECKPOINT_DIR = 'checkpoints'
CURVES_FILE = 'curves.csv'


def resolve_model_config(run_config, options, dataset):
    base = ModelConfig()
    get = run_config.get
    variant = get('model', 'variant', options.get('variant'), base.variant)
    output_width = get('model', 'output_width', None, None, int)
    if variant == GENERIC_GNN and output_width is None:
        counts = dataset.path_counts()
        if len(counts) != 1:
            raise FixedOutputWidthError(
                f"generic_gnn needs one path count per dataset, got {counts}: "
                "the output dimension is predefined")
        output_width = get('model', 'output_width', counts[0])
    return ModelConfig(
        variant=variant,
        iterations=get('model', 'iterations', options.get('iterations'), base.iterations, int),
        path_dim=get('model', 'path_dim', options.get('path_dim'), base.path_dim, int),
        link_dim=get('model', 'link_dim', options.get('link_dim'), base.link_dim, int),
        node_dim=get('model', 'node_dim', options.get('node_dim'), base.node_dim, int),
        link_mlp_hidden=get('model', 'link_mlp_hidden', None, base.link_mlp_hidden, Csv(cast=int)),
        readout_hidden=get('model', 'readout_hidden', None, base.readout_hidden, Csv(cast=int)),
        share_weights=get('model', 'share_weights', options.get('share_weights'),
                          base.share_weights, bool),
        tau_scale=get('model', 'tau_scale', None, base.tau_scale, float),
        capacity_scale=get('model', 'capacity_scale', None, base.capacity_scale, float),
        gnn_hidden=get('model', 'gnn_hidden', None, base.gnn_hidden, int),
        output_width=output_width,
    )


class Command(PipelineCommand):
    help = 'Train a k-fold ensemble of one model variant on a dataset'
    name = 'train'
    title = 'Model Training'

    def add_command_arguments(self, parser):
        parser.add_argument('--dataset', help='Training dataset (.jsonl)')
        parser.add_argument('--kpi', choices=sorted(KPI_FIELDS), help='Target KPI')
        parser.add_argument('--variant', choices=VARIANTS, help='Model variant')
        parser.add_argument('--folds', type=int, help='Cross-validation folds')
        parser.add_argument('--epochs', type=int, help='Maximum epochs per fold')
        parser.add_argument('--batch-size', type=int, help='Scenarios per batch')
        parser.add_argument('--lr', type=float, help='Adam learning rate')
        parser.add_argument('--l2', type=float, help='L2 penalty')
        parser.add_argument('--patience', type=int, help='Epochs without improvement before stopping')
        parser.add_argument('--iterations', type=int, help='Message passing iterations')
        parser.add_argument('--path-dim', type=int, help='Path state size')
        parser.add_argument('--link-dim', type=int, help='Link state size')
        parser.add_argument('--node-dim', type=int, help='Node state size')
        parser.add_argument('--share-weights', action='store_true', default=None,
                            help='One set of update weights for every iteration')

    def resolve(self, run_config, options):
        dataset_file = run_config.get('train', 'dataset', options.get('dataset'))
        if dataset_file is None:
            raise UsageError("--dataset is required")
        self.dataset_file = Path(dataset_file)
        if not self.dataset_file.is_file():
            raise UsageError(f"dataset {self.dataset_file} does not exist")
        self.dataset = read_dataset(self.dataset_file)
        base = TrainConfig()
        get = run_config.get
        self.train_config = TrainConfig(
            kpi=get('train', 'kpi', options.get('kpi'), base.kpi),
            folds=get('train', 'folds', options.get('folds'), base.folds, int),
            epochs=get('train', 'epochs', options.get('epochs'), base.epochs, int),
            batch_size=get('train', 'batch_size', options.get('batch_size'), base.batch_size, int),
            lr=get('train', 'lr', options.get('lr'), base.lr, float),
            l2=get('train', 'l2', options.get('l2'), base.l2, float),
            patience=get('train', 'patience', options.get('patience'), base.patience, int),
            seed=self.seed,
        )
        self.model_config = resolve_model_config(run_config, options, self.dataset)

    def run(self):
        self.stdout.write(
            f"Training {self.model_config.variant} on {self.train_config.kpi}: "
            f"{len(self.dataset)} samples, {self.train_config.folds} folds")
        result = train(self.dataset, self.model_config, self.train_config, workers=self.workers)
        ensemble_dir = write_ensemble(
            self.out_dir / CHECKPOINT_DIR, result, self.model_config, self.train_config,
            dataset_hash=file_hash(self.dataset_file))
        curves_path = self.out_dir / CURVES_FILE
        result.curves.to_csv(curves_path, index=False, float_format='%.10g')

        for fold in result.folds:
            self.stdout.write(
                f"  Fold {fold.fold}: best epoch {fold.best_epoch}, "
                f"validation MAE {fold.best_val_mae:.6g}")
        self.stdout.write(f"  Checkpoints: {ensemble_dir}")
        self.stdout.write(f"  Curves: {curves_path}")
        return {
            'variant': self.model_config.variant,
            'kpi': self.train_config.kpi,
            'checkpoints': str(ensemble_dir),
            'best_val_mae': [fold.best_val_mae for fold in result.folds],
            'best_epoch': [fold.best_epoch for fold in result.folds],
        }
