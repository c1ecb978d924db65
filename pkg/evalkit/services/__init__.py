# Services package for metrics and method comparison
from .metrics import box_stats, iqr, mae, nmae, signif_lower
from .predictors import EnsemblePredictor, GroundTruth, Predictor, SimulatorAverage
from .compare import MetricReport, compare

__all__ = [
    'box_stats', 'iqr', 'mae', 'nmae', 'signif_lower', 'EnsemblePredictor',
    'GroundTruth', 'Predictor', 'SimulatorAverage', 'MetricReport', 'compare',
]
