"""
Evaluate several predictors on one test set and assemble the report:
NMAE and MAE per method, KPI and group, box statistics of the absolute
errors and pairwise significance of lower errors.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List

import numpy as np
import pandas as pd
from django.conf import settings

from nettwin.exceptions import InvalidArgument, NetTwinError
from nettwin.parallel import map_workers
from .metrics import box_stats, iqr, signif_lower

logger = logging.getLogger(__name__)

GROUPINGS = ('none', 'family', 'data_rate', 'ptx')
REPORT_COLUMNS = ['method', 'kpi', 'group', 'nmae_mean', 'nmae_sd', 'mae_mean', 'mae_sd', 'n',
                  'truth_mean', 'significant_vs']
BOX_COLUMNS = ['method', 'kpi', 'group', 'low_whisker', 'q1', 'median', 'q3', 'high_whisker',
               'outliers', 'truth_mean']


def group_label(sample, group_by):
    graph = sample.scenario.graph
    if group_by == 'family':
        return graph.family
    if group_by == 'data_rate':
        return f"data_rate={sample.scenario.traffic.data_rate:g}"
    if group_by == 'ptx':
        return f"ptx={graph.radio.ptx_dbm:g}" if graph.radio is not None else 'wired'
    return 'all'


@dataclass
class MetricReport:
    rows: pd.DataFrame
    boxes: pd.DataFrame
    skipped: Dict[str, str] = field(default_factory=dict)
    degenerate: List[str] = field(default_factory=list)

    def winners(self):
        """Method with the lowest NMAE per (kpi, group)."""
        if self.rows.empty:
            return {}
        scored = self.rows.dropna(subset=['nmae_mean'])
        best = scored.loc[scored.groupby(['kpi', 'group'])['nmae_mean'].idxmin()]
        return {(r.kpi, r.group): r.method for r in best.itertuples()}

    def as_dict(self):
        return {
            'rows': json.loads(self.rows.to_json(orient='records')),
            'boxes': json.loads(self.boxes.to_json(orient='records')),
            'skipped': self.skipped,
            'degenerate': self.degenerate,
        }

    def write(self, out_dir):
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        flat = self.rows.copy()
        flat['significant_vs'] = flat['significant_vs'].map(';'.join)
        flat.to_csv(out_dir / 'report.csv', index=False, float_format='%.10g')
        boxes = self.boxes.copy()
        boxes['outliers'] = boxes['outliers'].map(lambda xs: ';'.join(f'{x:.10g}' for x in xs))
        boxes.to_csv(out_dir / 'boxplot.csv', index=False, float_format='%.10g')
        (out_dir / 'report.json').write_text(
            json.dumps(self.as_dict(), indent=2, sort_keys=True) + '\n', encoding='utf-8')
        logger.info(f"Wrote report with {len(self.rows)} rows to {out_dir}")
        return out_dir


def _predict_job(job):
    predictor, sample = job
    return predictor.predict(sample)


def collect(dataset, predictors, kpis, labels, workers=1):
    """
    Flat per-path truth, group labels and predictions per KPI. Predictors
    that cannot serve the test set are left out and returned with their
    reason.
    """
    skipped = {}
    usable = []
    for predictor in predictors:
        try:
            predictor.check(dataset)
        except NetTwinError as e:
            logger.warning(f"Skipping predictor {predictor.name}: {e}")
            skipped[predictor.name] = str(e)
            continue
        usable.append(predictor)
    table = {}
    for kpi in kpis:
        truth = dataset.targets(kpi)
        groups = [label for sample, label in zip(dataset, labels) for _ in sample.scenario.paths]
        table[kpi] = {'truth': truth, 'groups': np.array(groups, dtype=object), 'methods': {}}
    for predictor in usable:
        outputs = map_workers(_predict_job, [(predictor, s) for s in dataset], workers=workers)
        for kpi in kpis:
            if kpi not in predictor.kpis:
                continue
            values = [out[kpi] for out in outputs]
            table[kpi]['methods'][predictor.name] = np.concatenate(values) if values else np.zeros(0)
    return table, skipped


def compare(dataset, predictors, kpis, group_by='none', alpha=None, workers=1):
    """
    Evaluate every predictor on every sample and build the MetricReport.
    NMAE pools all (scenario, path) pairs of a group; pairs with an
    undefined truth or prediction are left out.
    """
    if alpha is None:
        alpha = settings.EVAL_ALPHA
    if group_by not in GROUPINGS:
        raise InvalidArgument(f"unknown grouping {group_by!r}, expected one of {GROUPINGS}")
    labels = [group_label(sample, group_by) for sample in dataset]
    table, skipped = collect(dataset, predictors, kpis, labels, workers=workers)
    rows, boxes, degenerate = [], [], []
    for kpi in kpis:
        truth, groups = table[kpi]['truth'], table[kpi]['groups']
        methods = table[kpi]['methods']
        for group in sorted(set(groups.tolist())):
            in_group = groups == group
            group_truth = truth[in_group]
            defined_truth = group_truth[np.isfinite(group_truth)]
            spread = iqr(defined_truth) if defined_truth.size >= 4 else 0.0
            if spread == 0:
                logger.warning(f"No NMAE for {kpi} / {group}: degenerate ground-truth spread")
                degenerate.append(f"{kpi}/{group}")
                spread = None
            truth_mean = float(defined_truth.mean()) if defined_truth.size else np.nan
            errors = {name: np.abs(group_truth - pred[in_group]) for name, pred in methods.items()}
            for name in sorted(errors):
                err = errors[name]
                valid = err[np.isfinite(err)]
                if valid.size == 0:
                    continue
                significant = []
                for other in sorted(errors):
                    if other == name:
                        continue
                    both = np.isfinite(err) & np.isfinite(errors[other])
                    if both.sum() >= 10 and signif_lower(err[both], errors[other][both], alpha):
                        significant.append(other)
                rows.append({
                    'method': name, 'kpi': kpi, 'group': group,
                    'nmae_mean': valid.mean() / spread if spread else np.nan,
                    'nmae_sd': valid.std() / spread if spread else np.nan,
                    'mae_mean': float(valid.mean()), 'mae_sd': float(valid.std()),
                    'n': int(valid.size), 'truth_mean': truth_mean,
                    'significant_vs': significant,
                })
                box = box_stats(valid)
                boxes.append({
                    'method': name, 'kpi': kpi, 'group': group,
                    'low_whisker': box.low_whisker, 'q1': box.q1, 'median': box.median,
                    'q3': box.q3, 'high_whisker': box.high_whisker,
                    'outliers': box.outliers, 'truth_mean': truth_mean,
                })
    return MetricReport(
        rows=pd.DataFrame(rows, columns=REPORT_COLUMNS),
        boxes=pd.DataFrame(boxes, columns=BOX_COLUMNS),
        skipped=skipped, degenerate=degenerate)
