"""
Error metrics and distribution statistics. Quantiles everywhere use
linear interpolation between order statistics (numpy's default method).
"""
from collections import namedtuple

import numpy as np
from scipy import stats

from nettwin.exceptions import DegenerateSpreadError, InvalidArgument

MaeResult = namedtuple('MaeResult', 'errors mean')
BoxStats = namedtuple('BoxStats', 'low_whisker q1 median q3 high_whisker outliers')

# exact signed-rank distribution below this many pairs
EXACT_WILCOXON_LIMIT = 25


def _floats(values):
    return np.array([np.nan if v is None else v for v in np.ravel(values)], dtype=np.float64)


def defined_pairs(truth, pred):
    """Both arrays restricted to positions where both are defined."""
    truth, pred = _floats(truth), _floats(pred)
    if truth.shape != pred.shape:
        raise InvalidArgument(f"length mismatch: {truth.size} truth vs {pred.size} predictions")
    keep = np.isfinite(truth) & np.isfinite(pred)
    return truth[keep], pred[keep]


def mae(truth, pred):
    """Absolute errors over the defined pairs and their mean."""
    truth, pred = defined_pairs(truth, pred)
    if truth.size == 0:
        raise InvalidArgument("no defined (truth, prediction) pairs")
    errors = np.abs(truth - pred)
    return MaeResult(errors, float(errors.mean()))


def quartiles(values):
    return np.percentile(values, [25, 50, 75])


def iqr(values):
    values = _floats(values)
    values = values[np.isfinite(values)]
    if values.size < 4:
        raise InvalidArgument(f"IQR needs at least 4 defined values, got {values.size}")
    q1, _, q3 = quartiles(values)
    return float(q3 - q1)


def nmae(truth, pred):
    """MAE divided by the IQR of the defined truth values."""
    truth, pred = defined_pairs(truth, pred)
    spread = iqr(truth)
    if spread == 0:
        raise DegenerateSpreadError("ground truth has zero inter-quartile range")
    return mae(truth, pred).mean / spread


def box_stats(values):
    """Tukey box: whiskers at the furthest points inside 1.5 IQR of the quartiles."""
    values = _floats(values)
    values = np.sort(values[np.isfinite(values)])
    if values.size == 0:
        raise InvalidArgument("box statistics need at least one value")
    q1, median, q3 = quartiles(values)
    reach = 1.5 * (q3 - q1)
    inside = values[(values >= q1 - reach) & (values <= q3 + reach)]
    outliers = values[(values < q1 - reach) | (values > q3 + reach)]
    return BoxStats(float(inside.min()), float(q1), float(median), float(q3),
                    float(inside.max()), outliers.tolist())


def signif_lower(errors_a, errors_b, alpha=0.05):
    """
    One-sided paired Wilcoxon signed-rank test that errors_a are smaller
    than errors_b. All-zero differences are never significant.
    """
    a, b = _floats(errors_a), _floats(errors_b)
    if a.shape != b.shape:
        raise InvalidArgument(f"paired samples differ in length: {a.size} vs {b.size}")
    if a.size < 10:
        raise InvalidArgument(f"significance test needs at least 10 pairs, got {a.size}")
    differences = a - b
    if not np.any(differences):
        return False
    method = 'exact' if a.size < EXACT_WILCOXON_LIMIT else 'approx'
    result = stats.wilcoxon(differences, alternative='less', method=method)
    return bool(result.pvalue < alpha)
