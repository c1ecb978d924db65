import numpy as np

from nettwin.exceptions import InvalidArgument
from nettwin.seeding import derive_seed


def split_cv(n_samples, folds, seed):
    """
    Seeded shuffle cut into `folds` contiguous validation blocks, the
    remainder going to the earliest folds. Returns (train, val) index
    arrays per fold.
    """
    if hasattr(n_samples, '__len__'):
        n_samples = len(n_samples)
    if folds < 2:
        raise InvalidArgument(f"folds must be at least 2, got {folds}")
    if folds > n_samples:
        raise InvalidArgument(f"cannot split {n_samples} samples into {folds} folds")
    order = np.random.default_rng(derive_seed(seed, 'cv')).permutation(n_samples)
    base, extra = divmod(n_samples, folds)
    sizes = [base + (1 if fold < extra else 0) for fold in range(folds)]
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    splits = []
    for fold in range(folds):
        val = order[bounds[fold]:bounds[fold + 1]]
        train = np.concatenate([order[:bounds[fold]], order[bounds[fold + 1]:]])
        splits.append((train, val))
    return splits
