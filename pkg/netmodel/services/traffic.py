import numpy as np

from nettwin.exceptions import InvalidArgument
from netmodel.types import TrafficMatrix


def sample_traffic_matrix(num_paths, mean_set, data_rate, seed):
    """Draw every path's (tau_on, tau_off) uniformly from `mean_set`."""
    values = sorted(float(v) for v in set(mean_set))
    if not values:
        raise InvalidArgument("mean set must not be empty")
    if values[0] <= 0:
        raise InvalidArgument(f"mean values must be positive, got {values}")
    rng = np.random.default_rng(seed)
    draws = rng.choice(np.asarray(values), size=(num_paths, 2))
    return TrafficMatrix(rows=[tuple(row) for row in draws.tolist()], data_rate=float(data_rate))
