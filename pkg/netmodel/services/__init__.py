# Services package for the network model
from .topology import (
    edge_weight, gen_from_positions, gen_grid, gen_nsfnet, gen_parallel_star,
    max_link_distance, perturb,
)
from .routing import (
    all_shortest_paths, random_shortest_path, scenario_from_pairs,
    select_path_pairs, shortest_path,
)
from .traffic import sample_traffic_matrix

__all__ = [
    'edge_weight', 'gen_from_positions', 'gen_grid', 'gen_nsfnet',
    'gen_parallel_star', 'max_link_distance', 'perturb',
    'all_shortest_paths', 'random_shortest_path', 'scenario_from_pairs',
    'select_path_pairs', 'shortest_path', 'sample_traffic_matrix',
]
