"""Disjoint-union batching of scenarios into flat index arrays."""
from dataclasses import dataclass

import numpy as np

from autodiff.layers import normalized_adjacency


@dataclass
class ScenarioBatch:
    """
    Several scenarios laid side by side: node, link and path ids of
    scenario i are shifted by the totals of scenarios 0..i-1.

    `scaled_degree` is each node's out-degree over the largest out-degree
    of its own scenario.

    `step_links[k]` holds the k-th link of every path (0 past the end)
    and `step_mask[k]` marks the paths that are at least k+1 links long.
    """

    num_nodes: int
    num_links: int
    num_paths: int
    tau: np.ndarray
    capacity: np.ndarray
    scaled_degree: np.ndarray
    link_src: np.ndarray
    step_links: np.ndarray
    step_mask: np.ndarray
    message_paths: np.ndarray
    message_links: np.ndarray
    adjacency: object
    path_offsets: np.ndarray

    @property
    def max_hops(self):
        return self.step_links.shape[0]


def build_batch(scenarios):
    scenarios = list(scenarios)
    node_offset = link_offset = 0
    tau, capacity, degree, link_src = [], [], [], []
    src_all, dst_all, weight_all = [], [], []
    sequences = []
    path_offsets = [0]
    for scenario in scenarios:
        graph = scenario.graph
        src = np.array([link.src for link in graph.links], dtype=np.int64)
        dst = np.array([link.dst for link in graph.links], dtype=np.int64)
        tau.extend(scenario.traffic.rows)
        capacity.extend(link.capacity for link in graph.links)
        counts = np.bincount(src, minlength=graph.num_nodes).astype(np.float64)
        top = counts.max() if counts.size else 0.0
        degree.append(counts / top if top > 0 else counts)
        link_src.append(src + node_offset)
        src_all.append(src + node_offset)
        dst_all.append(dst + node_offset)
        weight_all.append([link.weight for link in graph.links])
        sequences.extend([link + link_offset for link in path.links] for path in scenario.paths)
        node_offset += graph.num_nodes
        link_offset += graph.num_links
        path_offsets.append(path_offsets[-1] + scenario.num_paths)

    num_paths = len(sequences)
    max_hops = max((len(seq) for seq in sequences), default=0)
    step_links = np.zeros((max_hops, num_paths), dtype=np.int64)
    step_mask = np.zeros((max_hops, num_paths), dtype=bool)
    for p, seq in enumerate(sequences):
        step_links[:len(seq), p] = seq
        step_mask[:len(seq), p] = True
    message_steps, message_paths = np.nonzero(step_mask)

    concat = lambda parts, dtype: np.concatenate(parts).astype(dtype) if parts else np.zeros(0, dtype)
    src_all, dst_all = concat(src_all, np.int64), concat(dst_all, np.int64)
    weight_all = concat(weight_all, np.float64)
    return ScenarioBatch(
        num_nodes=node_offset,
        num_links=link_offset,
        num_paths=num_paths,
        tau=np.array(tau, dtype=np.float64).reshape(num_paths, 2),
        capacity=np.array(capacity, dtype=np.float64),
        scaled_degree=concat(degree, np.float64),
        link_src=concat(link_src, np.int64),
        step_links=step_links,
        step_mask=step_mask,
        message_paths=message_paths,
        message_links=step_links[message_steps, message_paths],
        adjacency=normalized_adjacency((src_all, dst_all, weight_all), num_nodes=node_offset),
        path_offsets=np.array(path_offsets, dtype=np.int64),
    )
