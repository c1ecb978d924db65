"""Static minimum-hop routing with deterministic tie-breaking."""
import logging

import networkx as nx
import numpy as np

from nettwin.exceptions import InvalidArgument, NoPathError
from netmodel.types import PathSpec, Scenario

logger = logging.getLogger(__name__)


def _check_endpoints(graph, src, dst):
    for node in (src, dst):
        if not 0 <= node < graph.num_nodes:
            raise InvalidArgument(f"node {node} is not in the graph")
    if src == dst:
        raise InvalidArgument(f"source and destination coincide ({src})")


def _hops_to(graph, dst):
    """Hop distance from every node that can reach `dst`."""
    return nx.single_source_shortest_path_length(graph.to_networkx().reverse(copy=False), dst)


def _path_from_nodes(graph, nodes):
    links = [graph.link_id(a, b) for a, b in zip(nodes, nodes[1:])]
    return PathSpec(nodes[0], nodes[-1], links)


def shortest_path(graph, src, dst):
    """
    Minimum-hop path from src to dst. Among equal-hop paths the one with the
    lexicographically smallest node sequence wins.
    """
    _check_endpoints(graph, src, dst)
    hops = _hops_to(graph, dst)
    if src not in hops:
        raise NoPathError(f"node {dst} is unreachable from node {src}")
    nodes = [src]
    current = src
    while current != dst:
        # smallest-id successor that is one hop closer keeps the sequence minimal
        current = min(
            link.dst for link in graph.links
            if link.src == current and hops.get(link.dst) == hops[current] - 1)
        nodes.append(current)
    return _path_from_nodes(graph, nodes)


def all_shortest_paths(graph, src, dst):
    """Every minimum-hop path from src to dst, sorted by node sequence."""
    _check_endpoints(graph, src, dst)
    try:
        sequences = sorted(nx.all_shortest_paths(graph.to_networkx(), src, dst))
    except nx.NetworkXNoPath:
        raise NoPathError(f"node {dst} is unreachable from node {src}")
    return [_path_from_nodes(graph, nodes) for nodes in sequences]


def random_shortest_path(graph, src, dst, rng):
    """Uniform draw among the equal-hop alternatives of src -> dst."""
    candidates = all_shortest_paths(graph, src, dst)
    return candidates[int(rng.integers(len(candidates)))]


def select_path_pairs(graph, count, max_hops, seed):
    """Seeded sample without replacement of (src, dst) pairs 1..max_hops apart."""
    if count < 0:
        raise InvalidArgument(f"pair count must be non-negative, got {count}")
    if count == 0:
        return []
    lengths = dict(nx.all_pairs_shortest_path_length(graph.to_networkx()))
    candidates = sorted(
        (src, dst)
        for src, reach in lengths.items()
        for dst, hops in reach.items()
        if 1 <= hops <= max_hops)
    if count > len(candidates):
        raise InvalidArgument(
            f"requested {count} pairs but only {len(candidates)} are within {max_hops} hops")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(candidates), size=count, replace=False)
    return [candidates[int(i)] for i in chosen]


def scenario_from_pairs(graph, pairs, traffic):
    """Route every pair with shortest_path and bundle a Scenario."""
    paths = [shortest_path(graph, src, dst) for src, dst in pairs]
    return Scenario(graph=graph, paths=paths, traffic=traffic)
