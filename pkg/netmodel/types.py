"""Immutable value types describing topologies, paths and traffic."""
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

from django.conf import settings

from nettwin.exceptions import InvalidArgument


def _setting(name):
    return lambda: getattr(settings, name)


@dataclass(frozen=True)
class RadioConfig:
    """Transmit power and log-distance loss constants of a wireless scenario."""

    ptx_dbm: float = field(default_factory=_setting('RADIO_PTX_DBM'))
    pl0_db: float = field(default_factory=_setting('RADIO_PL0_DB'))
    gamma: float = field(default_factory=_setting('RADIO_GAMMA'))
    rx_sens_dbm: float = field(default_factory=_setting('RADIO_RX_SENS_DBM'))

    def __post_init__(self):
        if not self.gamma > 0:
            raise InvalidArgument(f"gamma must be positive, got {self.gamma}")
        if not self.ptx_dbm - self.rx_sens_dbm - self.pl0_db >= 0:
            raise InvalidArgument(
                "radio budget ptx - rx_sens - pl0 must be non-negative "
                f"(got {self.ptx_dbm} - {self.rx_sens_dbm} - {self.pl0_db})")

    def as_dict(self):
        return {
            'ptx_dbm': self.ptx_dbm,
            'pl0_db': self.pl0_db,
            'gamma': self.gamma,
            'rx_sens_dbm': self.rx_sens_dbm,
        }


@dataclass(frozen=True)
class Node:
    id: int
    position: Tuple[float, float]


@dataclass(frozen=True)
class Link:
    src: int
    dst: int
    capacity: float
    weight: float


@dataclass(frozen=True)
class NetworkGraph:
    """
    Directed network graph G = (N, L, E).

    Link ids are positions in `links`; generators emit links sorted by
    (src, dst). A graph with a radio config is wireless: carrier sense
    applies in the simulator and its link set must be symmetric.
    """

    nodes: Tuple[Node, ...]
    links: Tuple[Link, ...]
    family: str = 'custom'
    radio: Optional[RadioConfig] = None
    directed: bool = field(default=True, init=False)

    def __post_init__(self):
        object.__setattr__(self, 'nodes', tuple(self.nodes))
        object.__setattr__(self, 'links', tuple(self.links))
        for expected, node in enumerate(self.nodes):
            if node.id != expected:
                raise InvalidArgument(
                    f"node ids must be 0..{len(self.nodes) - 1} without gaps, "
                    f"found {node.id} at position {expected}")
        seen = set()
        for link in self.links:
            if not (0 <= link.src < len(self.nodes) and 0 <= link.dst < len(self.nodes)):
                raise InvalidArgument(f"link {link.src}->{link.dst} references an unknown node")
            if link.src == link.dst:
                raise InvalidArgument(f"self-loop on node {link.src}")
            if (link.src, link.dst) in seen:
                raise InvalidArgument(f"duplicate link {link.src}->{link.dst}")
            if not (link.weight > 0 and math.isfinite(link.weight)):
                raise InvalidArgument(f"link {link.src}->{link.dst} has invalid weight {link.weight}")
            if not link.capacity > 0:
                raise InvalidArgument(f"link {link.src}->{link.dst} has invalid capacity {link.capacity}")
            seen.add((link.src, link.dst))
        if self.wireless:
            for src, dst in seen:
                if (dst, src) not in seen:
                    raise InvalidArgument(
                        f"wireless graph is not symmetric: {src}->{dst} has no reverse link")
        object.__setattr__(self, '_link_ids', {
            (link.src, link.dst): index for index, link in enumerate(self.links)})

    @property
    def wireless(self):
        return self.radio is not None

    @property
    def num_nodes(self):
        return len(self.nodes)

    @property
    def num_links(self):
        return len(self.links)

    def link_id(self, src, dst):
        """Return the id of link src->dst, or None if absent."""
        return self._link_ids.get((src, dst))

    def out_links(self, node_id):
        return [index for index, link in enumerate(self.links) if link.src == node_id]

    def out_degree(self, node_id):
        return len(self.out_links(node_id))

    def distance(self, a, b):
        (xa, ya), (xb, yb) = self.nodes[a].position, self.nodes[b].position
        return math.hypot(xa - xb, ya - yb)

    def to_networkx(self):
        import networkx as nx

        graph = nx.DiGraph()
        graph.add_nodes_from(node.id for node in self.nodes)
        graph.add_edges_from(
            (link.src, link.dst, {'id': index, 'weight': link.weight})
            for index, link in enumerate(self.links))
        return graph


@dataclass(frozen=True)
class PathSpec:
    """Ordered sequence of link ids from `source` to `destination`."""

    source: int
    destination: int
    links: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, 'links', tuple(int(l) for l in self.links))

    @property
    def hops(self):
        return len(self.links)

    def node_sequence(self, graph):
        if not self.links:
            return [self.source]
        return [graph.links[self.links[0]].src] + [graph.links[l].dst for l in self.links]

    def validate(self, graph):
        """Check incidence, endpoints and simplicity against `graph`."""
        if not self.links:
            raise InvalidArgument("a path needs at least one link")
        for link_id in self.links:
            if not 0 <= link_id < graph.num_links:
                raise InvalidArgument(f"unknown link id {link_id}")
        for first, second in zip(self.links, self.links[1:]):
            if graph.links[first].dst != graph.links[second].src:
                raise InvalidArgument(f"links {first} and {second} are not incident")
        nodes = self.node_sequence(graph)
        if nodes[0] != self.source or nodes[-1] != self.destination:
            raise InvalidArgument(
                f"path endpoints {nodes[0]}->{nodes[-1]} do not match "
                f"{self.source}->{self.destination}")
        if len(set(nodes)) != len(nodes):
            raise InvalidArgument(f"path {nodes} repeats a node")
        return self


@dataclass(frozen=True)
class TrafficMatrix:
    """Per-path mean on/off durations (seconds) and the shared data rate (kb/s)."""

    rows: Tuple[Tuple[float, float], ...]
    data_rate: float

    def __post_init__(self):
        rows = tuple((float(on), float(off)) for on, off in self.rows)
        object.__setattr__(self, 'rows', rows)
        for on, off in rows:
            if not (on > 0 and off > 0):
                raise InvalidArgument(f"on/off means must be positive, got ({on}, {off})")
        if not self.data_rate > 0:
            raise InvalidArgument(f"data rate must be positive, got {self.data_rate}")

    def __len__(self):
        return len(self.rows)


@dataclass(frozen=True)
class Scenario:
    """One network configuration: topology, routed paths and their traffic."""

    graph: NetworkGraph
    paths: Tuple[PathSpec, ...]
    traffic: TrafficMatrix

    def __post_init__(self):
        object.__setattr__(self, 'paths', tuple(self.paths))
        if len(self.traffic) != len(self.paths):
            raise InvalidArgument(
                f"traffic has {len(self.traffic)} rows for {len(self.paths)} paths")
        for path in self.paths:
            path.validate(self.graph)

    @property
    def num_paths(self):
        return len(self.paths)
