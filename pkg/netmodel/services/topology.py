"""Topology generators: NSFNet, grid Wi-Fi, perturbed grid and Fig. 3-style flows."""
import logging
import math

import numpy as np
from django.conf import settings

from nettwin.exceptions import EmptyGraphError, InvalidArgument
from netmodel.types import Link, NetworkGraph, Node, RadioConfig

logger = logging.getLogger(__name__)

# 21 undirected edges of the 14-node NSFNet backbone
NSFNET_EDGES = (
    (0, 1), (0, 2), (0, 3), (1, 2), (1, 7), (2, 5), (3, 4), (3, 8),
    (4, 5), (4, 6), (5, 12), (5, 13), (6, 7), (7, 10), (8, 9), (8, 11),
    (9, 10), (9, 12), (10, 11), (10, 13), (11, 12),
)

# Schematic map layout (meters); positions play no role in wired mode
NSFNET_POSITIONS = (
    (0.0, 600.0), (150.0, 900.0), (200.0, 350.0), (550.0, 650.0),
    (800.0, 550.0), (950.0, 250.0), (1050.0, 800.0), (1250.0, 1000.0),
    (1350.0, 450.0), (1600.0, 650.0), (1800.0, 850.0), (1900.0, 450.0),
    (1700.0, 150.0), (2050.0, 650.0),
)

# Range tolerance for the link predicate (positions on an exact lattice)
RANGE_TOLERANCE = 1e-9


def max_link_distance(radio):
    """
    Largest distance (meters) at which the received power still meets the
    receiver sensitivity under the log-distance loss model, d0 = 1 m.
    """
    exponent = (radio.ptx_dbm - radio.rx_sens_dbm - radio.pl0_db) / (10.0 * radio.gamma)
    return 10.0 ** exponent


def edge_weight(d, cap=None):
    """Link strength 1 / ln(1 + d), clamped to at most `cap`."""
    if cap is None:
        cap = settings.EDGE_WEIGHT_CAP
    if not d > 0:
        raise InvalidArgument(f"distance must be positive, got {d}")
    return min(1.0 / math.log1p(d), cap)


def gen_nsfnet(capacity=None):
    """Standard NSFNet: 14 nodes, 42 unit-weight directed links."""
    if capacity is None:
        capacity = settings.WIRED_CAPACITY_KBPS
    nodes = [Node(i, position) for i, position in enumerate(NSFNET_POSITIONS)]
    pairs = sorted(set(NSFNET_EDGES) | {(b, a) for a, b in NSFNET_EDGES})
    links = [Link(src, dst, float(capacity), 1.0) for src, dst in pairs]
    return NetworkGraph(nodes=nodes, links=links, family='nsfnet')


def gen_from_positions(positions, radio, family='wireless', capacity=None):
    """
    Wireless graph over the given node positions: a symmetric pair of links
    joins every node pair within max_link_distance(radio).
    """
    if capacity is None:
        capacity = settings.WIRELESS_CAPACITY_KBPS
    d_max = max_link_distance(radio)
    nodes = [Node(i, (float(x), float(y))) for i, (x, y) in enumerate(positions)]
    links = []
    for a in nodes:
        for b in nodes:
            if a.id == b.id:
                continue
            d = math.hypot(a.position[0] - b.position[0], a.position[1] - b.position[1])
            if d <= d_max * (1.0 + RANGE_TOLERANCE):
                weight = edge_weight(d) if d > 0 else settings.EDGE_WEIGHT_CAP
                links.append(Link(a.id, b.id, float(capacity), weight))
    return NetworkGraph(nodes=nodes, links=links, family=family, radio=radio)


def gen_grid(rows, cols, spacing, radio=None):
    """Regular rows x cols Wi-Fi grid with `spacing` meters between neighbors."""
    if radio is None:
        radio = RadioConfig()
    if rows < 2 or cols < 2:
        raise InvalidArgument(f"grid needs at least 2x2 nodes, got {rows}x{cols}")
    if not spacing > 0:
        raise InvalidArgument(f"grid spacing must be positive, got {spacing}")
    positions = [(i * spacing, j * spacing) for i in range(rows) for j in range(cols)]
    graph = gen_from_positions(positions, radio, family='grid')
    if graph.num_links == 0:
        raise EmptyGraphError(
            f"radio range {max_link_distance(radio):.2f} m is shorter than the "
            f"grid spacing {spacing} m")
    logger.info(
        f"Built {rows}x{cols} grid at {spacing} m, ptx {radio.ptx_dbm} dBm: "
        f"{graph.num_links} links")
    return graph


def perturb(graph, radius, radio=None, seed=0):
    """
    Move every node to a uniform point of the disk of `radius` meters around
    its position and recompute the wireless link set.
    """
    if radio is None:
        radio = graph.radio or RadioConfig()
    if radius < 0:
        raise InvalidArgument(f"perturbation radius must be non-negative, got {radius}")
    rng = np.random.default_rng(seed)
    positions = []
    for node in graph.nodes:
        u_radius, u_angle = rng.random(2)
        r = radius * math.sqrt(u_radius)
        theta = 2.0 * math.pi * u_angle
        x, y = node.position
        positions.append((x + r * math.cos(theta), y + r * math.sin(theta)))
    family = 'perturbed-grid' if graph.family in ('grid', 'perturbed-grid') else graph.family
    return gen_from_positions(positions, radio, family=family)


def gen_parallel_star(kind, interference, radio=None):
    """
    Three single-hop flows that share no link, laid out in parallel pairs
    or as a star around one source. With interference the nodes sit close
    enough for extra links to appear between flows.

    Returns the graph and the (source, destination) pairs of the flows.
    """
    if radio is None:
        radio = RadioConfig()
    reach = max_link_distance(radio)
    if kind == 'parallel':
        pair_gap = 0.75 * reach if interference else 2.0 * reach
        hop = 0.55 * reach
        positions = []
        for i in range(3):
            positions.extend([(i * pair_gap, 0.0), (i * pair_gap, hop)])
        pairs = [(0, 1), (2, 3), (4, 5)]
    elif kind == 'star':
        arm = 0.5 * reach if interference else 0.7 * reach
        positions = [(0.0, 0.0)]
        for angle in (90.0, 210.0, 330.0):
            theta = math.radians(angle)
            positions.append((arm * math.cos(theta), arm * math.sin(theta)))
        pairs = [(0, 1), (0, 2), (0, 3)]
    else:
        raise InvalidArgument(f"unknown layout {kind!r}, expected 'parallel' or 'star'")
    family = f"{kind}-{'interfering' if interference else 'clear'}"
    return gen_from_positions(positions, radio, family=family), pairs
