import math
from collections import Counter

import networkx as nx
import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings as hypothesis_settings, strategies as st

from nettwin.exceptions import EmptyGraphError, InvalidArgument, NoPathError
from .serializers import TrafficSerializer, graph_from_dict, graph_to_dict, paths_from_lists
from .services import (
    all_shortest_paths, edge_weight, gen_from_positions, gen_grid, gen_nsfnet,
    gen_parallel_star, max_link_distance, perturb, random_shortest_path,
    sample_traffic_matrix, scenario_from_pairs, select_path_pairs, shortest_path,
)
from .types import Link, NetworkGraph, Node, PathSpec, RadioConfig, TrafficMatrix


def radio(ptx, pl0=41.0):
    return RadioConfig(ptx_dbm=ptx, pl0_db=pl0, gamma=3.0, rx_sens_dbm=-77.0)


def link_pairs(graph):
    return {(link.src, link.dst) for link in graph.links}


class RadioConfigTests(SimpleTestCase):
    def test_defaults_come_from_settings(self):
        config = RadioConfig()
        self.assertEqual(config.ptx_dbm, 16.0)
        self.assertEqual(config.pl0_db, 41.0)

    def test_rejects_non_positive_gamma(self):
        with self.assertRaises(InvalidArgument):
            RadioConfig(ptx_dbm=16, pl0_db=41, gamma=0, rx_sens_dbm=-77)

    def test_rejects_negative_budget(self):
        with self.assertRaises(InvalidArgument):
            RadioConfig(ptx_dbm=-50, pl0_db=41, gamma=3, rx_sens_dbm=-77)


class MaxLinkDistanceTests(SimpleTestCase):
    def test_low_power_tier(self):
        d = max_link_distance(radio(12, pl0=40.05))
        self.assertAlmostEqual(d, 42.83, delta=0.1)
        self.assertAlmostEqual(12 - 40.05 - 30 * math.log10(d), -77, places=9)

    def test_high_power_tier_reaches_two_hops(self):
        d = max_link_distance(radio(20, pl0=40.05))
        self.assertAlmostEqual(d, 79.13, delta=0.1)
        self.assertGreater(d, 60.0)

    def test_zero_budget_is_one_meter(self):
        self.assertEqual(max_link_distance(radio(-36.0)), 1.0)


class EdgeWeightTests(SimpleTestCase):
    def test_unit_log(self):
        self.assertAlmostEqual(edge_weight(math.e - 1), 1.0, places=12)

    def test_double_log(self):
        self.assertAlmostEqual(edge_weight(math.e ** 2 - 1), 0.5, places=12)

    def test_grid_spacing(self):
        self.assertAlmostEqual(edge_weight(30.0), 1 / math.log(31), places=12)
        self.assertAlmostEqual(edge_weight(30.0), 0.2912, places=4)

    def test_rejects_non_positive_distance(self):
        for d in (0.0, -1.0):
            with self.assertRaises(InvalidArgument):
                edge_weight(d)

    def test_tiny_distance_is_clamped(self):
        self.assertEqual(edge_weight(1e-9), 10.0)

    @given(st.floats(min_value=0.2, max_value=1e4), st.floats(min_value=1e-3, max_value=1e3))
    def test_strictly_decreasing_above_clamp(self, d, delta):
        self.assertGreater(edge_weight(d), edge_weight(d + delta))


class NsfnetTests(SimpleTestCase):
    def setUp(self):
        self.graph = gen_nsfnet()

    def test_counts(self):
        self.assertEqual(self.graph.num_nodes, 14)
        self.assertEqual(self.graph.num_links, 42)

    def test_unweighted_and_wired(self):
        self.assertTrue(all(link.weight == 1.0 for link in self.graph.links))
        self.assertTrue(all(link.capacity == 1000.0 for link in self.graph.links))
        self.assertFalse(self.graph.wireless)

    def test_strongly_connected(self):
        self.assertTrue(nx.is_strongly_connected(self.graph.to_networkx()))


class GridTests(SimpleTestCase):
    def test_node_count_and_positions(self):
        graph = gen_grid(4, 4, 30.0)
        self.assertEqual(graph.num_nodes, 16)
        self.assertEqual(graph.nodes[5].position, (30.0, 30.0))

    def test_density_tiers(self):
        counts = [gen_grid(4, 4, 30.0, radio(ptx)).num_links for ptx in (12, 16, 20)]
        self.assertEqual(counts, [48, 84, 164])

    def test_links_match_range_oracle(self):
        config = radio(16)
        graph = gen_grid(4, 4, 30.0, config)
        d_max = max_link_distance(config)
        expected = {
            (a.id, b.id) for a in graph.nodes for b in graph.nodes
            if a.id != b.id and graph.distance(a.id, b.id) <= d_max}
        self.assertEqual(link_pairs(graph), expected)
        for link in graph.links:
            self.assertAlmostEqual(link.weight, edge_weight(graph.distance(link.src, link.dst)))
            self.assertEqual(link.capacity, 6000.0)

    def test_invalid_spacing(self):
        with self.assertRaises(InvalidArgument):
            gen_grid(4, 4, 0.0)
        with self.assertRaises(InvalidArgument):
            gen_grid(1, 4, 30.0)

    def test_short_range_gives_empty_graph(self):
        ptx = 41.0 - 77.0 + 30.0 * math.log10(29.0)
        self.assertAlmostEqual(max_link_distance(radio(ptx)), 29.0)
        with self.assertRaises(EmptyGraphError):
            gen_grid(2, 2, 30.0, radio(ptx))

    @hypothesis_settings(max_examples=30, deadline=None)
    @given(st.floats(min_value=9.0, max_value=24.0), st.floats(min_value=0.0, max_value=6.0))
    def test_raising_power_never_removes_links(self, ptx, extra):
        low = gen_grid(4, 4, 30.0, radio(ptx))
        high = gen_grid(4, 4, 30.0, radio(ptx + extra))
        self.assertLessEqual(link_pairs(low), link_pairs(high))
        self.assertTrue(all((b, a) in link_pairs(low) for a, b in link_pairs(low)))


class PerturbTests(SimpleTestCase):
    def setUp(self):
        self.grid = gen_grid(4, 4, 30.0)

    def test_zero_radius_is_identity(self):
        moved = perturb(self.grid, 0.0, seed=3)
        self.assertEqual([n.position for n in moved.nodes], [n.position for n in self.grid.nodes])
        self.assertEqual(link_pairs(moved), link_pairs(self.grid))

    def test_deterministic(self):
        self.assertEqual(perturb(self.grid, 10.0, seed=7), perturb(self.grid, 10.0, seed=7))

    def test_negative_radius_rejected(self):
        with self.assertRaises(InvalidArgument):
            perturb(self.grid, -1.0)

    def test_nodes_stay_within_radius_and_links_change(self):
        changed = 0
        d_max = max_link_distance(self.grid.radio)
        for seed in range(40):
            moved = perturb(self.grid, 10.0, seed=seed)
            self.assertEqual(moved.family, 'perturbed-grid')
            for before, after in zip(self.grid.nodes, moved.nodes):
                self.assertLessEqual(math.dist(before.position, after.position), 10.0 + 1e-9)
            expected = {
                (a.id, b.id) for a in moved.nodes for b in moved.nodes
                if a.id != b.id and moved.distance(a.id, b.id) <= d_max * (1 + 1e-9)}
            self.assertEqual(link_pairs(moved), expected)
            changed += link_pairs(moved) != link_pairs(self.grid)
        self.assertGreater(changed, 0)


class ShortestPathTests(SimpleTestCase):
    def test_adjacent_nodes_use_direct_link(self):
        graph = gen_grid(4, 4, 30.0)
        path = shortest_path(graph, 0, 1)
        self.assertEqual(path.hops, 1)
        self.assertEqual(path.links, (graph.link_id(0, 1),))

    def test_ties_break_lexicographically(self):
        graph = gen_grid(4, 4, 30.0, radio(12))
        path = shortest_path(graph, 0, 5)
        self.assertEqual(path.node_sequence(graph), [0, 1, 5])
        self.assertEqual(
            [p.node_sequence(graph) for p in all_shortest_paths(graph, 0, 5)],
            [[0, 1, 5], [0, 4, 5]])

    def test_hop_count_matches_bfs(self):
        graph = gen_nsfnet()
        lengths = dict(nx.all_pairs_shortest_path_length(graph.to_networkx()))
        diameter = max(max(row.values()) for row in lengths.values())
        for src in range(graph.num_nodes):
            for dst in range(graph.num_nodes):
                if src == dst:
                    continue
                path = shortest_path(graph, src, dst)
                path.validate(graph)
                self.assertEqual(path.hops, lengths[src][dst])
                self.assertTrue(1 <= path.hops <= diameter)

    def test_unreachable_destination(self):
        nsfnet = gen_nsfnet()
        graph = NetworkGraph(
            nodes=nsfnet.nodes,
            links=[link for link in nsfnet.links if 13 not in (link.src, link.dst)])
        with self.assertRaises(NoPathError):
            shortest_path(graph, 0, 13)
        with self.assertRaises(NoPathError):
            all_shortest_paths(graph, 0, 13)

    def test_invalid_endpoints(self):
        graph = gen_nsfnet()
        with self.assertRaises(InvalidArgument):
            shortest_path(graph, 2, 2)
        with self.assertRaises(InvalidArgument):
            shortest_path(graph, 0, 99)

    def test_random_shortest_path_covers_alternatives(self):
        graph = gen_grid(4, 4, 30.0, radio(12))
        rng = np.random.default_rng(0)
        drawn = Counter(
            tuple(random_shortest_path(graph, 0, 5, rng).node_sequence(graph)) for _ in range(200))
        self.assertEqual(set(drawn), {(0, 1, 5), (0, 4, 5)})


class PathPairTests(SimpleTestCase):
    def setUp(self):
        self.graph = gen_nsfnet()

    def test_nsfnet_pairs_within_three_hops(self):
        pairs = select_path_pairs(self.graph, 10, 3, seed=2023)
        self.assertEqual(len(pairs), 10)
        self.assertEqual(len(set(pairs)), 10)
        lengths = dict(nx.all_pairs_shortest_path_length(self.graph.to_networkx()))
        for src, dst in pairs:
            self.assertTrue(1 <= lengths[src][dst] <= 3)

    def test_zero_count(self):
        self.assertEqual(select_path_pairs(self.graph, 0, 3, seed=1), [])

    def test_same_seed_same_pairs(self):
        self.assertEqual(
            select_path_pairs(self.graph, 10, 3, seed=5), select_path_pairs(self.graph, 10, 3, seed=5))

    def test_infeasible_count(self):
        with self.assertRaises(InvalidArgument):
            select_path_pairs(self.graph, 14 * 13 + 1, 10, seed=0)

    def test_scenario_from_pairs(self):
        pairs = select_path_pairs(self.graph, 10, 3, seed=2023)
        traffic = sample_traffic_matrix(10, [1, 10, 20], 100.0, seed=0)
        scenario = scenario_from_pairs(self.graph, pairs, traffic)
        self.assertEqual(scenario.num_paths, 10)
        self.assertEqual([(p.source, p.destination) for p in scenario.paths], pairs)


class TrafficTests(SimpleTestCase):
    def test_singleton_set(self):
        traffic = sample_traffic_matrix(3, {5}, 100.0, seed=0)
        self.assertEqual(traffic.rows, ((5.0, 5.0),) * 3)

    def test_uniform_frequencies(self):
        traffic = sample_traffic_matrix(50000, {1, 10, 20}, 100.0, seed=11)
        counts = Counter(value for row in traffic.rows for value in row)
        self.assertEqual(set(counts), {1.0, 10.0, 20.0})
        for value in counts.values():
            self.assertAlmostEqual(value / 100000, 1 / 3, delta=0.02)

    def test_data_rate_carried(self):
        self.assertEqual(sample_traffic_matrix(10, {1, 10, 20}, 100.0, seed=0).data_rate, 100.0)

    def test_empty_set_rejected(self):
        with self.assertRaises(InvalidArgument):
            sample_traffic_matrix(3, set(), 100.0, seed=0)

    def test_invalid_rows_rejected(self):
        with self.assertRaises(InvalidArgument):
            TrafficMatrix(rows=[(0.0, 1.0)], data_rate=100.0)


class GraphInvariantTests(SimpleTestCase):
    def nodes(self, count):
        return [Node(i, (float(i), 0.0)) for i in range(count)]

    def test_rejects_gaps_in_ids(self):
        with self.assertRaises(InvalidArgument):
            NetworkGraph(nodes=[Node(0, (0, 0)), Node(2, (1, 0))], links=[])

    def test_rejects_self_loops_and_duplicates(self):
        with self.assertRaises(InvalidArgument):
            NetworkGraph(nodes=self.nodes(2), links=[Link(0, 0, 1.0, 1.0)])
        with self.assertRaises(InvalidArgument):
            NetworkGraph(nodes=self.nodes(2), links=[Link(0, 1, 1.0, 1.0)] * 2)

    def test_rejects_bad_weight_and_capacity(self):
        for weight, capacity in ((0.0, 1.0), (math.inf, 1.0), (1.0, 0.0)):
            with self.assertRaises(InvalidArgument):
                NetworkGraph(nodes=self.nodes(2), links=[Link(0, 1, capacity, weight)])

    def test_wireless_graph_must_be_symmetric(self):
        with self.assertRaises(InvalidArgument):
            NetworkGraph(nodes=self.nodes(2), links=[Link(0, 1, 1.0, 1.0)], radio=RadioConfig())

    def test_path_validation(self):
        graph = gen_grid(4, 4, 30.0, radio(12))
        a, b = graph.link_id(0, 1), graph.link_id(1, 2)
        PathSpec(0, 2, [a, b]).validate(graph)
        with self.assertRaises(InvalidArgument):
            PathSpec(0, 2, [b, a]).validate(graph)
        with self.assertRaises(InvalidArgument):
            PathSpec(0, 0, [a, graph.link_id(1, 0)]).validate(graph)


class ParallelStarTests(SimpleTestCase):
    def test_flows_are_single_hop_and_disjoint(self):
        for kind in ('parallel', 'star'):
            for interference in (False, True):
                graph, pairs = gen_parallel_star(kind, interference)
                paths = [shortest_path(graph, src, dst) for src, dst in pairs]
                self.assertTrue(all(path.hops == 1 for path in paths))
                self.assertEqual(len({path.links for path in paths}), 3)

    def test_interference_adds_links(self):
        for kind in ('parallel', 'star'):
            clear, _ = gen_parallel_star(kind, False)
            dense, _ = gen_parallel_star(kind, True)
            self.assertGreater(dense.num_links, clear.num_links)

    def test_star_center_degree(self):
        for interference in (False, True):
            graph, _ = gen_parallel_star('star', interference)
            self.assertEqual(graph.out_degree(0), 3)
        graph, _ = gen_parallel_star('parallel', False)
        self.assertEqual(graph.out_degree(0), 1)

    def test_unknown_layout(self):
        with self.assertRaises(InvalidArgument):
            gen_parallel_star('ring', False)


class TopologySerializerTests(SimpleTestCase):
    def test_grid_survives_json(self):
        graph = gen_grid(4, 4, 30.0)
        data = graph_to_dict(graph)
        self.assertEqual(set(data['nodes'][0]), {'id', 'pos'})
        self.assertEqual(set(data['links'][0]), {'src', 'dst', 'capacity_kbps', 'weight'})
        self.assertEqual(graph_from_dict(data), graph)

    def test_invalid_topology_rejected(self):
        data = graph_to_dict(gen_nsfnet())
        data['links'].append(dict(data['links'][0]))
        with self.assertRaises(InvalidArgument):
            graph_from_dict(data)

    def test_paths_from_lists(self):
        graph = gen_nsfnet()
        path = shortest_path(graph, 0, 10)
        self.assertEqual(paths_from_lists(graph, [list(path.links)]), [path])
        with self.assertRaises(InvalidArgument):
            paths_from_lists(graph, [[999]])

    def test_wireless_positions_are_kept(self):
        graph = gen_from_positions([(0.0, 0.0), (10.0, 0.0)], RadioConfig())
        self.assertEqual(graph_from_dict(graph_to_dict(graph)).nodes[1].position, (10.0, 0.0))


class TrafficSerializerTests(SimpleTestCase):
    def test_builds_the_matrix(self):
        serializer = TrafficSerializer(data={'traffic': [[1, 10], [20, 1]], 'data_rate_kbps': 150})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.validated_data['matrix'],
                         TrafficMatrix(rows=[(1.0, 10.0), (20.0, 1.0)], data_rate=150.0))

    def test_non_positive_mean_rejected(self):
        serializer = TrafficSerializer(data={'traffic': [[0, 10]], 'data_rate_kbps': 150})
        self.assertFalse(serializer.is_valid())

    def test_row_needs_two_values(self):
        serializer = TrafficSerializer(data={'traffic': [[1, 10, 3]], 'data_rate_kbps': 150})
        self.assertFalse(serializer.is_valid())
        self.assertIn('traffic', serializer.errors)
