import math
from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase, tag
from scipy import stats

from nettwin.exceptions import InvalidArgument
from netmodel.services import (
    gen_from_positions, gen_grid, gen_nsfnet, max_link_distance, sample_traffic_matrix,
    scenario_from_pairs, select_path_pairs, shortest_path,
)
from netmodel.types import Link, NetworkGraph, Node, PathSpec, RadioConfig, TrafficMatrix
from .serializers import kpis_from_dicts, kpis_to_dicts
from .services import (
    SimTrace, exponential_from_uniform, kpis_from_records, sample_onoff, simulate, simulate_avg,
)
from .types import FlowKpis, SimConfig


def wired_pair(capacity):
    nodes = [Node(0, (0.0, 0.0)), Node(1, (1.0, 0.0))]
    links = [Link(0, 1, capacity, 1.0), Link(1, 0, capacity, 1.0)]
    return NetworkGraph(nodes=nodes, links=links)


def sim_config(**overrides):
    base = SimConfig(
        duration=30.0, packet_size=512, queue_capacity=100, backoff_mean=0.001,
        prop_delay=1e-5, seed=0)
    return replace(base, **overrides)


class OnOffTests(SimpleTestCase):
    def test_median_inverse_cdf(self):
        self.assertAlmostEqual(exponential_from_uniform(1.0, 0.5), math.log(2), places=12)

    def test_sample_means_and_variance(self):
        rng = np.random.default_rng(1)
        draws = np.array([sample_onoff(10.0, 10.0, rng) for _ in range(1_000_000 // 2)])
        flat = draws.ravel()
        self.assertAlmostEqual(flat.mean(), 10.0, delta=0.05)
        self.assertAlmostEqual(flat.var(), 100.0, delta=2.0)


class KpiRecordTests(SimpleTestCase):
    def setUp(self):
        self.config = sim_config(duration=10.0)

    def test_two_point_formulas(self):
        kpis = kpis_from_records([(0.0, 0.010), (1.0, 1.014)], self.config)
        self.assertAlmostEqual(kpis.delay_ms, 12.0, places=9)
        self.assertAlmostEqual(kpis.jitter_ms, 4.0, places=9)

    def test_all_dropped(self):
        kpis = kpis_from_records([(float(i), None) for i in range(5)], self.config)
        self.assertEqual((kpis.tx_packets, kpis.rx_packets, kpis.drops), (5, 0, 5))
        self.assertEqual(kpis.throughput_kbps, 0.0)
        self.assertIsNone(kpis.delay_ms)
        self.assertIsNone(kpis.jitter_ms)

    def test_empty_records(self):
        kpis = kpis_from_records([], self.config)
        self.assertEqual((kpis.tx_packets, kpis.rx_packets, kpis.drops), (0, 0, 0))
        self.assertIsNone(kpis.delay_ms)

    def test_single_packet_has_no_jitter(self):
        kpis = kpis_from_records([(0.0, 0.5)], self.config)
        self.assertAlmostEqual(kpis.delay_ms, 500.0)
        self.assertIsNone(kpis.jitter_ms)

    def test_matches_direct_recomputation(self):
        rng = np.random.default_rng(4)
        sends = np.sort(rng.uniform(0, 10, 1000))
        delays = rng.uniform(0.001, 0.2, 1000)
        dropped = rng.random(1000) < 0.1
        records = [(s, None if lost else s + d) for s, d, lost in zip(sends, delays, dropped)]
        kpis = kpis_from_records(records, self.config)

        delivered = sorted(
            (s + d, i, d * 1000) for i, (s, d, lost) in enumerate(zip(sends, delays, dropped))
            if not lost)
        in_order = [delay for _, _, delay in delivered]
        self.assertEqual(kpis.rx_packets, len(in_order))
        self.assertAlmostEqual(kpis.delay_ms, sum(in_order) / len(in_order), places=9)
        expected_jitter = sum(abs(b - a) for a, b in zip(in_order, in_order[1:])) / (len(in_order) - 1)
        self.assertAlmostEqual(kpis.jitter_ms, expected_jitter, places=9)
        self.assertEqual(kpis.drops, int(dropped.sum()))
        self.assertAlmostEqual(kpis.throughput_kbps, len(in_order) * 512 * 8 / 10.0 / 1000)


class SimulateTests(SimpleTestCase):
    def test_uncontended_pipeline_delay(self):
        graph = wired_pair(1000.0)
        path = shortest_path(graph, 0, 1)
        traffic = TrafficMatrix(rows=[(5.0, 1.0)], data_rate=10.0)
        config = sim_config(duration=20.0)
        trace = SimTrace()
        [kpis] = simulate(graph, [path], traffic, config, trace=trace)
        expected = (512 * 8 / 1_000_000 + 1e-5) * 1000
        self.assertGreater(kpis.rx_packets, 1)
        self.assertEqual(kpis.drops, 0)
        self.assertAlmostEqual(kpis.delay_ms, expected, places=9)
        self.assertAlmostEqual(kpis.jitter_ms, 0.0, places=9)

    def test_saturated_link_caps_throughput(self):
        graph = wired_pair(100.0)
        path = shortest_path(graph, 0, 1)
        traffic = TrafficMatrix(rows=[(1e6, 1e-9)], data_rate=200.0)
        [kpis] = simulate(graph, [path], traffic, sim_config(duration=300.0))
        self.assertGreater(kpis.drops, 0)
        self.assertAlmostEqual(kpis.throughput_kbps, 100.0, delta=2.0)

    def test_count_mismatch(self):
        graph = wired_pair(100.0)
        path = shortest_path(graph, 0, 1)
        with self.assertRaises(InvalidArgument):
            simulate(graph, [path], TrafficMatrix(rows=[(1, 1), (1, 1)], data_rate=50.0), sim_config())

    def test_conservation_and_throughput_formula(self):
        graph = gen_grid(4, 4, 30.0)
        pairs = [(0, 15), (3, 12), (5, 10), (1, 14)]
        paths = [shortest_path(graph, src, dst) for src, dst in pairs]
        traffic = TrafficMatrix(rows=[(10.0, 1.0)] * 4, data_rate=1500.0)
        config = sim_config(duration=5.0, queue_capacity=5)
        for kpis in simulate(graph, paths, traffic, config):
            self.assertEqual(kpis.drops + kpis.rx_packets, kpis.tx_packets)
            self.assertAlmostEqual(
                kpis.throughput_kbps, kpis.rx_packets * 512 * 8 / 5.0 / 1000, delta=1e-9)

    def test_deterministic(self):
        graph = gen_grid(4, 4, 30.0)
        paths = [shortest_path(graph, 0, 15), shortest_path(graph, 12, 3)]
        traffic = TrafficMatrix(rows=[(1.0, 10.0), (20.0, 1.0)], data_rate=150.0)
        config = sim_config(duration=10.0, seed=9)
        self.assertEqual(simulate(graph, paths, traffic, config), simulate(graph, paths, traffic, config))

    def test_wireless_blocking_and_fifo(self):
        graph = gen_grid(4, 4, 30.0)
        radius = max_link_distance(graph.radio)
        paths = [shortest_path(graph, 0, 10), shortest_path(graph, 15, 5), shortest_path(graph, 3, 12)]
        traffic = TrafficMatrix(rows=[(5.0, 1.0)] * 3, data_rate=2000.0)
        trace = SimTrace()
        simulate(graph, paths, traffic, sim_config(duration=3.0, queue_capacity=10), trace=trace)
        spans = sorted(trace.transmissions)
        self.assertTrue(spans)
        for i, (start, end, node, _, _) in enumerate(spans):
            for other_start, other_end, other_node, _, _ in spans[i + 1:]:
                if other_start >= end:
                    break
                self.assertGreater(graph.distance(node, other_node), radius)

        for link_id in range(graph.num_links):
            enqueued = [uid for _, link, uid in trace.enqueues if link == link_id]
            served = [uid for _, _, _, link, uid in sorted(trace.transmissions) if link == link_id]
            self.assertEqual(served, enqueued)

    def test_crossing_flows_wait_longer_than_disjoint_flows(self):
        radio = RadioConfig()
        reach = max_link_distance(radio)
        arm = 0.6 * reach
        crossing = gen_from_positions(
            [(-arm, 0.0), (arm, 0.0), (0.0, arm), (0.0, -arm), (0.0, 0.0)], radio)
        crossing_paths = [
            PathSpec(0, 1, [crossing.link_id(0, 4), crossing.link_id(4, 1)]),
            PathSpec(2, 3, [crossing.link_id(2, 4), crossing.link_id(4, 3)]),
        ]
        far = 10 * reach
        disjoint = gen_from_positions(
            [(-arm, 0.0), (0.0, 0.0), (arm, 0.0), (-arm, far), (0.0, far), (arm, far)], radio)
        disjoint_paths = [
            PathSpec(0, 2, [disjoint.link_id(0, 1), disjoint.link_id(1, 2)]),
            PathSpec(3, 5, [disjoint.link_id(3, 4), disjoint.link_id(4, 5)]),
        ]
        traffic = TrafficMatrix(rows=[(1.0, 1.0)] * 2, data_rate=1500.0)
        crossing_delays, disjoint_delays = [], []
        for seed in range(30):
            config = sim_config(duration=4.0, seed=seed)
            crossing_delays.append(np.mean(
                [k.delay_ms for k in simulate(crossing, crossing_paths, traffic, config)]))
            disjoint_delays.append(np.mean(
                [k.delay_ms for k in simulate(disjoint, disjoint_paths, traffic, config)]))
        self.assertGreater(np.mean(crossing_delays), np.mean(disjoint_delays))
        differences = np.array(crossing_delays) - np.array(disjoint_delays)
        self.assertLess(stats.wilcoxon(differences, alternative='greater').pvalue, 0.05)

    def test_higher_rate_never_lowers_drops(self):
        graph = wired_pair(100.0)
        path = shortest_path(graph, 0, 1)
        drops = {}
        for rate in (80.0, 160.0):
            traffic = TrafficMatrix(rows=[(2.0, 1.0)], data_rate=rate)
            drops[rate] = [
                simulate(graph, [path], traffic, sim_config(duration=10.0, queue_capacity=10, seed=s))[0].drops
                for s in range(30)]
        self.assertGreaterEqual(np.mean(drops[160.0]), np.mean(drops[80.0]))
        self.assertLess(stats.wilcoxon(
            np.array(drops[160.0]) - np.array(drops[80.0]), alternative='greater').pvalue, 0.05)


class ConservationSweepTests(SimpleTestCase):
    """sent = delivered + dropped for every flow of many random scenarios."""

    RATES = (50.0, 100.0, 150.0, 600.0, 1500.0)
    QUEUES = (5, 20, 100)

    @tag('slow')
    def test_every_flow_conserves_packets(self):
        rng = np.random.default_rng(2024)
        graphs = {'grid': gen_grid(4, 4, 30.0), 'nsfnet': gen_nsfnet()}
        total_drops = 0
        for index in range(1000):
            graph = graphs['grid' if index % 2 else 'nsfnet']
            seed = int(rng.integers(2 ** 31))
            pairs = select_path_pairs(graph, int(rng.integers(1, 11)), 3, seed)
            traffic = sample_traffic_matrix(len(pairs), (1.0, 10.0, 20.0), rng.choice(self.RATES), seed)
            scenario = scenario_from_pairs(graph, pairs, traffic)
            config = sim_config(duration=1.0, queue_capacity=int(rng.choice(self.QUEUES)), seed=seed)
            for kpis in simulate(scenario.graph, scenario.paths, scenario.traffic, config):
                self.assertEqual(kpis.drops + kpis.rx_packets, kpis.tx_packets, (index, seed))
                total_drops += kpis.drops
        self.assertGreater(total_drops, 0)


class SimulateAvgTests(SimpleTestCase):
    def setUp(self):
        self.graph = gen_grid(4, 4, 30.0)
        self.paths = [shortest_path(self.graph, 0, 10), shortest_path(self.graph, 15, 6)]
        self.traffic = TrafficMatrix(rows=[(10.0, 1.0), (1.0, 10.0)], data_rate=500.0)

    def test_single_run_equals_simulate(self):
        config = sim_config(duration=5.0, seed=3)
        self.assertEqual(
            simulate_avg(self.graph, self.paths, self.traffic, config, runs=1),
            simulate(self.graph, self.paths, self.traffic, config))

    def test_average_of_two_runs(self):
        config = sim_config(duration=5.0, seed=3)
        first = simulate(self.graph, self.paths, self.traffic, config)
        second = simulate(self.graph, self.paths, self.traffic, replace(config, seed=4))
        averaged = simulate_avg(self.graph, self.paths, self.traffic, config, runs=2)
        for a, b, mean in zip(first, second, averaged):
            self.assertAlmostEqual(mean.throughput_kbps, (a.throughput_kbps + b.throughput_kbps) / 2)
            self.assertAlmostEqual(mean.delay_ms, (a.delay_ms + b.delay_ms) / 2)
            self.assertAlmostEqual(mean.drops + mean.rx_packets, mean.tx_packets)

    def test_undefined_values_are_skipped(self):
        graph = wired_pair(100.0)
        path = shortest_path(graph, 0, 1)
        traffic = TrafficMatrix(rows=[(0.001, 1e6)], data_rate=1.0)
        config = sim_config(duration=1e-3, queue_capacity=1)
        [kpis] = simulate_avg(graph, [path], traffic, config, runs=3)
        self.assertIsNone(kpis.jitter_ms)

    def test_rejects_zero_runs(self):
        with self.assertRaises(InvalidArgument):
            simulate_avg(self.graph, self.paths, self.traffic, sim_config(), runs=0)

    def test_reroute_keeps_hop_counts(self):
        config = sim_config(duration=3.0, seed=1)
        kpis = simulate_avg(self.graph, self.paths, self.traffic, config, runs=2, reroute=True)
        self.assertEqual(len(kpis), 2)

    @tag('slow')
    def test_more_runs_reduce_estimate_variance(self):
        config = sim_config(duration=5.0)
        estimates = {1: [], 3: []}
        for trial in range(40):
            for runs in estimates:
                trial_config = replace(config, seed=1000 * trial)
                estimates[runs].append(
                    simulate_avg(self.graph, self.paths, self.traffic, trial_config, runs)[0].delay_ms)
        self.assertLess(np.var(estimates[3]), np.var(estimates[1]))


class KpiSerializerTests(SimpleTestCase):
    def test_counts_stay_integers(self):
        kpis = FlowKpis(delay_ms=None, jitter_ms=None, throughput_kbps=0.0, drops=3, tx_packets=3, rx_packets=0)
        [row] = kpis_to_dicts([kpis])
        self.assertEqual(row, {
            'delay_ms': None, 'jitter_ms': None, 'throughput_kbps': 0.0, 'drops': 3, 'tx': 3, 'rx': 0})
        self.assertEqual(kpis_from_dicts([row]), [kpis])

    def test_inconsistent_counts_rejected(self):
        row = {'delay_ms': 1.0, 'jitter_ms': None, 'throughput_kbps': 1.0, 'drops': 0, 'tx': 1, 'rx': 2}
        with self.assertRaises(InvalidArgument):
            kpis_from_dicts([row])

    def test_value_by_name(self):
        kpis = FlowKpis(delay_ms=2.0, jitter_ms=None, throughput_kbps=5.0, drops=1, tx_packets=4, rx_packets=3)
        self.assertEqual(kpis.value('delay'), 2.0)
        self.assertIsNone(kpis.value('jitter'))
        self.assertEqual(kpis.value('drops'), 1.0)
        with self.assertRaises(InvalidArgument):
            kpis.value('loss')
