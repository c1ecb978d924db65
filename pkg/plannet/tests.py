import numpy as np
from django.test import SimpleTestCase

from autodiff import tensor as T
from autodiff.gradcheck import grad_check_params
from autodiff.layers import mlp
from autodiff.losses import mse_l2_loss
from netmodel.services import gen_grid, gen_nsfnet, gen_parallel_star, scenario_from_pairs
from netmodel.services.topology import NSFNET_EDGES
from netmodel.types import Link, NetworkGraph, Node, PathSpec, Scenario, TrafficMatrix
from nettwin.exceptions import FixedOutputWidthError, InvalidArgument
from .batching import build_batch
from .config import GENERIC_GNN, LINK_PATH_ONLY, PLAN_NET, ModelConfig
from .serializers import model_config_from_dict
from .services import (
    EmbeddingState, build_gnn_features, build_gnn_params, build_params,
    count_parameters, embed, forward, forward_batch, generic_gnn_forward,
    init_embeddings, new_params, predict, update_links, update_nodes,
    update_paths,
)

MATCHED_TRAFFIC = TrafficMatrix(rows=[(1.0, 10.0), (10.0, 20.0), (20.0, 1.0)], data_rate=100.0)


def small_config(**overrides):
    values = dict(iterations=2, path_dim=4, link_dim=3, node_dim=3,
                  link_mlp_hidden=(5,), readout_hidden=(4,))
    values.update(overrides)
    return ModelConfig(**values)


def chain_scenario():
    """4-node wired chain with two overlapping 2-hop paths."""
    nodes = [Node(i, (float(i), 0.0)) for i in range(4)]
    links = []
    for a in range(3):
        links.append(Link(a, a + 1, 1000.0 + 500.0 * a, 1.0))
        links.append(Link(a + 1, a, 800.0, 1.0))
    graph = NetworkGraph(nodes=nodes, links=links)
    paths = [PathSpec(0, 2, [graph.link_id(0, 1), graph.link_id(1, 2)]),
             PathSpec(1, 3, [graph.link_id(1, 2), graph.link_id(2, 3)])]
    return Scenario(graph, paths, TrafficMatrix(rows=[(1.0, 10.0), (20.0, 10.0)], data_rate=100.0))


def nsfnet_scenario():
    graph = gen_nsfnet()
    pairs = [(0, 1), (0, 5), (0, 12), (3, 9), (7, 13)]
    rows = [(1.0, 20.0), (10.0, 10.0), (20.0, 1.0), (1.0, 1.0), (10.0, 20.0)]
    return scenario_from_pairs(graph, pairs, TrafficMatrix(rows=rows, data_rate=100.0))


def flow_layout(kind, interference):
    graph, pairs = gen_parallel_star(kind, interference)
    return scenario_from_pairs(graph, pairs, MATCHED_TRAFFIC)


def randomize(params, seed, scale=0.5):
    rng = np.random.default_rng(seed)
    for tensor in params.tensors():
        tensor.values = rng.normal(0.0, scale, size=tensor.shape)
    return params


def relabel(scenario, perm):
    """Same scenario with node n renamed perm[n]."""
    graph = scenario.graph
    inverse = np.argsort(perm)
    nodes = [Node(i, graph.nodes[inverse[i]].position) for i in range(graph.num_nodes)]
    links = sorted(
        (Link(int(perm[l.src]), int(perm[l.dst]), l.capacity, l.weight) for l in graph.links),
        key=lambda l: (l.src, l.dst))
    moved = NetworkGraph(nodes=nodes, links=links, family=graph.family, radio=graph.radio)
    paths = []
    for path in scenario.paths:
        ids = [moved.link_id(int(perm[graph.links[l].src]), int(perm[graph.links[l].dst]))
               for l in path.links]
        paths.append(PathSpec(int(perm[path.source]), int(perm[path.destination]), ids))
    return Scenario(moved, paths, scenario.traffic)


class ModelConfigTests(SimpleTestCase):
    def test_defaults_come_from_settings(self):
        config = ModelConfig()
        self.assertEqual(config.iterations, 3)
        self.assertEqual((config.path_dim, config.link_dim, config.node_dim), (32, 16, 16))
        self.assertEqual(config.link_mlp_hidden, (32, 64, 128, 32))
        self.assertEqual(config.readout_hidden, (64, 32, 16))

    def test_rejects_bad_values(self):
        for overrides in ({'iterations': 0}, {'path_dim': 1}, {'link_dim': 0},
                          {'variant': 'transformer'}, {'readout_hidden': (16, 0)}):
            with self.subTest(**overrides), self.assertRaises(InvalidArgument):
                ModelConfig(**overrides)

    def test_generic_needs_output_width(self):
        with self.assertRaises(InvalidArgument):
            ModelConfig(variant=GENERIC_GNN)

    def test_manifest_round_trip(self):
        config = small_config(variant=LINK_PATH_ONLY)
        self.assertEqual(model_config_from_dict(config.as_dict()), config)

    def test_invalid_manifest(self):
        data = small_config().as_dict()
        data['iterations'] = 0
        with self.assertRaises(InvalidArgument):
            model_config_from_dict(data)


class ParameterCountTests(SimpleTestCase):
    def test_exact_counts_at_default_dimensions(self):
        self.assertEqual(count_parameters(ModelConfig(variant=PLAN_NET)), 78033)
        self.assertEqual(count_parameters(ModelConfig(variant=LINK_PATH_ONLY)), 74961)

    def test_node_embeddings_cost_less_than_nine_percent(self):
        full = count_parameters(ModelConfig(variant=PLAN_NET))
        ablated = count_parameters(ModelConfig(variant=LINK_PATH_ONLY))
        self.assertGreater(full, ablated)
        self.assertLess(full / ablated - 1.0, 0.09)

    def test_shared_weights_keep_one_block(self):
        self.assertEqual(count_parameters(ModelConfig(share_weights=True)), 6240 + 17168 + 1024 + 4737)

    def test_same_seed_same_values(self):
        config = small_config()
        first, second = build_params(config, seed=4), build_params(config, seed=4)
        for name in first:
            np.testing.assert_array_equal(first[name].values, second[name].values)

    def test_mismatched_parameters_are_refused(self):
        params = build_params(small_config(path_dim=6))
        with self.assertRaises(InvalidArgument):
            forward(chain_scenario(), params, small_config())


class InitEmbeddingTests(SimpleTestCase):
    def test_path_state_holds_scaled_means(self):
        scenario = chain_scenario()
        scenario = Scenario(scenario.graph, scenario.paths,
                            TrafficMatrix(rows=[(10.0, 20.0), (1.0, 1.0)], data_rate=100.0))
        state = init_embeddings(scenario, ModelConfig())
        np.testing.assert_allclose(state.h_p.values[0, :2], [0.5, 1.0])
        self.assertFalse(state.h_p.values[:, 2:].any())
        np.testing.assert_allclose(state.h_l.values[:, 0], [l.capacity / 6000.0 for l in scenario.graph.links])
        self.assertFalse(state.h_l.values[:, 1:].any())

    def test_nsfnet_degrees(self):
        degree = np.zeros(14)
        for a, b in NSFNET_EDGES:
            degree[a] += 1
            degree[b] += 1
        state = init_embeddings(nsfnet_scenario(), ModelConfig())
        np.testing.assert_allclose(state.h_n.values[:, 0], degree / degree.max())
        for node in np.flatnonzero(degree == 3):
            self.assertAlmostEqual(state.h_n.values[node, 0], 3 / degree.max())

    def test_degree_scale_is_per_scenario(self):
        batch = build_batch([nsfnet_scenario(), chain_scenario()])
        nsfnet = init_embeddings(nsfnet_scenario(), ModelConfig()).h_n.values[:, 0]
        chain = init_embeddings(chain_scenario(), ModelConfig()).h_n.values[:, 0]
        joint = init_embeddings(batch, ModelConfig()).h_n.values[:, 0]
        np.testing.assert_array_equal(joint, np.concatenate([nsfnet, chain]))
        np.testing.assert_allclose(chain, [0.5, 1.0, 1.0, 0.5])

    def test_isolated_node_is_zero(self):
        graph = NetworkGraph(nodes=[Node(i, (float(i), 0.0)) for i in range(3)],
                             links=[Link(0, 1, 1000.0, 1.0), Link(1, 0, 1000.0, 1.0)])
        scenario = Scenario(graph, [PathSpec(0, 1, [0])], TrafficMatrix(rows=[(1.0, 1.0)], data_rate=100.0))
        state = init_embeddings(scenario, ModelConfig())
        self.assertFalse(state.h_n.values[2].any())

    def test_ablation_has_no_node_features(self):
        state = init_embeddings(nsfnet_scenario(), ModelConfig(variant=LINK_PATH_ONLY))
        self.assertFalse(state.h_n.values.any())


class BatchTests(SimpleTestCase):
    def test_offsets_shift_ids(self):
        first, second = chain_scenario(), nsfnet_scenario()
        batch = build_batch([first, second])
        self.assertEqual(batch.num_nodes, 4 + 14)
        self.assertEqual(batch.num_links, 6 + 42)
        self.assertEqual(list(batch.path_offsets), [0, 2, 7])
        shifted = [6 + l for l in second.paths[0].links]
        self.assertEqual(list(batch.step_links[:len(shifted), 2]), shifted)

    def test_messages_cover_each_path_link_once(self):
        scenario = nsfnet_scenario()
        batch = build_batch([scenario])
        expected = sorted((p, l) for p, path in enumerate(scenario.paths) for l in path.links)
        self.assertEqual(sorted(zip(batch.message_paths.tolist(), batch.message_links.tolist())), expected)

    def test_batched_forward_matches_single(self):
        config = small_config()
        params = build_params(config, seed=1)
        scenarios = [chain_scenario(), nsfnet_scenario()]
        joint = forward_batch(scenarios, params, config).values
        alone = np.concatenate([forward(s, params, config).values for s in scenarios])
        np.testing.assert_allclose(joint, alone, atol=1e-12)


class UpdatePathTests(SimpleTestCase):
    def setUp(self):
        self.config = small_config()
        self.params = build_params(self.config, seed=2)
        self.scenario = nsfnet_scenario()
        self.batch = build_batch([self.scenario])
        rng = np.random.default_rng(0)
        self.state = EmbeddingState(
            T.Tensor(rng.normal(size=(self.batch.num_paths, 4))),
            T.Tensor(rng.normal(size=(self.batch.num_links, 3))),
            T.Tensor(rng.normal(size=(self.batch.num_nodes, 3))))

    def test_single_link_path_state_is_its_message(self):
        h_p, messages = update_paths(self.state, self.batch, self.params, self.config, 0)
        self.assertEqual(self.scenario.paths[0].hops, 1)
        row = np.flatnonzero(self.batch.message_paths == 0)
        np.testing.assert_array_equal(messages.values[row[0]], h_p.values[0])

    def test_zero_cell_halves_per_hop(self):
        for name in self.params:
            if '.path_rnn.' in name:
                self.params[name].values = np.zeros(self.params[name].shape)
        h_p, _ = update_paths(self.state, self.batch, self.params, self.config, 0)
        hops = np.array([path.hops for path in self.scenario.paths], dtype=float)
        np.testing.assert_allclose(h_p.values, self.state.h_p.values * 0.5 ** hops[:, None], atol=1e-15)

    def test_identical_inputs_identical_outputs(self):
        graph = self.scenario.graph
        link = graph.link_id(0, 1)
        paths = [PathSpec(0, 1, [link]), PathSpec(0, 1, [link])]
        scenario = Scenario(graph, paths, TrafficMatrix(rows=[(1.0, 10.0)] * 2, data_rate=100.0))
        batch = build_batch([scenario])
        state = init_embeddings(batch, self.config)
        h_p, _ = update_paths(state, batch, self.params, self.config, 0)
        np.testing.assert_array_equal(h_p.values[0], h_p.values[1])


class UpdateLinkTests(SimpleTestCase):
    def test_matches_explicit_aggregation(self):
        config = small_config()
        params = build_params(config, seed=3)
        scenario = nsfnet_scenario()
        batch = build_batch([scenario])
        state = init_embeddings(batch, config)
        _, messages = update_paths(state, batch, params, config, 0)
        out = update_links(state, messages, batch, params, config, 0).values
        aggregate = np.zeros((batch.num_links, config.path_dim))
        for row, link in enumerate(batch.message_links):
            aggregate[link] += messages.values[row]
        used = set(batch.message_links.tolist())
        self.assertTrue(any(l not in used for l in range(batch.num_links)))
        inputs = np.concatenate(
            [state.h_l.values, state.h_n.values[batch.link_src], aggregate], axis=1)
        expected = mlp(T.Tensor(inputs), params, 'iter0.link_mlp', depth=2).values
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_path_order_does_not_change_links(self):
        config = small_config()
        params = build_params(config, seed=5)
        scenario = nsfnet_scenario()
        order = [3, 0, 4, 1, 2]
        shuffled = Scenario(scenario.graph, [scenario.paths[i] for i in order],
                            TrafficMatrix([scenario.traffic.rows[i] for i in order], 100.0))
        outs = []
        for s in (scenario, shuffled):
            batch = build_batch([s])
            state = init_embeddings(batch, config)
            _, messages = update_paths(state, batch, params, config, 0)
            outs.append(update_links(state, messages, batch, params, config, 0).values)
        np.testing.assert_allclose(outs[0], outs[1], atol=1e-12)


class UpdateNodeTests(SimpleTestCase):
    def setUp(self):
        self.config = small_config()
        self.params = build_params(self.config, seed=6)

    def empty_batch(self, graph):
        return build_batch([Scenario(graph, [], TrafficMatrix(rows=[], data_rate=100.0))])

    def test_symmetric_graph_equal_inputs(self):
        nodes = [Node(i, (float(i), 0.0)) for i in range(4)]
        links = sorted((Link(a, (a + s) % 4, 1000.0, 1.0) for a in range(4) for s in (1, 3)),
                       key=lambda l: (l.src, l.dst))
        batch = self.empty_batch(NetworkGraph(nodes=nodes, links=links))
        state = EmbeddingState(None, T.Tensor(np.full((8, 3), 0.3)), T.Tensor(np.full((4, 3), -0.2)))
        out = update_nodes(state, batch, self.params, self.config, 0).values
        np.testing.assert_allclose(out, np.broadcast_to(out[0], out.shape), atol=1e-12)

    def test_grid_transpose_equivariance(self):
        grid = gen_grid(4, 4, 30.0)
        batch = self.empty_batch(grid)
        sigma = np.array([(n % 4) * 4 + n // 4 for n in range(16)])
        rng = np.random.default_rng(7)
        h_n = rng.normal(size=(16, 3))
        h_l = rng.normal(size=(grid.num_links, 3))
        moved_n = np.empty_like(h_n)
        moved_n[sigma] = h_n
        moved_l = np.empty_like(h_l)
        for index, link in enumerate(grid.links):
            moved_l[grid.link_id(sigma[link.src], sigma[link.dst])] = h_l[index]
        out = update_nodes(EmbeddingState(None, T.Tensor(h_l), T.Tensor(h_n)),
                           batch, self.params, self.config, 0).values
        moved = update_nodes(EmbeddingState(None, T.Tensor(moved_l), T.Tensor(moved_n)),
                             batch, self.params, self.config, 0).values
        np.testing.assert_allclose(moved[sigma], out, atol=1e-12)


class ForwardTests(SimpleTestCase):
    def test_empty_scenario(self):
        config = small_config()
        scenario = Scenario(gen_nsfnet(), [], TrafficMatrix(rows=[], data_rate=100.0))
        self.assertEqual(forward(scenario, build_params(config), config).shape, (0,))

    def test_path_permutation_permutes_outputs(self):
        config = small_config(iterations=3)
        params = randomize(build_params(config), seed=8)
        scenario = nsfnet_scenario()
        order = [4, 2, 0, 3, 1]
        shuffled = Scenario(scenario.graph, [scenario.paths[i] for i in order],
                            TrafficMatrix([scenario.traffic.rows[i] for i in order], 100.0))
        base = forward(scenario, params, config).values
        np.testing.assert_allclose(forward(shuffled, params, config).values, base[order], atol=1e-12)

    def test_ablation_cannot_tell_layouts_apart(self):
        config = ModelConfig(variant=LINK_PATH_ONLY)
        layouts = [flow_layout(kind, interference)
                   for kind in ('parallel', 'star') for interference in (False, True)]
        for seed in range(3):
            params = build_params(config, seed=seed)
            outputs = [forward(s, params, config).values for s in layouts]
            for other in outputs[1:]:
                np.testing.assert_allclose(other, outputs[0], rtol=0, atol=1e-9)

    def test_node_embeddings_tell_layouts_apart(self):
        config = ModelConfig(variant=PLAN_NET)
        for interference in (False, True):
            parallel = flow_layout('parallel', interference)
            star = flow_layout('star', interference)
            distinct = 0
            for seed in range(10):
                params = build_params(config, seed=seed)
                gap = np.abs(forward(parallel, params, config).values
                             - forward(star, params, config).values).max()
                distinct += gap > 1e-6
            self.assertGreaterEqual(distinct, 9)

    def test_end_to_end_gradients(self):
        config = small_config()
        params = build_params(config, seed=9)
        scenario = chain_scenario()
        target = np.array([0.3, -0.7])
        mask = np.ones(2, dtype=bool)
        errors = grad_check_params(
            lambda: mse_l2_loss(forward(scenario, params, config), target, mask, params, 1e-4),
            params, h=1e-6)
        self.assertLess(max(errors.values()), 1e-5, errors)

    def test_state_carries_one_message_per_path_link(self):
        config = small_config()
        params = build_params(config, seed=3)
        scenario = nsfnet_scenario()
        batch = build_batch([scenario])
        self.assertIsNone(init_embeddings(batch, config).messages)
        state = embed(batch, params, config)
        hops = sum(len(path.links) for path in scenario.paths)
        self.assertEqual(state.messages.shape, (hops, config.path_dim))
        np.testing.assert_array_equal(batch.message_links[np.argsort(batch.message_paths, kind='stable')],
                                      np.concatenate([path.links for path in scenario.paths]))
        last = {int(p): row for row, p in enumerate(batch.message_paths)}
        for path, row in last.items():
            np.testing.assert_array_equal(state.messages.values[row], state.h_p.values[path])

    def test_predict_dispatches_on_variant(self):
        config = small_config()
        params = new_params(config, seed=1)
        scenarios = [chain_scenario()]
        np.testing.assert_array_equal(predict(scenarios, params, config).values,
                                      forward_batch(scenarios, params, config).values)


class GenericGnnTests(SimpleTestCase):
    def test_node_on_single_path(self):
        scenario = chain_scenario()
        features = build_gnn_features(scenario)
        self.assertEqual(features.shape, (4, 4))
        np.testing.assert_array_equal(features[0], [1.0, 10.0, 0.0, 0.0])
        np.testing.assert_array_equal(features[3], [0.0, 0.0, 20.0, 10.0])

    def test_node_on_no_path(self):
        scenario = nsfnet_scenario()
        features = build_gnn_features(scenario)
        on_path = {n for path in scenario.paths for n in path.node_sequence(scenario.graph)}
        for node in set(range(14)) - on_path:
            self.assertFalse(features[node].any())

    def test_feature_total_counts_path_nodes(self):
        for scenario in (chain_scenario(), nsfnet_scenario()):
            expected = sum(len(path.node_sequence(scenario.graph)) * (on + off)
                           for path, (on, off) in zip(scenario.paths, scenario.traffic.rows))
            self.assertAlmostEqual(build_gnn_features(scenario).sum(), expected)

    def test_width_is_fixed(self):
        config = small_config(variant=GENERIC_GNN, output_width=5)
        params = build_gnn_params(config)
        self.assertEqual(generic_gnn_forward(nsfnet_scenario(), params, config).shape, (5,))
        with self.assertRaises(FixedOutputWidthError):
            generic_gnn_forward(chain_scenario(), params, config)

    def test_node_relabeling_leaves_output(self):
        config = small_config(variant=GENERIC_GNN, output_width=5)
        params = randomize(build_gnn_params(config), seed=10)
        scenario = nsfnet_scenario()
        perm = np.random.default_rng(11).permutation(14)
        np.testing.assert_allclose(generic_gnn_forward(relabel(scenario, perm), params, config).values,
                                   generic_gnn_forward(scenario, params, config).values, atol=1e-12)

    def test_rejects_other_variants(self):
        with self.assertRaises(InvalidArgument):
            build_gnn_params(small_config())
        with self.assertRaises(InvalidArgument):
            build_params(small_config(variant=GENERIC_GNN, output_width=2))
