import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings as hypothesis_settings, strategies as st

from nettwin.exceptions import CheckpointFormatError, InvalidArgument
from netmodel.types import Link, NetworkGraph, Node
from . import tensor as T
from .checkpoint import read_checkpoint, write_checkpoint
from .gradcheck import grad_check, grad_check_params
from .layers import (
    GraphConvParams, GruParams, add_graph_conv, add_gru, dense, gru_cell,
    normalized_adjacency, weighted_graph_conv,
)
from .losses import mse_l2_loss
from .optim import adam_step
from .params import ParamStore, glorot_uniform


def weighted_graph(num_nodes, rng, density=0.6):
    nodes = [Node(i, (float(i), 0.0)) for i in range(num_nodes)]
    links = [
        Link(a, b, 1.0, float(rng.uniform(0.2, 2.0)))
        for a in range(num_nodes) for b in range(num_nodes)
        if a != b and rng.random() < density]
    return NetworkGraph(nodes=nodes, links=links)


class TensorTests(SimpleTestCase):
    def test_shared_use_accumulates(self):
        x = T.Tensor([1.5, -2.0], requires_grad=True)
        T.sum(x * x + x).backward()
        np.testing.assert_allclose(x.grad, 2 * x.values + 1)

    def test_broadcast_gradient_is_summed(self):
        x = T.Tensor(np.ones((3, 2)), requires_grad=True)
        b = T.Tensor([1.0, 2.0], requires_grad=True)
        T.sum(x + b).backward()
        np.testing.assert_allclose(b.grad, [3.0, 3.0])

    def test_no_grad_records_nothing(self):
        x = T.Tensor([1.0], requires_grad=True)
        with T.no_grad():
            y = x * 2.0
        self.assertFalse(y.requires_grad)

    def test_non_scalar_backward_needs_gradient(self):
        with self.assertRaises(InvalidArgument):
            (T.Tensor([1.0, 2.0], requires_grad=True) * 2.0).backward()

    def test_matmul_shape_mismatch(self):
        with self.assertRaises(InvalidArgument):
            T.matmul(T.Tensor(np.ones((2, 3))), T.Tensor(np.ones((2, 3))))

    def test_gather_and_segment_gradients(self):
        rng = np.random.default_rng(0)
        weights = rng.normal(size=(4, 3))
        index = [0, 2, 2, 1]
        segments = [1, 0, 1, 1]
        error = grad_check(
            lambda x: T.sum(T.mul(T.segment_sum(T.take(x, index), segments, 2), weights[:2])),
            rng.normal(size=(3, 3)))
        self.assertLess(error, 1e-5)

    def test_sparse_matmul_gradient(self):
        rng = np.random.default_rng(1)
        adjacency = normalized_adjacency(weighted_graph(5, rng))
        weights = rng.normal(size=(5, 2))
        error = grad_check(lambda x: T.sum(T.mul(T.sparse_matmul(adjacency, x), weights)),
                           rng.normal(size=(5, 2)))
        self.assertLess(error, 1e-5)

    def test_tape_replay_is_bit_identical(self):
        rng = np.random.default_rng(2)
        store = ParamStore()
        params = add_gru(store, 'cell', 3, 4, rng)
        inputs = rng.normal(size=(2, 3))

        def run():
            store.zero_grad()
            loss = T.sum(T.square(gru_cell(np.zeros((2, 4)), inputs, params)))
            loss.backward()
            return loss.item(), store.grads()

        first_loss, first_grads = run()
        second_loss, second_grads = run()
        self.assertEqual(first_loss, second_loss)
        for name in first_grads:
            self.assertTrue(np.array_equal(first_grads[name], second_grads[name]))


class DenseTests(SimpleTestCase):
    def test_identity_layer(self):
        x = np.array([0.5, -1.0, 2.0])
        out = dense(x, np.eye(3), np.zeros(3))
        np.testing.assert_array_equal(out.values, x)

    def test_zero_weights_give_activated_bias(self):
        out = dense(np.ones(4), np.zeros((4, 3)), np.array([-1.0, 0.0, 2.0]), 'relu')
        np.testing.assert_array_equal(out.values, [0.0, 0.0, 2.0])

    def test_shape_mismatch(self):
        with self.assertRaises(InvalidArgument):
            dense(np.ones(5), np.zeros((4, 3)), np.zeros(3))
        with self.assertRaises(InvalidArgument):
            dense(np.ones(4), np.zeros((4, 3)), np.zeros(2))

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(3)
        store = ParamStore()
        weight = store.add_weight('weight', (4, 3), rng)
        bias = store.add('bias', rng.normal(size=3))
        x = rng.normal(size=4)
        readout = rng.normal(size=3)
        self.assertLess(grad_check(
            lambda v: T.sum(T.mul(dense(v, weight, bias, 'tanh'), readout)), x), 1e-5)
        errors = grad_check_params(
            lambda: T.sum(T.mul(dense(x, weight, bias, 'tanh'), readout)), store)
        self.assertLess(max(errors.values()), 1e-5)


class GruTests(SimpleTestCase):
    def zero_params(self, input_dim, hidden):
        shapes = {'w': (input_dim, hidden), 'u': (hidden, hidden), 'b': (hidden,)}
        return GruParams(*(T.Tensor(np.zeros(shapes[field[0]])) for field in GruParams._fields))

    def test_zero_weights_halve_state(self):
        state = np.array([1.0, -2.0, 4.0])
        out = gru_cell(state, np.array([3.0, 1.0]), self.zero_params(2, 3))
        np.testing.assert_allclose(out.values, 0.5 * state, rtol=0, atol=1e-15)

    def test_saturated_update_gate_keeps_state(self):
        rng = np.random.default_rng(4)
        store = ParamStore()
        params = add_gru(store, 'cell', 2, 3, rng)
        store['cell.b_z'].values[:] = 60.0
        state = np.array([0.3, -0.7, 1.1])
        out = gru_cell(state, rng.normal(size=2), params)
        np.testing.assert_allclose(out.values, state, atol=1e-12)

    def test_shape_mismatch(self):
        with self.assertRaises(InvalidArgument):
            gru_cell(np.zeros(4), np.zeros(2), self.zero_params(2, 3))

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(5)
        store = ParamStore()
        params = add_gru(store, 'cell', 8, 8, rng)
        for name in ('cell.b_z', 'cell.b_r', 'cell.b_h'):
            store[name].values[:] = rng.normal(scale=0.5, size=8)
        state, x = rng.normal(size=8), rng.normal(size=8)
        readout = rng.normal(size=8)

        self.assertLess(grad_check(lambda s: T.sum(T.mul(gru_cell(s, x, params), readout)), state), 1e-5)
        self.assertLess(grad_check(lambda v: T.sum(T.mul(gru_cell(state, v, params), readout)), x), 1e-5)
        errors = grad_check_params(lambda: T.sum(T.mul(gru_cell(state, x, params), readout)), store)
        self.assertLess(max(errors.values()), 1e-5)


class GraphConvTests(SimpleTestCase):
    def test_self_identity_passes_positive_inputs(self):
        rng = np.random.default_rng(6)
        graph = weighted_graph(4, rng)
        params = GraphConvParams(T.Tensor(np.eye(3)), T.Tensor(np.zeros((3, 3))))
        z = rng.uniform(0.1, 1.0, size=(4, 3))
        np.testing.assert_allclose(weighted_graph_conv(z, graph, params).values, z)

    def test_two_node_swap_equivariance(self):
        rng = np.random.default_rng(7)
        nodes = [Node(0, (0.0, 0.0)), Node(1, (1.0, 0.0))]
        graph = NetworkGraph(nodes=nodes, links=[Link(0, 1, 1.0, 1.0), Link(1, 0, 1.0, 1.0)])
        store = ParamStore()
        params = add_graph_conv(store, 'conv', 3, 2, rng)
        z = rng.normal(size=(1, 3)).repeat(2, axis=0)
        out = weighted_graph_conv(z, graph, params).values
        np.testing.assert_array_equal(out[0], out[1])
        swapped = rng.normal(size=(2, 3))
        forward = weighted_graph_conv(swapped, graph, params).values
        backward = weighted_graph_conv(swapped[::-1], graph, params).values
        np.testing.assert_allclose(forward[::-1], backward)

    def test_isolated_node_keeps_self_term(self):
        nodes = [Node(i, (float(i), 0.0)) for i in range(3)]
        graph = NetworkGraph(nodes=nodes, links=[Link(0, 1, 1.0, 2.0), Link(1, 0, 1.0, 2.0)])
        params = GraphConvParams(T.Tensor(np.eye(2)), T.Tensor(np.eye(2)))
        z = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 4.0]])
        out = weighted_graph_conv(z, graph, params).values
        np.testing.assert_allclose(out[2], [3.0, 4.0])
        # deg(0) = deg(1) = 2, so a_01 = 2 / sqrt(2 * 2) = 1
        np.testing.assert_allclose(out[0], [3.0, 3.0])

    def test_row_count_mismatch(self):
        rng = np.random.default_rng(8)
        params = GraphConvParams(T.Tensor(np.eye(2)), T.Tensor(np.eye(2)))
        with self.assertRaises(InvalidArgument):
            weighted_graph_conv(np.ones((3, 2)), weighted_graph(4, rng), params)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(9)
        graph = weighted_graph(5, rng)
        store = ParamStore()
        params = add_graph_conv(store, 'conv', 4, 3, rng)
        z = rng.normal(size=(5, 4))
        readout = rng.normal(size=(5, 3))
        self.assertLess(grad_check(
            lambda v: T.sum(T.mul(weighted_graph_conv(v, graph, params), readout)), z), 1e-5)
        errors = grad_check_params(
            lambda: T.sum(T.mul(weighted_graph_conv(z, graph, params), readout)), store)
        self.assertLess(max(errors.values()), 1e-5)


class LossTests(SimpleTestCase):
    def test_exact_prediction_is_zero(self):
        target = np.array([1.0, 2.0, 3.0])
        loss = mse_l2_loss(T.Tensor(target), target, np.ones(3, bool), ParamStore(), 0.0)
        self.assertEqual(loss.item(), 0.0)

    def test_unit_residuals(self):
        loss = mse_l2_loss(T.Tensor([2.0, 3.0]), [1.0, 2.0], [True, True], None, 0.0)
        self.assertEqual(loss.item(), 1.0)

    def test_matches_direct_recomputation(self):
        rng = np.random.default_rng(10)
        store = ParamStore()
        store.add_weight('w', (3, 4), rng)
        store.add('b', rng.normal(size=4))
        pred, target = rng.normal(size=20), rng.normal(size=20)
        mask = rng.random(20) < 0.7
        loss = mse_l2_loss(T.Tensor(pred), target, mask, store, 1e-4)
        expected = np.mean((pred[mask] - target[mask]) ** 2) + 1e-4 * sum(
            np.sum(t.values ** 2) for t in store.tensors())
        self.assertAlmostEqual(loss.item(), expected, delta=1e-12)

    def test_masked_entries_get_zero_gradient(self):
        pred = T.Tensor([1.0, 5.0, -2.0], requires_grad=True)
        mse_l2_loss(pred, [0.0, np.nan, 0.0], [True, False, True], None, 0.0).backward()
        self.assertEqual(pred.grad[1], 0.0)
        np.testing.assert_allclose(pred.grad, [1.0, 0.0, -2.0])

    def test_no_valid_entries(self):
        with self.assertRaises(InvalidArgument):
            mse_l2_loss(T.Tensor([1.0]), [1.0], [False], None, 0.0)

    def test_negative_lambda(self):
        with self.assertRaises(InvalidArgument):
            mse_l2_loss(T.Tensor([1.0]), [1.0], [True], None, -1.0)


class AdamTests(SimpleTestCase):
    def test_zero_gradient_leaves_parameters(self):
        store = ParamStore()
        store.add('w', [1.0, -2.0])
        adam_step(store, {'w': np.zeros(2)}, lr=0.1)
        np.testing.assert_array_equal(store['w'].values, [1.0, -2.0])
        self.assertEqual(store.step, 1)

    def test_first_step_closed_form(self):
        store = ParamStore()
        store.add('w', [0.0, 0.0])
        g = np.array([0.5, -3.0])
        adam_step(store, {'w': g}, lr=0.01, eps=1e-8)
        np.testing.assert_allclose(store['w'].values, -0.01 * g / (np.abs(g) + 1e-8))

    def test_invalid_hyperparameters(self):
        store = ParamStore()
        store.add('w', [0.0])
        with self.assertRaises(InvalidArgument):
            adam_step(store, lr=0.0)
        with self.assertRaises(InvalidArgument):
            adam_step(store, lr=0.1, beta1=1.0)

    def test_descends_convex_quadratic(self):
        store = ParamStore()
        store.add('w', np.zeros(3))
        center = np.full(3, 20.0)
        losses = []
        for _ in range(100):
            store.zero_grad()
            loss = T.sum(T.square(T.sub(store['w'], center)))
            loss.backward()
            losses.append(loss.item())
            adam_step(store, lr=0.1)
        self.assertTrue(all(b < a for a, b in zip(losses[5:], losses[6:])))


class GradCheckTests(SimpleTestCase):
    def test_linear_function_is_exact(self):
        slope = np.array([0.5, -1.25, 2.0])
        error = grad_check(lambda x: T.sum(T.mul(x, slope)), np.array([0.1, 0.2, -0.3]), h=1e-3)
        self.assertLess(error, 1e-10)

    def test_planted_fault_is_detected(self):
        slope = np.array([0.5, -1.25, 2.0])
        error = grad_check(
            lambda x: T.sum(T.mul(x, slope)), np.zeros(3), analytic=slope * 1.1)
        self.assertGreater(error, 1e-2)

    def test_rejects_non_positive_step(self):
        with self.assertRaises(InvalidArgument):
            grad_check(lambda x: T.sum(x), np.zeros(2), h=0.0)

    @hypothesis_settings(max_examples=20, deadline=None)
    @given(st.integers(min_value=1, max_value=4), st.integers(min_value=1, max_value=4),
           st.integers(min_value=0, max_value=2 ** 31))
    def test_primitives_on_random_shapes(self, rows, cols, seed):
        rng = np.random.default_rng(seed)
        weights = rng.normal(size=(cols, 2))
        readout = rng.normal(size=(rows, 2))
        error = grad_check(
            lambda x: T.sum(T.mul(T.tanh(T.matmul(T.sigmoid(x), weights)), readout)),
            rng.normal(size=(rows, cols)))
        self.assertLess(error, 1e-5)


class CheckpointTests(SimpleTestCase):
    def setUp(self):
        self.workdir = Path(tempfile.mkdtemp())

    def populated_store(self):
        rng = np.random.default_rng(11)
        store = ParamStore()
        add_gru(store, 'cell', 3, 2, rng)
        store.add('scalar', 1.5)
        adam_step(store, {name: rng.normal(size=store[name].shape) for name in store}, lr=0.01)
        return store

    def test_values_and_optimizer_state_survive(self):
        store = self.populated_store()
        path = write_checkpoint(self.workdir / 'fold0.ntck', store, manifest={'variant': 'plan_net'})
        loaded = read_checkpoint(path)
        self.assertTrue(loaded.matches(store))
        self.assertEqual(loaded.step, 1)
        for name in store:
            np.testing.assert_array_equal(loaded[name].values, store[name].values)
            np.testing.assert_array_equal(loaded.m[name], store.m[name])
            np.testing.assert_array_equal(loaded.v[name], store.v[name])
        self.assertTrue((self.workdir / 'fold0.json').exists())

    def test_truncated_file(self):
        path = write_checkpoint(self.workdir / 'cut.ntck', self.populated_store())
        path.write_bytes(path.read_bytes()[:-5])
        with self.assertRaises(CheckpointFormatError):
            read_checkpoint(path)

    def test_foreign_file(self):
        path = self.workdir / 'other.bin'
        path.write_bytes(b'PK\x03\x04' + bytes(20))
        with self.assertRaises(CheckpointFormatError):
            read_checkpoint(path)


class InitTests(SimpleTestCase):
    def test_glorot_bounds(self):
        values = glorot_uniform((32, 16), np.random.default_rng(12))
        self.assertLessEqual(np.abs(values).max(), np.sqrt(6 / 48))
        self.assertEqual(values.shape, (32, 16))
