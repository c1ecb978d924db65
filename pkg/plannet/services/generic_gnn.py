"""
Generic graph model baseline: node convolutions, mean pooling and a
readout with one output per path. The output width is fixed when the
parameters are built, so the model only serves scenarios with exactly
that many paths.
"""
import logging

import numpy as np

from autodiff import tensor as T
from autodiff.layers import add_graph_conv, add_mlp, graph_conv_params, mlp, weighted_graph_conv
from autodiff.params import ParamStore
from nettwin.exceptions import FixedOutputWidthError, InvalidArgument
from ..config import GENERIC_GNN

logger = logging.getLogger(__name__)

CONV_LAYERS = 2


def build_gnn_features(scenario):
    """
    Row j holds (tau_on, tau_off) of path k at columns (2k, 2k+1) when
    node j lies on path k, zeros otherwise.
    """
    features = np.zeros((scenario.graph.num_nodes, 2 * scenario.num_paths))
    for k, (path, (tau_on, tau_off)) in enumerate(zip(scenario.paths, scenario.traffic.rows)):
        nodes = path.node_sequence(scenario.graph)
        features[nodes, 2 * k] = tau_on
        features[nodes, 2 * k + 1] = tau_off
    return features


def build_gnn_params(config, seed=0):
    if config.variant != GENERIC_GNN:
        raise InvalidArgument(f"expected a generic_gnn config, got {config.variant!r}")
    rng = np.random.default_rng(seed)
    store = ParamStore()
    width = 2 * config.output_width
    for layer in range(CONV_LAYERS):
        add_graph_conv(store, f'gcn{layer}', width if layer == 0 else config.gnn_hidden,
                       config.gnn_hidden, rng)
    add_mlp(store, 'readout', (config.gnn_hidden,) + config.readout_hidden + (config.output_width,), rng)
    return store


def generic_gnn_forward(scenario, params, config):
    if scenario.num_paths != config.output_width:
        raise FixedOutputWidthError(
            f"generic_gnn was built for {config.output_width} paths, "
            f"scenario has {scenario.num_paths}: the output dimension is predefined")
    h = T.Tensor(build_gnn_features(scenario) / config.tau_scale)
    for layer in range(CONV_LAYERS):
        h = weighted_graph_conv(h, scenario.graph, graph_conv_params(params, f'gcn{layer}'),
                                activation='relu')
    pooled = T.mean(h, axis=0)
    return mlp(pooled, params, 'readout', depth=len(config.readout_hidden) + 1)


def generic_gnn_forward_batch(scenarios, params, config):
    outputs = [generic_gnn_forward(scenario, params, config) for scenario in scenarios]
    return T.concat(outputs, axis=0) if outputs else T.Tensor(np.zeros(0))
