"""
Joint path, link and node message passing.

Every update of iteration t reads the iteration-t states and writes the
iteration-(t+1) states, so the order of the three updates inside one
iteration does not matter.
"""
import logging
from collections import namedtuple
from functools import lru_cache

import numpy as np

from autodiff import tensor as T
from autodiff.layers import (
    add_graph_conv, add_gru, add_mlp, graph_conv_params, gru_cell, gru_params,
    mlp, weighted_graph_conv,
)
from autodiff.params import ParamStore
from netmodel.types import Scenario
from nettwin.exceptions import InvalidArgument
from ..batching import ScenarioBatch, build_batch
from ..config import GENERIC_GNN

logger = logging.getLogger(__name__)

# messages: one path-state row per (path, link) in the order of
# batch.message_paths / batch.message_links, None before the first path update
EmbeddingState = namedtuple('EmbeddingState', 'h_p h_l h_n messages', defaults=(None,))


def _prefix(config, iteration, block):
    return f'iter{config.weight_index(iteration)}.{block}'


def _as_batch(scenarios):
    if isinstance(scenarios, ScenarioBatch):
        return scenarios
    if isinstance(scenarios, Scenario):
        return build_batch([scenarios])
    return build_batch(scenarios)


def build_params(config, seed=0):
    """
    Fresh parameters for plan_net or link_path_only.

    link_path_only keeps the recurrent and link-MLP input widths and only
    drops the node convolution, the node slots being fed zeros.
    """
    if config.variant == GENERIC_GNN:
        raise InvalidArgument("use generic_gnn.build_gnn_params for the generic graph model")
    rng = np.random.default_rng(seed)
    store = ParamStore()
    blocks = 1 if config.share_weights else config.iterations
    for t in range(blocks):
        add_gru(store, f'iter{t}.path_rnn', config.link_dim + config.node_dim, config.path_dim, rng)
        add_mlp(store, f'iter{t}.link_mlp',
                (config.link_dim + config.node_dim + config.path_dim,)
                + config.link_mlp_hidden + (config.link_dim,), rng)
        if config.uses_nodes:
            add_graph_conv(store, f'iter{t}.node_gcn',
                           config.node_dim + config.link_dim, config.node_dim, rng)
    add_mlp(store, 'readout', (config.path_dim,) + config.readout_hidden + (1,), rng)
    logger.debug(f"Built {config.variant} with {store.num_parameters()} parameters")
    return store


def count_parameters(config):
    return build_params(config).num_parameters()


@lru_cache(maxsize=16)
def param_shapes(config):
    return tuple((name, tensor.shape) for name, tensor in build_params(config).items())


def check_params(params, config):
    if tuple((name, tensor.shape) for name, tensor in params.items()) != param_shapes(config):
        raise InvalidArgument(
            f"parameters do not fit a {config.variant} model with the given dimensions")


def init_embeddings(scenarios, config):
    """
    h_p = [tau_on, tau_off, 0..], h_l = [c, 0..], h_n = [out-degree, 0..].

    Means and capacities are divided by the config scales, degrees by the
    largest out-degree of their own scenario.
    """
    batch = _as_batch(scenarios)
    h_p = np.zeros((batch.num_paths, config.path_dim))
    h_p[:, :2] = batch.tau / config.tau_scale
    h_l = np.zeros((batch.num_links, config.link_dim))
    h_l[:, 0] = batch.capacity / config.capacity_scale
    h_n = np.zeros((batch.num_nodes, config.node_dim))
    if config.uses_nodes:
        h_n[:, 0] = batch.scaled_degree
    return EmbeddingState(T.Tensor(h_p), T.Tensor(h_l), T.Tensor(h_n))


def update_paths(state, batch, params, config, iteration):
    """
    Run the recurrent cell over each path's links. Returns the new path
    states and the messages, one row per (path, link) in the order of
    `batch.message_links`.
    """
    cell = gru_params(params, _prefix(config, iteration, 'path_rnn'))
    h = state.h_p
    messages = []
    for k in range(batch.max_hops):
        links = batch.step_links[k]
        inputs = T.concat([T.take(state.h_l, links), T.take(state.h_n, batch.link_src[links])])
        stepped = gru_cell(h, inputs, cell)
        mask = batch.step_mask[k].astype(np.float64)[:, None]
        h = h + T.mul(T.sub(stepped, h), mask)
        messages.append(T.take(h, np.flatnonzero(batch.step_mask[k])))
    if messages:
        messages = T.concat(messages, axis=0)
    else:
        messages = T.Tensor(np.zeros((0, config.path_dim)))
    return h, messages


def update_links(state, messages, batch, params, config, iteration):
    aggregate = T.segment_sum(messages, batch.message_links, batch.num_links)
    inputs = T.concat([state.h_l, T.take(state.h_n, batch.link_src), aggregate])
    return mlp(inputs, params, _prefix(config, iteration, 'link_mlp'),
               depth=len(config.link_mlp_hidden) + 1)


def update_nodes(state, batch, params, config, iteration):
    outgoing = T.segment_sum(state.h_l, batch.link_src, batch.num_nodes)
    inputs = T.concat([state.h_n, outgoing])
    conv = graph_conv_params(params, _prefix(config, iteration, 'node_gcn'))
    return weighted_graph_conv(inputs, batch.adjacency, conv, activation='relu')


def readout(h_p, params, config):
    out = mlp(h_p, params, 'readout', depth=len(config.readout_hidden) + 1)
    return T.reshape(out, (h_p.shape[0],))


def embed(scenarios, params, config):
    """EmbeddingState after all message-passing iterations."""
    batch = _as_batch(scenarios)
    check_params(params, config)
    state = init_embeddings(batch, config)
    for t in range(config.iterations):
        h_p, messages = update_paths(state, batch, params, config, t)
        h_l = update_links(state, messages, batch, params, config, t)
        h_n = update_nodes(state, batch, params, config, t) if config.uses_nodes else state.h_n
        state = EmbeddingState(h_p, h_l, h_n, messages)
    return state


def forward_batch(scenarios, params, config):
    """One scalar per path over every scenario of the batch, in listing order."""
    return readout(embed(scenarios, params, config).h_p, params, config)


def forward(scenario, params, config):
    return forward_batch([scenario], params, config)
