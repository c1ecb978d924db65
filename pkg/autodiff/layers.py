"""
Layer primitives: dense, gated recurrent cell and weighted graph
convolution, plus helpers that register their weights in a ParamStore.
"""
from collections import namedtuple

import numpy as np
import scipy.sparse as sp

from nettwin.exceptions import InvalidArgument
from . import tensor as T

GruParams = namedtuple('GruParams', 'w_z u_z b_z w_r u_r b_r w_h u_h b_h')
GraphConvParams = namedtuple('GraphConvParams', 'theta_self theta_nb')


def _activation(name):
    if callable(name):
        return name
    try:
        return T.ACTIVATIONS[name]
    except KeyError:
        raise InvalidArgument(f"unknown activation {name!r}")


def dense(inputs, weights, bias, activation='identity'):
    """activation(inputs @ weights + bias) for inputs [n_in] or [batch, n_in]."""
    inputs, weights, bias = T.as_tensor(inputs), T.as_tensor(weights), T.as_tensor(bias)
    if weights.ndim != 2 or inputs.shape[-1] != weights.shape[0]:
        raise InvalidArgument(f"dense input {inputs.shape} does not fit weights {weights.shape}")
    if bias.shape != (weights.shape[1],):
        raise InvalidArgument(f"bias {bias.shape} does not fit weights {weights.shape}")
    return _activation(activation)(T.matmul(inputs, weights) + bias)


def gru_cell(state, inputs, params):
    """
    Gated recurrent update of `state` [.., H] with `inputs` [.., D]:

        z = sigmoid(x W_z + h U_z + b_z)
        r = sigmoid(x W_r + h U_r + b_r)
        c = tanh(x W_h + (r * h) U_h + b_h)
        h' = z * h + (1 - z) * c
    """
    state, inputs = T.as_tensor(state), T.as_tensor(inputs)
    hidden = params.u_z.shape[0]
    if state.shape[-1] != hidden or inputs.shape[-1] != params.w_z.shape[0]:
        raise InvalidArgument(
            f"gru state {state.shape} / input {inputs.shape} do not fit "
            f"W {params.w_z.shape}, U {params.u_z.shape}")
    if state.ndim == 2 and inputs.ndim == 2 and state.shape[0] != inputs.shape[0]:
        raise InvalidArgument(f"gru batch sizes differ: {state.shape[0]} vs {inputs.shape[0]}")
    z = T.sigmoid(T.matmul(inputs, params.w_z) + T.matmul(state, params.u_z) + params.b_z)
    r = T.sigmoid(T.matmul(inputs, params.w_r) + T.matmul(state, params.u_r) + params.b_r)
    candidate = T.tanh(
        T.matmul(inputs, params.w_h) + T.matmul(T.mul(r, state), params.u_h) + params.b_h)
    return T.mul(z, state) + T.mul(T.sub(1.0, z), candidate)


def normalized_adjacency(graph, num_nodes=None):
    """
    Sparse [N, N] matrix A with A[n, m] = e_mn / sqrt(deg(m) * deg(n)) for
    every link m -> n, deg being the weighted in-degree. Accepts a
    NetworkGraph or (src, dst, weight) arrays with an explicit node count.
    """
    if num_nodes is None:
        num_nodes = graph.num_nodes
        src = np.array([link.src for link in graph.links], dtype=np.int64)
        dst = np.array([link.dst for link in graph.links], dtype=np.int64)
        weight = np.array([link.weight for link in graph.links], dtype=np.float64)
    else:
        src, dst, weight = (np.asarray(a) for a in graph)
    degree = np.zeros(num_nodes)
    np.add.at(degree, dst, weight)
    with np.errstate(divide='ignore'):
        scale = np.where(degree > 0, 1.0 / np.sqrt(degree), 0.0)
    values = weight * scale[src] * scale[dst]
    return sp.csr_matrix((values, (dst, src)), shape=(num_nodes, num_nodes))


def weighted_graph_conv(node_inputs, graph, params, activation='relu'):
    """
    One-hop edge-weighted convolution:

        out_n = act(Theta_self z_n + sum_{m -> n} a_mn Theta_nb z_m)

    `graph` is a NetworkGraph or a precomputed normalized adjacency.
    Isolated nodes keep only the self term.
    """
    node_inputs = T.as_tensor(node_inputs)
    adjacency = graph if sp.issparse(graph) else normalized_adjacency(graph)
    if node_inputs.ndim != 2 or node_inputs.shape[0] != adjacency.shape[0]:
        raise InvalidArgument(
            f"graph conv expects [{adjacency.shape[0]}, F] inputs, got {node_inputs.shape}")
    if node_inputs.shape[1] != params.theta_self.shape[0]:
        raise InvalidArgument(
            f"graph conv input width {node_inputs.shape[1]} does not fit {params.theta_self.shape}")
    self_term = T.matmul(node_inputs, params.theta_self)
    neighbor_term = T.sparse_matmul(adjacency, T.matmul(node_inputs, params.theta_nb))
    return _activation(activation)(self_term + neighbor_term)


def add_dense(store, prefix, n_in, n_out, rng):
    return (store.add_weight(f'{prefix}.weight', (n_in, n_out), rng),
            store.add_bias(f'{prefix}.bias', n_out))


def add_mlp(store, prefix, sizes, rng):
    """Register layers sizes[0] -> sizes[1] -> ... -> sizes[-1]."""
    for index, (n_in, n_out) in enumerate(zip(sizes, sizes[1:])):
        add_dense(store, f'{prefix}.{index}', n_in, n_out, rng)


def mlp(inputs, store, prefix, depth, hidden_activation='relu', output_activation='identity'):
    out = inputs
    for index in range(depth):
        activation = output_activation if index == depth - 1 else hidden_activation
        out = dense(out, store[f'{prefix}.{index}.weight'], store[f'{prefix}.{index}.bias'], activation)
    return out


def add_gru(store, prefix, input_dim, hidden_dim, rng):
    for gate in ('z', 'r', 'h'):
        store.add_weight(f'{prefix}.w_{gate}', (input_dim, hidden_dim), rng)
        store.add_weight(f'{prefix}.u_{gate}', (hidden_dim, hidden_dim), rng)
        store.add_bias(f'{prefix}.b_{gate}', hidden_dim)
    return gru_params(store, prefix)


def gru_params(store, prefix):
    return GruParams(*(store[f'{prefix}.{field}'] for field in GruParams._fields))


def add_graph_conv(store, prefix, f_in, f_out, rng):
    store.add_weight(f'{prefix}.theta_self', (f_in, f_out), rng)
    store.add_weight(f'{prefix}.theta_nb', (f_in, f_out), rng)
    return graph_conv_params(store, prefix)


def graph_conv_params(store, prefix):
    return GraphConvParams(store[f'{prefix}.theta_self'], store[f'{prefix}.theta_nb'])
