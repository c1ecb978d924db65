# Services package for the prediction models
from .model import (
    EmbeddingState, build_params, check_params, count_parameters, embed, forward,
    forward_batch, init_embeddings, readout, update_links, update_nodes,
    update_paths,
)
from .generic_gnn import (
    build_gnn_features, build_gnn_params, generic_gnn_forward,
    generic_gnn_forward_batch,
)
from ..config import GENERIC_GNN


def new_params(config, seed=0):
    """Fresh parameters for any variant."""
    if config.variant == GENERIC_GNN:
        return build_gnn_params(config, seed)
    return build_params(config, seed)


def predict(scenarios, params, config):
    """Per-path outputs for a list of scenarios, as one flat tensor."""
    if config.variant == GENERIC_GNN:
        return generic_gnn_forward_batch(scenarios, params, config)
    return forward_batch(scenarios, params, config)


__all__ = [
    'EmbeddingState', 'build_params', 'check_params', 'count_parameters', 'embed',
    'forward', 'forward_batch', 'init_embeddings', 'readout', 'update_links',
    'update_nodes', 'update_paths', 'build_gnn_features', 'build_gnn_params',
    'generic_gnn_forward', 'generic_gnn_forward_batch', 'new_params', 'predict',
]
