from dataclasses import asdict, dataclass, field
from typing import Optional, Tuple

from django.conf import settings

from nettwin.exceptions import InvalidArgument

PLAN_NET = 'plan_net'
LINK_PATH_ONLY = 'link_path_only'
GENERIC_GNN = 'generic_gnn'
VARIANTS = (PLAN_NET, LINK_PATH_ONLY, GENERIC_GNN)


def _setting(name, cast=None):
    if cast is None:
        return lambda: getattr(settings, name)
    return lambda: cast(getattr(settings, name))


@dataclass(frozen=True)
class ModelConfig:
    """
    Dimensions and variant of one model.

    `output_width` is the fixed path count of the generic graph model and
    is ignored by the other variants.
    """

    iterations: int = field(default_factory=_setting('MODEL_ITERATIONS'))
    path_dim: int = field(default_factory=_setting('MODEL_PATH_DIM'))
    link_dim: int = field(default_factory=_setting('MODEL_LINK_DIM'))
    node_dim: int = field(default_factory=_setting('MODEL_NODE_DIM'))
    link_mlp_hidden: Tuple[int, ...] = field(default_factory=_setting('MODEL_LINK_MLP_HIDDEN', tuple))
    readout_hidden: Tuple[int, ...] = field(default_factory=_setting('MODEL_READOUT_HIDDEN', tuple))
    variant: str = PLAN_NET
    share_weights: bool = field(default_factory=_setting('MODEL_SHARE_WEIGHTS'))
    tau_scale: float = field(default_factory=_setting('FEATURE_TAU_SCALE'))
    capacity_scale: float = field(default_factory=_setting('FEATURE_CAPACITY_SCALE'))
    gnn_hidden: int = 32
    output_width: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, 'link_mlp_hidden', tuple(int(n) for n in self.link_mlp_hidden))
        object.__setattr__(self, 'readout_hidden', tuple(int(n) for n in self.readout_hidden))
        if self.variant not in VARIANTS:
            raise InvalidArgument(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")
        if self.iterations < 1:
            raise InvalidArgument(f"iterations must be at least 1, got {self.iterations}")
        if self.path_dim < 2:
            raise InvalidArgument(f"path_dim must hold both on/off means, got {self.path_dim}")
        dims = (self.link_dim, self.node_dim, self.gnn_hidden) + self.link_mlp_hidden + self.readout_hidden
        if any(d < 1 for d in dims):
            raise InvalidArgument(f"all dimensions must be at least 1, got {dims}")
        if min(self.tau_scale, self.capacity_scale) <= 0:
            raise InvalidArgument("feature scales must be positive")
        if self.variant == GENERIC_GNN and (self.output_width is None or self.output_width < 1):
            raise InvalidArgument("generic_gnn needs a positive output_width (path count)")

    @property
    def uses_nodes(self):
        return self.variant == PLAN_NET

    def weight_index(self, iteration):
        return 0 if self.share_weights else iteration

    def as_dict(self):
        data = asdict(self)
        data['link_mlp_hidden'] = list(self.link_mlp_hidden)
        data['readout_hidden'] = list(self.readout_hidden)
        return data
