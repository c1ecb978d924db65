"""Named parameter storage with Adam moment buffers."""
import logging
from collections import OrderedDict

import numpy as np

from nettwin.exceptions import InvalidArgument
from .tensor import Tensor

logger = logging.getLogger(__name__)


def glorot_uniform(shape, rng):
    """Uniform in +-sqrt(6 / (fan_in + fan_out))."""
    fan_in, fan_out = (shape[0], shape[-1]) if len(shape) > 1 else (1, shape[0])
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class ParamStore:
    """
    Ordered collection of trainable tensors.

    Insertion order fixes the checkpoint layout and the order in which
    Adam visits parameters, so two stores built by the same code are
    interchangeable.
    """

    def __init__(self):
        self._params = OrderedDict()
        self.m = OrderedDict()
        self.v = OrderedDict()
        self.step = 0

    def __contains__(self, name):
        return name in self._params

    def __getitem__(self, name):
        return self._params[name]

    def __iter__(self):
        return iter(self._params)

    def __len__(self):
        return len(self._params)

    def names(self):
        return list(self._params)

    def items(self):
        return self._params.items()

    def tensors(self):
        return list(self._params.values())

    def add(self, name, values):
        if name in self._params:
            raise InvalidArgument(f"duplicate parameter {name!r}")
        tensor = Tensor(values, requires_grad=True, name=name)
        self._params[name] = tensor
        self.m[name] = np.zeros(tensor.shape)
        self.v[name] = np.zeros(tensor.shape)
        return tensor

    def add_weight(self, name, shape, rng):
        return self.add(name, glorot_uniform(tuple(shape), rng))

    def add_bias(self, name, size):
        return self.add(name, np.zeros(size))

    def num_parameters(self):
        return int(sum(tensor.size for tensor in self._params.values()))

    def zero_grad(self):
        for tensor in self._params.values():
            tensor.zero_grad()

    def grads(self):
        """Current gradients by name, zeros where nothing flowed."""
        return OrderedDict(
            (name, tensor.grad if tensor.grad is not None else np.zeros(tensor.shape))
            for name, tensor in self._params.items())

    def values(self):
        return OrderedDict((name, tensor.values.copy()) for name, tensor in self._params.items())

    def copy(self):
        """Deep copy of values and optimizer state."""
        clone = ParamStore()
        for name, tensor in self._params.items():
            clone.add(name, tensor.values.copy())
            clone.m[name] = self.m[name].copy()
            clone.v[name] = self.v[name].copy()
        clone.step = self.step
        return clone

    def matches(self, other):
        """True when both stores declare the same names and shapes."""
        return [(n, t.shape) for n, t in self.items()] == [(n, t.shape) for n, t in other.items()]
