"""
Dense reverse-mode tensors over float64 numpy arrays.

Each differentiable op records its parents and a backward closure that
pushes the output gradient into the parents. `Tensor.backward` walks the
tape in reverse topological order; gradients accumulate, so a parameter
used several times (a recurrent cell unrolled over a path) receives the
sum of all contributions.
"""
from contextlib import contextmanager

import numpy as np
import scipy.sparse as sp

from nettwin.exceptions import InvalidArgument

_grad_enabled = True


@contextmanager
def no_grad():
    """Evaluate without recording a tape."""
    global _grad_enabled
    previous, _grad_enabled = _grad_enabled, False
    try:
        yield
    finally:
        _grad_enabled = previous


class Tensor:
    __array_priority__ = 100

    def __init__(self, values, requires_grad=False, name=None):
        self.values = np.array(values, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self.name = name
        self._parents = ()
        self._backward = None

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ''
        return f"<Tensor{label} shape={self.shape} requires_grad={self.requires_grad}>"

    @property
    def shape(self):
        return self.values.shape

    @property
    def ndim(self):
        return self.values.ndim

    @property
    def size(self):
        return self.values.size

    def numpy(self):
        return self.values

    def item(self):
        if self.size != 1:
            raise InvalidArgument(f"item() needs a single value, got shape {self.shape}")
        return float(self.values.reshape(-1)[0])

    def zero_grad(self):
        self.grad = None

    def accumulate(self, grad):
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != self.shape:
            raise InvalidArgument(f"gradient shape {grad.shape} does not match tensor shape {self.shape}")
        if self.grad is None:
            self.grad = grad.copy()
        else:
            self.grad += grad

    def backward(self, grad=None):
        """Back-propagate from this tensor; a scalar seeds with 1."""
        if grad is None:
            if self.size != 1:
                raise InvalidArgument(f"backward needs an explicit gradient for shape {self.shape}")
            grad = np.ones(self.shape)
        order = _topological_order(self)
        for node in order:
            if node._backward is not None:
                node.grad = None
        self.accumulate(grad)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return mul(self, -1.0)


def _topological_order(root):
    order, visited = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def as_tensor(value):
    return value if isinstance(value, Tensor) else Tensor(value)


def _result(values, parents, backward):
    out = Tensor(values)
    tracked = [p for p in parents if p.requires_grad]
    if _grad_enabled and tracked:
        out.requires_grad = True
        out._parents = tuple(tracked)
        out._backward = backward
    return out


def _unbroadcast(grad, shape):
    """Sum `grad` back down to `shape` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _send(tensor, grad):
    if tensor.requires_grad:
        tensor.accumulate(grad)


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def backward(grad):
        _send(a, _unbroadcast(grad, a.shape))
        _send(b, _unbroadcast(grad, b.shape))
    return _result(a.values + b.values, (a, b), backward)


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def backward(grad):
        _send(a, _unbroadcast(grad, a.shape))
        _send(b, _unbroadcast(-grad, b.shape))
    return _result(a.values - b.values, (a, b), backward)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def backward(grad):
        _send(a, _unbroadcast(grad * b.values, a.shape))
        _send(b, _unbroadcast(grad * a.values, b.shape))
    return _result(a.values * b.values, (a, b), backward)


def matmul(a, b):
    """Matrix product of a [n, k] (or [k]) with b [k, m]."""
    a, b = as_tensor(a), as_tensor(b)
    if b.ndim != 2 or a.ndim not in (1, 2) or a.shape[-1] != b.shape[0]:
        raise InvalidArgument(f"cannot multiply shapes {a.shape} and {b.shape}")

    def backward(grad):
        if a.ndim == 1:
            _send(a, b.values @ grad)
            _send(b, np.outer(a.values, grad))
        else:
            _send(a, grad @ b.values.T)
            _send(b, a.values.T @ grad)
    return _result(a.values @ b.values, (a, b), backward)


def sum(a, axis=None):
    a = as_tensor(a)

    def backward(grad):
        expanded = grad if axis is None else np.expand_dims(grad, axis)
        _send(a, np.broadcast_to(expanded, a.shape).copy())
    return _result(a.values.sum(axis=axis), (a,), backward)


def mean(a, axis=None):
    a = as_tensor(a)
    count = a.size if axis is None else a.shape[axis]
    return mul(sum(a, axis=axis), 1.0 / count)


def square(a):
    return mul(a, a)


def sigmoid(a):
    a = as_tensor(a)
    out_values = 0.5 * (1.0 + np.tanh(0.5 * a.values))

    def backward(grad):
        _send(a, grad * out_values * (1.0 - out_values))
    return _result(out_values, (a,), backward)


def tanh(a):
    a = as_tensor(a)
    out_values = np.tanh(a.values)

    def backward(grad):
        _send(a, grad * (1.0 - out_values ** 2))
    return _result(out_values, (a,), backward)


def relu(a):
    a = as_tensor(a)
    active = a.values > 0

    def backward(grad):
        _send(a, grad * active)
    return _result(np.where(active, a.values, 0.0), (a,), backward)


def identity(a):
    return as_tensor(a)


ACTIVATIONS = {
    'relu': relu,
    'tanh': tanh,
    'sigmoid': sigmoid,
    'identity': identity,
    'linear': identity,
    None: identity,
}


def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    values = np.concatenate([t.values for t in tensors], axis=axis)
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(grad):
        for tensor, piece in zip(tensors, np.split(grad, bounds, axis=axis)):
            _send(tensor, piece)
    return _result(values, tensors, backward)


def take(a, index):
    """Gather rows of `a` by integer index (repeats allowed)."""
    a = as_tensor(a)
    index = np.asarray(index, dtype=np.int64)

    def backward(grad):
        full = np.zeros(a.shape)
        np.add.at(full, index, grad)
        _send(a, full)
    return _result(a.values[index], (a,), backward)


def segment_sum(a, segment_ids, num_segments):
    """Sum rows of `a` into `num_segments` buckets; empty buckets are zero."""
    a = as_tensor(a)
    segment_ids = np.asarray(segment_ids, dtype=np.int64)
    out = np.zeros((num_segments,) + a.shape[1:])
    np.add.at(out, segment_ids, a.values)

    def backward(grad):
        _send(a, grad[segment_ids])
    return _result(out, (a,), backward)


def sparse_matmul(matrix, a):
    """Constant sparse matrix times a dense tensor."""
    a = as_tensor(a)
    matrix = sp.csr_matrix(matrix)
    if matrix.shape[1] != a.shape[0]:
        raise InvalidArgument(f"cannot multiply sparse {matrix.shape} with {a.shape}")
    transposed = matrix.T.tocsr()

    def backward(grad):
        _send(a, np.asarray(transposed @ grad))
    return _result(np.asarray(matrix @ a.values), (a,), backward)


def where_mask(a, mask):
    """Zero the entries of `a` where `mask` is false."""
    return mul(a, np.asarray(mask, dtype=np.float64))


def reshape(a, shape):
    a = as_tensor(a)

    def backward(grad):
        _send(a, grad.reshape(a.shape))
    return _result(a.values.reshape(shape), (a,), backward)
