"""Central finite-difference verification of analytic gradients."""
import numpy as np

from nettwin.exceptions import InvalidArgument
from .tensor import Tensor, no_grad


def relative_error(analytic, numeric, floor=1e-8):
    analytic, numeric = np.asarray(analytic), np.asarray(numeric)
    return np.abs(analytic - numeric) / np.maximum(floor, np.abs(analytic) + np.abs(numeric))


def numeric_gradient(evaluate, point, h):
    """Central differences of a scalar function of a numpy array."""
    point = np.array(point, dtype=np.float64)
    gradient = np.zeros_like(point)
    flat, out = point.reshape(-1), gradient.reshape(-1)
    for index in range(flat.size):
        original = flat[index]
        flat[index] = original + h
        upper = evaluate(point)
        flat[index] = original - h
        lower = evaluate(point)
        flat[index] = original
        out[index] = (upper - lower) / (2.0 * h)
    return gradient


def grad_check(function, point, h=1e-6, analytic=None):
    """
    Max over coordinates of |analytic - numeric| / max(1e-8, |analytic| + |numeric|).

    `function` maps a Tensor to a scalar Tensor. `analytic` overrides the
    back-propagated gradient, which lets a caller plant a faulty one.
    """
    if not h > 0:
        raise InvalidArgument(f"step must be positive, got {h}")
    point = np.asarray(point, dtype=np.float64)
    if analytic is None:
        variable = Tensor(point.copy(), requires_grad=True)
        function(variable).backward()
        analytic = variable.grad if variable.grad is not None else np.zeros(point.shape)

    def evaluate(values):
        with no_grad():
            return function(Tensor(values)).item()

    numeric = numeric_gradient(evaluate, point, h)
    return float(relative_error(analytic, numeric).max()) if point.size else 0.0


def grad_check_params(loss_fn, params, h=1e-6):
    """
    Check every parameter of a ParamStore: `loss_fn()` must build the loss
    from the store's tensors. Returns the max relative error per parameter.
    """
    params.zero_grad()
    loss_fn().backward()
    analytic = params.grads()
    errors = {}
    for name, tensor in params.items():
        def evaluate(values, tensor=tensor):
            saved = tensor.values
            tensor.values = values
            try:
                with no_grad():
                    return loss_fn().item()
            finally:
                tensor.values = saved
        numeric = numeric_gradient(evaluate, tensor.values, h)
        errors[name] = float(relative_error(analytic[name], numeric).max())
    params.zero_grad()
    return errors
