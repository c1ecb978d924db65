import numpy as np

from nettwin.exceptions import InvalidArgument


def adam_step(params, grads=None, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    """
    One bias-corrected Adam update of every parameter in `params`.

    `grads` maps names to arrays; when omitted the tensors' accumulated
    gradients are used. The store is updated in place and returned.
    """
    if not lr > 0:
        raise InvalidArgument(f"learning rate must be positive, got {lr}")
    if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
        raise InvalidArgument(f"betas must lie in [0, 1), got ({beta1}, {beta2})")
    if grads is None:
        grads = params.grads()
    params.step += 1
    correction1 = 1.0 - beta1 ** params.step
    correction2 = 1.0 - beta2 ** params.step
    for name, tensor in params.items():
        grad = np.asarray(grads.get(name, np.zeros(tensor.shape)), dtype=np.float64)
        params.m[name] = beta1 * params.m[name] + (1.0 - beta1) * grad
        params.v[name] = beta2 * params.v[name] + (1.0 - beta2) * grad ** 2
        m_hat = params.m[name] / correction1
        v_hat = params.v[name] / correction2
        tensor.values -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return params
