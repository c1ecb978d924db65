import numpy as np

from nettwin.exceptions import InvalidArgument
from . import tensor as T


def l2_penalty(params):
    total = T.Tensor(0.0)
    for tensor in params.tensors():
        total = total + T.sum(T.square(tensor))
    return total


def mse_l2_loss(pred, target, mask, params, lam):
    """
    Mean squared error over the entries where `mask` holds, plus
    lam * sum of squared parameters. Masked entries get zero gradient.
    """
    if lam < 0:
        raise InvalidArgument(f"l2 lambda must be non-negative, got {lam}")
    target = np.asarray(target, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if pred.shape != target.shape or mask.shape != target.shape:
        raise InvalidArgument(
            f"shape mismatch: pred {pred.shape}, target {target.shape}, mask {mask.shape}")
    valid = int(mask.sum())
    if valid == 0:
        raise InvalidArgument("no valid target entries")
    # undefined targets may be NaN; they must not leak through the mask
    safe_target = np.where(mask, target, 0.0)
    residual = T.where_mask(T.sub(pred, safe_target), mask)
    loss = T.mul(T.sum(T.square(residual)), 1.0 / valid)
    if lam > 0 and params is not None:
        loss = loss + T.mul(l2_penalty(params), lam)
    return loss
