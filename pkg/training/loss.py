"""
L2 training loss: sum of squared errors over nodes (and over the batch when batched).
"""

from typing import Tuple

from autograd import functional as F
from autograd.tensor import Tensor, as_tensor
from errors import DimensionError


def l2_loss(pred: Tensor, truth) -> Tensor:
    truth = as_tensor(truth)
    if pred.shape != truth.shape:
        raise DimensionError(f"l2_loss: prediction {pred.shape} and truth {truth.shape} differ")
    diff = F.sub(pred, truth)
    return F.sum_all(F.mul(diff, diff))


def batch_objective(pred: Tensor, truth) -> Tuple[Tensor, float]:
    """
    (objective, summed loss) for a batch of B windows.

    The objective is the summed loss scaled by 1/B, which is what the optimizer differentiates.
    """
    total = l2_loss(pred, truth)
    batch = pred.shape[0] if pred.ndim == 3 else 1
    return F.scale(total, 1.0 / batch), total.item()


__all__ = ["l2_loss", "batch_objective"]
