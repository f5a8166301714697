"""
Central-difference gradient checking over sampled parameter scalars.
"""
from typing import Callable, Iterable

import numpy as np
import torch

DENOMINATOR_FLOOR = 1e-4


def sampled_gradient_error(
    loss_fn: Callable[[], torch.Tensor],
    params: Iterable[torch.nn.Parameter],
    count: int = 64,
    eps: float = 1e-5,
    seed: int = 0,
) -> float:
    """
    Largest relative error between autograd and central differences at ``count``
    scalars drawn without replacement from ``params``.

    ``loss_fn`` must be deterministic (dropout off) and return a scalar; run it
    in float64. Relative error is |numeric - analytic| / max(|numeric|, |analytic|,
    DENOMINATOR_FLOOR).
    """
    params = [p for p in params if p.requires_grad]
    grads = torch.autograd.grad(loss_fn(), params, allow_unused=True)
    grads = [torch.zeros_like(p) if g is None else g for p, g in zip(params, grads)]

    offsets = np.cumsum([0] + [p.numel() for p in params])
    rng = np.random.default_rng(seed)
    picks = rng.choice(int(offsets[-1]), size=min(count, int(offsets[-1])), replace=False)

    worst = 0.0
    with torch.no_grad():
        for flat in picks:
            k = int(np.searchsorted(offsets, flat, side="right")) - 1
            index = int(flat - offsets[k])
            values = params[k].view(-1)
            original = float(values[index])
            values[index] = original + eps
            plus = float(loss_fn())
            values[index] = original - eps
            minus = float(loss_fn())
            values[index] = original

            numeric = (plus - minus) / (2 * eps)
            analytic = float(grads[k].view(-1)[index])
            scale = max(abs(numeric), abs(analytic), DENOMINATOR_FLOOR)
            worst = max(worst, abs(numeric - analytic) / scale)
    return worst
