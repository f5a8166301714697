"""
AdamW with decoupled weight decay on non-bias, non-norm weights.
"""
from typing import Iterable, List, Tuple

import torch
from torch import nn

from pcode_config.errors import ConfigError


def no_decay(name: str, param: nn.Parameter) -> bool:
    return param.ndim <= 1 or name.endswith("bias") or "norm" in name.lower()


def build_optimizer(
    named_parameters: Iterable[Tuple[str, nn.Parameter]],
    lr: float,
    weight_decay: float = 0.01,
) -> torch.optim.AdamW:
    decay_params: List[nn.Parameter] = []
    no_decay_params: List[nn.Parameter] = []
    for name, param in named_parameters:
        if not param.requires_grad:
            continue
        (no_decay_params if no_decay(name, param) else decay_params).append(param)

    param_groups = [
        {"params": decay_params, "weight_decay": weight_decay},
        {"params": no_decay_params, "weight_decay": 0.0},
    ]
    groups = [g for g in param_groups if g["params"]]
    if not groups:
        raise ConfigError("No trainable parameters to optimize")
    return torch.optim.AdamW(groups, lr=lr)
