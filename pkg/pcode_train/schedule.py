"""
Linear warm-up then linear decay learning-rate schedule.
"""
from torch.optim import Optimizer
from torch.optim.lr_scheduler import LambdaLR

from pcode_config.errors import ConfigError


def lr_at(step: int, warmup_steps: int, total_steps: int, base_lr: float) -> float:
    """
    Learning rate after ``step`` optimizer steps.

    Rises linearly from 0 to ``base_lr`` over ``warmup_steps``, then falls linearly
    to 0 at ``total_steps``. Steps past the end return 0.

    Examples:
        lr_at(0, 100, 2000, 3e-5)    -> 0.0
        lr_at(100, 100, 2000, 3e-5)  -> 3e-5
        lr_at(1050, 100, 2000, 3e-5) -> 1.5e-5
    """
    if step < 0:
        raise ConfigError(f"step must be >= 0, got {step}")
    if warmup_steps < 0 or warmup_steps > total_steps:
        raise ConfigError(f"warmup_steps={warmup_steps} must lie in [0, total_steps={total_steps}]")
    if step >= total_steps:
        return 0.0
    if step < warmup_steps:
        return base_lr * step / warmup_steps
    return base_lr * (total_steps - step) / (total_steps - warmup_steps)


def build_scheduler(optimizer: Optimizer, warmup_steps: int, total_steps: int) -> LambdaLR:
    """LambdaLR whose multiplier follows ``lr_at`` with a unit base rate"""
    lr_at(0, warmup_steps, total_steps, 1.0)
    return LambdaLR(optimizer, lambda step: lr_at(step, warmup_steps, total_steps, 1.0))
