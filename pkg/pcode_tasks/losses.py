"""
Training objectives: MLM cross-entropy at the mask slot and teacher-forced seq2seq loss.
"""
import torch
import torch.nn.functional as F
from loguru import logger

from pcode_config.errors import ConfigError, EmptyTargetError

PROB_FLOOR = 1e-12


def mlm_loss(dist: torch.Tensor, target_id: int) -> torch.Tensor:
    """
    Cross-entropy -log dist[target] for one probability vector.

    A zero target probability is clamped to 1e-12 and logged.
    """
    dist = torch.as_tensor(dist)
    if not 0 <= target_id < dist.shape[-1]:
        raise ConfigError(f"Target id {target_id} out of range for {dist.shape[-1]} classes")
    p = dist[..., target_id]
    if bool((p < PROB_FLOOR).any()):
        logger.warning(f"Target probability {float(p.min()):.3g} clamped to {PROB_FLOOR}")
        p = p.clamp(min=PROB_FLOOR)
    return -torch.log(p)


def mlm_loss_from_logits(logits: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    """Batched form of ``mlm_loss`` on (batch, vocab) logits, averaged over the batch"""
    return F.cross_entropy(logits, targets)


def seq2seq_loss(decoder_logits: torch.Tensor, target: torch.Tensor, pad_id: int) -> torch.Tensor:
    """
    Mean per-token cross-entropy over non-PAD target positions.

    Args:
        decoder_logits: (..., T, V) teacher-forced logits.
        target: (..., T) gold ids aligned with the logits.
    """
    if decoder_logits.shape[:-1] != target.shape:
        raise ConfigError(
            f"Logits {tuple(decoder_logits.shape)} do not align with target {tuple(target.shape)}"
        )
    keep = target != pad_id
    count = int(keep.sum())
    if count == 0:
        raise EmptyTargetError("Target contains only PAD tokens")
    total = F.cross_entropy(
        decoder_logits.reshape(-1, decoder_logits.shape[-1]),
        target.reshape(-1),
        ignore_index=pad_id,
        reduction="sum",
    )
    return total / count
