"""
Splice prompt vectors into word embeddings at sentinel positions.
"""
import torch
from torch import nn

from pcode_config.errors import ConfigError


def compose_embeddings(
    ids: torch.Tensor, prompt_vectors: torch.Tensor, embedding_table: nn.Embedding
) -> torch.Tensor:
    """
    Input embeddings for ids containing negative prompt sentinels.

    Args:
        ids: (batch, length) or (length,) token ids; prompt k appears as -(k + 1).
        prompt_vectors: (m, d) output of the prompt bank.
        embedding_table: The encoder's word embeddings.

    Returns:
        (..., length, d) embeddings: table rows for real tokens, prompt rows in order.
    """
    width = embedding_table.embedding_dim
    if prompt_vectors.dim() != 2 or prompt_vectors.shape[1] != width:
        raise ConfigError(
            f"Prompt vectors of shape {tuple(prompt_vectors.shape)} do not match "
            f"embedding width {width}"
        )
    is_prompt = ids < 0
    words = embedding_table(ids.clamp(min=0))
    if not bool(is_prompt.any()):
        return words

    m = prompt_vectors.shape[0]
    slot = (-ids - 1).clamp(min=0)
    if int(slot[is_prompt].max()) >= m:
        raise ConfigError(f"Input references prompt {int(slot[is_prompt].max()) + 1} but bank has m={m}")
    prompts = prompt_vectors.to(words.dtype)[slot.clamp(max=max(m - 1, 0))]
    return torch.where(is_prompt.unsqueeze(-1), prompts, words)
