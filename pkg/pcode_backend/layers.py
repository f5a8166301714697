"""
Transformer building blocks shared by the encoder backbone and the decoder header.
"""
import math
from typing import Optional

import torch
import torch.nn.functional as F
from torch import nn


class MultiHeadAttention(nn.Module):
    """Scaled dot-product attention over ``num_heads`` heads.

    Used both as self-attention (``memory`` omitted) and as cross-attention.

    Args:
        hidden_dim: Width of queries, keys and values.
        num_heads: Number of heads; must divide ``hidden_dim``.
        dropout: Dropout on attention weights.
    """

    def __init__(self, hidden_dim: int, num_heads: int, dropout: float = 0.0):
        super().__init__()
        if hidden_dim % num_heads != 0:
            raise ValueError(f"hidden_dim={hidden_dim} not divisible by num_heads={num_heads}")
        self.num_heads = num_heads
        self.head_dim = hidden_dim // num_heads
        self.query = nn.Linear(hidden_dim, hidden_dim)
        self.key = nn.Linear(hidden_dim, hidden_dim)
        self.value = nn.Linear(hidden_dim, hidden_dim)
        self.output = nn.Linear(hidden_dim, hidden_dim)
        self.dropout = nn.Dropout(dropout)

    def _heads(self, x: torch.Tensor) -> torch.Tensor:
        batch, length, _ = x.shape
        return x.view(batch, length, self.num_heads, self.head_dim).transpose(1, 2)

    def forward(
        self,
        hidden: torch.Tensor,
        memory: Optional[torch.Tensor] = None,
        key_mask: Optional[torch.Tensor] = None,
        causal: bool = False,
    ) -> torch.Tensor:
        """
        Args:
            hidden: Queries, shape (batch, q_len, d).
            memory: Keys/values, shape (batch, k_len, d); defaults to ``hidden``.
            key_mask: Boolean (batch, k_len), True where a key may be attended to.
            causal: Forbid attention to later positions (self-attention only).

        Returns:
            Tensor of shape (batch, q_len, d).
        """
        source = hidden if memory is None else memory
        q = self._heads(self.query(hidden))
        k = self._heads(self.key(source))
        v = self._heads(self.value(source))

        scores = torch.matmul(q, k.transpose(-1, -2)) / math.sqrt(self.head_dim)
        fill = torch.finfo(scores.dtype).min
        if key_mask is not None:
            scores = scores.masked_fill(~key_mask[:, None, None, :], fill)
        if causal:
            q_len, k_len = scores.shape[-2:]
            future = torch.ones(q_len, k_len, dtype=torch.bool, device=scores.device).triu(1)
            scores = scores.masked_fill(future, fill)
        weights = self.dropout(torch.softmax(scores, dim=-1))

        context = torch.matmul(weights, v).transpose(1, 2).contiguous()
        batch, q_len = context.shape[:2]
        return self.output(context.view(batch, q_len, -1))


class FeedForward(nn.Module):
    """Position-wise two-layer network with GELU"""

    def __init__(self, hidden_dim: int, ffn_dim: int, dropout: float = 0.0):
        super().__init__()
        self.intermediate = nn.Linear(hidden_dim, ffn_dim)
        self.output = nn.Linear(ffn_dim, hidden_dim)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.output(self.dropout(F.gelu(self.intermediate(x))))


class EncoderLayer(nn.Module):
    """Post-norm self-attention block (BERT/RoBERTa layout)"""

    def __init__(self, hidden_dim: int, num_heads: int, ffn_dim: int, dropout: float, eps: float):
        super().__init__()
        self.attention = MultiHeadAttention(hidden_dim, num_heads, dropout)
        self.attention_norm = nn.LayerNorm(hidden_dim, eps=eps)
        self.ffn = FeedForward(hidden_dim, ffn_dim, dropout)
        self.ffn_norm = nn.LayerNorm(hidden_dim, eps=eps)
        self.dropout = nn.Dropout(dropout)

    def forward(self, hidden: torch.Tensor, key_mask: Optional[torch.Tensor]) -> torch.Tensor:
        hidden = self.attention_norm(
            hidden + self.dropout(self.attention(hidden, key_mask=key_mask))
        )
        return self.ffn_norm(hidden + self.dropout(self.ffn(hidden)))


class DecoderLayer(nn.Module):
    """Post-norm block: causal self-attention, cross-attention over encoder states, FFN"""

    def __init__(self, hidden_dim: int, num_heads: int, ffn_dim: int, dropout: float, eps: float):
        super().__init__()
        self.self_attention = MultiHeadAttention(hidden_dim, num_heads, dropout)
        self.self_norm = nn.LayerNorm(hidden_dim, eps=eps)
        self.cross_attention = MultiHeadAttention(hidden_dim, num_heads, dropout)
        self.cross_norm = nn.LayerNorm(hidden_dim, eps=eps)
        self.ffn = FeedForward(hidden_dim, ffn_dim, dropout)
        self.ffn_norm = nn.LayerNorm(hidden_dim, eps=eps)
        self.dropout = nn.Dropout(dropout)

    def forward(
        self,
        hidden: torch.Tensor,
        memory: torch.Tensor,
        memory_mask: Optional[torch.Tensor],
        target_mask: Optional[torch.Tensor],
    ) -> torch.Tensor:
        hidden = self.self_norm(
            hidden + self.dropout(self.self_attention(hidden, key_mask=target_mask, causal=True))
        )
        hidden = self.cross_norm(
            hidden + self.dropout(self.cross_attention(hidden, memory=memory, key_mask=memory_mask))
        )
        return self.ffn_norm(hidden + self.dropout(self.ffn(hidden)))


def init_weights(module: nn.Module, std: float) -> None:
    """Normal(0, std) for linear and embedding weights, zeros for biases, unit norms"""
    if isinstance(module, nn.Linear):
        nn.init.normal_(module.weight, mean=0.0, std=std)
        if module.bias is not None:
            nn.init.zeros_(module.bias)
    elif isinstance(module, nn.Embedding):
        nn.init.normal_(module.weight, mean=0.0, std=std)
    elif isinstance(module, nn.LayerNorm):
        nn.init.ones_(module.weight)
        nn.init.zeros_(module.bias)
