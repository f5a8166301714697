"""
Self-contained transformer encoder with an MLM head.

This is the built-in backbone. External models enter through the checkpoint
archive adapter (``pcode_backend.archive.load_pretrained_archive``) and must be
exported to the same parameter names.
"""
from typing import Optional

import torch
import torch.nn.functional as F
from torch import nn

from pcode_backend.config import ModelConfig
from pcode_backend.layers import EncoderLayer, init_weights
from pcode_config.errors import ConfigError, InputTooLongError, NumericError


class CodeEncoder(nn.Module):
    """
    Encoder mapping input embeddings to hidden states, plus the MLM head.

    Inputs are embeddings rather than ids so prompt vectors can be spliced in
    between word embeddings before position embeddings are added.
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        d = config.hidden_dim
        self.word_embeddings = nn.Embedding(config.vocab_size, d)
        self.position_embeddings = nn.Embedding(config.max_seq_len, d)
        self.embedding_norm = nn.LayerNorm(d, eps=config.layer_norm_eps)
        self.embedding_dropout = nn.Dropout(config.dropout)
        self.layers = nn.ModuleList(
            EncoderLayer(d, config.num_heads, config.ffn_width, config.dropout,
                         config.layer_norm_eps)
            for _ in range(config.num_layers)
        )
        self.mlm_dense = nn.Linear(d, d)
        self.mlm_norm = nn.LayerNorm(d, eps=config.layer_norm_eps)
        self.mlm_decoder: Optional[nn.Linear] = None
        if not config.mlm_head:
            self.mlm_decoder = nn.Linear(d, config.vocab_size, bias=False)
        self.mlm_bias = nn.Parameter(torch.zeros(config.vocab_size))
        self.apply(lambda m: init_weights(m, config.init_std))

    @property
    def hidden_dim(self) -> int:
        return self.config.hidden_dim

    def embed(self, ids: torch.Tensor) -> torch.Tensor:
        """Word-embedding lookup for non-negative ids"""
        return self.word_embeddings(ids)

    def encode(
        self, input_embeddings: torch.Tensor, attention_mask: Optional[torch.Tensor] = None
    ) -> torch.Tensor:
        """
        Run the encoder stack.

        Args:
            input_embeddings: (batch, length, d) or (length, d).
            attention_mask: Boolean of matching leading shape, True on real tokens.

        Returns:
            Hidden states with the same shape as ``input_embeddings``.
        """
        unbatched = input_embeddings.dim() == 2
        if unbatched:
            input_embeddings = input_embeddings.unsqueeze(0)
            if attention_mask is not None:
                attention_mask = attention_mask.unsqueeze(0)

        batch, length, width = input_embeddings.shape
        if length > self.config.max_seq_len:
            raise InputTooLongError(length, self.config.max_seq_len)
        if width != self.hidden_dim:
            raise ConfigError(f"Input width {width} != hidden_dim {self.hidden_dim}")
        if attention_mask is None:
            attention_mask = torch.ones(batch, length, dtype=torch.bool,
                                        device=input_embeddings.device)
        elif attention_mask.shape != (batch, length):
            raise ConfigError(
                f"attention_mask shape {tuple(attention_mask.shape)} != {(batch, length)}"
            )
        attention_mask = attention_mask.bool()

        positions = torch.arange(length, device=input_embeddings.device)
        hidden = input_embeddings + self.position_embeddings(positions)[None]
        hidden = self.embedding_dropout(self.embedding_norm(hidden))
        for layer in self.layers:
            hidden = layer(hidden, attention_mask)
        return hidden[0] if unbatched else hidden

    def encode_ids(
        self, ids: torch.Tensor, attention_mask: Optional[torch.Tensor] = None
    ) -> torch.Tensor:
        return self.encode(self.embed(ids), attention_mask)

    def mlm_logits(self, hidden: torch.Tensor) -> torch.Tensor:
        """Vocabulary logits for any (..., d) hidden states"""
        transformed = self.mlm_norm(F.gelu(self.mlm_dense(hidden)))
        weight = self.word_embeddings.weight if self.mlm_decoder is None else self.mlm_decoder.weight
        return F.linear(transformed, weight, self.mlm_bias)

    def mlm_predict(self, hidden_at_mask: torch.Tensor) -> torch.Tensor:
        """Probability distribution over the vocabulary for hidden states at [MASK]"""
        if hidden_at_mask.shape[-1] != self.hidden_dim:
            raise ConfigError(
                f"Expected {self.hidden_dim} hidden units, got {hidden_at_mask.shape[-1]}"
            )
        logits = self.mlm_logits(hidden_at_mask)
        check_finite(logits, "MLM logits")
        return torch.softmax(logits, dim=-1)


def check_finite(tensor: torch.Tensor, what: str) -> None:
    if not torch.isfinite(tensor).all():
        bad = int((~torch.isfinite(tensor)).sum())
        raise NumericError(f"{what} contain {bad} non-finite value(s)")
