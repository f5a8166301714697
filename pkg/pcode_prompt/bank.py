"""
PromptBank: trainable prompt embeddings reparameterized by a Bi-LSTM + MLP.
"""
from typing import List, Optional

import torch
from torch import nn

from pcode_config.errors import ConfigError


class PromptBank(nn.Module):
    """
    m prompt embeddings passed through a 2-layer bidirectional LSTM and a 2-layer
    ReLU MLP before they are spliced into the input.

    The LSTM runs over the prompt sequence, so each prompt vector depends on all
    others. The reparameterizer is kept at inference.

    Args:
        m: Number of prompt tokens.
        hidden_dim: Encoder width d; must be even (each LSTM direction is d/2 wide).
        init_std: Std of the normal initializer for prompt embeddings.
        seed: Seed for the prompt-embedding initializer.
        trainable: Whether optimizer steps may update the bank.
    """

    def __init__(
        self,
        m: int,
        hidden_dim: int,
        init_std: float = 0.02,
        seed: Optional[int] = None,
        trainable: bool = True,
    ):
        super().__init__()
        if m < 0:
            raise ConfigError(f"Prompt count must be >= 0, got {m}")
        if hidden_dim % 2:
            raise ConfigError(f"Prompt bank needs an even hidden_dim, got {hidden_dim}")
        self.m = m
        self.hidden_dim = hidden_dim

        generator = torch.Generator()
        if seed is not None:
            generator.manual_seed(seed)
        self.prompt_embeddings = nn.Parameter(
            torch.randn(m, hidden_dim, generator=generator) * init_std
        )
        self.lstm = nn.LSTM(
            input_size=hidden_dim,
            hidden_size=hidden_dim // 2,
            num_layers=2,
            bidirectional=True,
            batch_first=True,
        )
        self.mlp = nn.Sequential(
            nn.Linear(hidden_dim, hidden_dim),
            nn.ReLU(),
            nn.Linear(hidden_dim, hidden_dim),
        )
        self.set_trainable(trainable)

    @property
    def trainable(self) -> bool:
        return self._trainable

    def set_trainable(self, trainable: bool) -> None:
        self._trainable = trainable
        for param in self.parameters():
            param.requires_grad_(trainable)

    @property
    def shape(self) -> List[int]:
        return [self.m, self.hidden_dim]

    def forward(self) -> torch.Tensor:
        """Prompt vectors, shape (m, d); (0, d) when m = 0"""
        if self.m == 0:
            return self.prompt_embeddings
        states, _ = self.lstm(self.prompt_embeddings.unsqueeze(0))
        return self.mlp(states.squeeze(0))


def encode_prompt_bank(bank: PromptBank) -> torch.Tensor:
    return bank()
