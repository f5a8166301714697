"""
Transformer decoder header for generative tasks, with greedy and beam decoding.
"""
from typing import List, Literal, Optional, Tuple

import torch
from torch import nn

from pcode_backend.layers import DecoderLayer, init_weights
from pcode_config.errors import ConfigError

DecodeStrategy = Literal["greedy", "beam"]


class DecoderHeader(nn.Module):
    """
    Randomly initialized decoder stacked on the encoder's hidden states.

    Args:
        vocab_size: Output vocabulary size.
        hidden_dim: Must equal the encoder width (cross-attention key/value dim).
        num_layers: Decoder depth, 6 by default.
        max_target_len: Longest target the position table supports.
    """

    def __init__(
        self,
        vocab_size: int,
        hidden_dim: int,
        num_layers: int = 6,
        num_heads: int = 4,
        ffn_dim: int = 0,
        dropout: float = 0.1,
        max_target_len: int = 128,
        init_std: float = 0.02,
        layer_norm_eps: float = 1e-12,
    ):
        super().__init__()
        self.hidden_dim = hidden_dim
        self.max_target_len = max_target_len
        self.token_embeddings = nn.Embedding(vocab_size, hidden_dim)
        self.position_embeddings = nn.Embedding(max_target_len + 1, hidden_dim)
        self.embedding_norm = nn.LayerNorm(hidden_dim, eps=layer_norm_eps)
        self.dropout = nn.Dropout(dropout)
        self.layers = nn.ModuleList(
            DecoderLayer(hidden_dim, num_heads, ffn_dim or 4 * hidden_dim, dropout, layer_norm_eps)
            for _ in range(num_layers)
        )
        self.projection = nn.Linear(hidden_dim, vocab_size)
        self.apply(lambda m: init_weights(m, init_std))

    def forward(
        self,
        target_in: torch.Tensor,
        memory: torch.Tensor,
        memory_mask: Optional[torch.Tensor] = None,
        target_mask: Optional[torch.Tensor] = None,
    ) -> torch.Tensor:
        """
        Teacher-forced logits.

        Args:
            target_in: (batch, T) ids starting with BOS.
            memory: (batch, S, d) encoder states.
            memory_mask: (batch, S) True on real encoder positions.
            target_mask: (batch, T) True on real target positions.

        Returns:
            (batch, T, vocab) logits.
        """
        if memory.shape[-1] != self.hidden_dim:
            raise ConfigError(
                f"Encoder width {memory.shape[-1]} != decoder cross-attention dim {self.hidden_dim}"
            )
        length = target_in.shape[1]
        if length > self.max_target_len + 1:
            raise ConfigError(f"Target length {length} exceeds max_target_len={self.max_target_len}")
        positions = torch.arange(length, device=target_in.device)
        hidden = self.token_embeddings(target_in) + self.position_embeddings(positions)[None]
        hidden = self.dropout(self.embedding_norm(hidden))
        for layer in self.layers:
            hidden = layer(hidden, memory, memory_mask, target_mask)
        return self.projection(hidden)


def _as_batch(states: torch.Tensor, mask: Optional[torch.Tensor]) -> Tuple[torch.Tensor, Optional[torch.Tensor]]:
    if states.dim() == 2:
        states = states.unsqueeze(0)
        mask = mask.unsqueeze(0) if mask is not None else None
    return states, mask


@torch.no_grad()
def greedy_decode(
    encoder_states: torch.Tensor,
    header: DecoderHeader,
    max_len: int,
    bos_id: int,
    eos_id: int,
    memory_mask: Optional[torch.Tensor] = None,
) -> List[List[int]]:
    """
    Greedy decoding for a batch; each output ends at EOS (inclusive) or after
    ``max_len`` tokens, capped at the header's ``max_target_len``.
    """
    max_len = min(max_len, header.max_target_len)
    memory, memory_mask = _as_batch(encoder_states, memory_mask)
    batch = memory.shape[0]
    prefix = torch.full((batch, 1), bos_id, dtype=torch.long, device=memory.device)
    done = torch.zeros(batch, dtype=torch.bool, device=memory.device)
    outputs: List[List[int]] = [[] for _ in range(batch)]
    for _ in range(max_len):
        logits = header(prefix, memory, memory_mask)[:, -1]
        next_ids = logits.argmax(dim=-1)
        for row in range(batch):
            if not done[row]:
                outputs[row].append(int(next_ids[row]))
        done |= next_ids == eos_id
        if bool(done.all()):
            break
        prefix = torch.cat([prefix, next_ids.unsqueeze(1)], dim=1)
    return outputs


@torch.no_grad()
def beam_decode(
    encoder_states: torch.Tensor,
    header: DecoderHeader,
    max_len: int,
    bos_id: int,
    eos_id: int,
    beam_size: int = 5,
    memory_mask: Optional[torch.Tensor] = None,
) -> List[int]:
    """
    Beam search for one example.

    Hypotheses finish on EOS or at ``max_len`` (capped at the header's
    ``max_target_len``); the winner maximizes the length-normalized
    log-probability. Only EOS tokens ranked inside the beam finish a hypothesis,
    so a beam of one reproduces greedy decoding.
    """
    memory, memory_mask = _as_batch(encoder_states, memory_mask)
    if memory.shape[0] != 1:
        raise ConfigError("beam_decode handles one example at a time")
    max_len = min(max_len, header.max_target_len)
    live: List[Tuple[float, List[int]]] = [(0.0, [])]
    finished: List[Tuple[float, List[int]]] = []

    for step in range(max_len):
        prefixes = torch.tensor([[bos_id] + seq for _, seq in live], dtype=torch.long,
                                device=memory.device)
        expanded = memory.expand(len(live), -1, -1)
        expanded_mask = memory_mask.expand(len(live), -1) if memory_mask is not None else None
        log_probs = torch.log_softmax(header(prefixes, expanded, expanded_mask)[:, -1], dim=-1)
        totals = log_probs + torch.tensor([score for score, _ in live],
                                          dtype=log_probs.dtype, device=log_probs.device)[:, None]
        flat = totals.reshape(-1)
        top_scores, top_index = flat.topk(min(2 * beam_size, flat.numel()))

        next_live: List[Tuple[float, List[int]]] = []
        vocab_size = log_probs.shape[-1]
        for rank, (score, index) in enumerate(zip(top_scores.tolist(), top_index.tolist())):
            source, token = divmod(index, vocab_size)
            seq = live[source][1] + [token]
            if token == eos_id or step == max_len - 1:
                if rank < beam_size:
                    finished.append((score, seq))
            elif len(next_live) < beam_size:
                next_live.append((score, seq))
            if len(next_live) == beam_size and rank >= beam_size - 1:
                break
        live = next_live
        if len(finished) >= beam_size or not live:
            break

    pool = finished or live
    return max(pool, key=lambda hyp: hyp[0] / max(len(hyp[1]), 1))[1]


def decode(
    encoder_states: torch.Tensor,
    header: DecoderHeader,
    max_len: int,
    bos_id: int,
    eos_id: int,
    strategy: DecodeStrategy = "greedy",
    beam_size: int = 5,
    memory_mask: Optional[torch.Tensor] = None,
) -> List[int]:
    """Decode one example's encoder states into target ids (EOS included when produced)"""
    if max_len < 1:
        raise ConfigError(f"max_len must be >= 1, got {max_len}")
    if strategy == "greedy":
        return greedy_decode(encoder_states, header, max_len, bos_id, eos_id, memory_mask)[0]
    if strategy == "beam":
        return beam_decode(encoder_states, header, max_len, bos_id, eos_id, beam_size, memory_mask)
    raise ConfigError(f"Unknown decoding strategy {strategy!r}")
