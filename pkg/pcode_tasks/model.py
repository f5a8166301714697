"""
PromptedModel: encoder backbone + prompt bank (+ decoder header for generative tasks).
"""
from typing import Dict, List, Literal, Optional, Tuple

import torch
from loguru import logger
from torch import nn

from pcode_backend.model import CodeEncoder, check_finite
from pcode_backend.vocab import Vocabulary
from pcode_config.errors import ConfigError
from pcode_prompt.bank import PromptBank
from pcode_prompt.compose import compose_embeddings
from pcode_prompt.inject import InputBatch
from pcode_tasks.decoder import DecodeStrategy, DecoderHeader, beam_decode, greedy_decode
from pcode_tasks.verbalizer import Verbalizer, verbalize_batch

TrainableSet = Literal["prompts_only", "prompts_and_plm", "plm_only"]


class PromptedModel(nn.Module):
    """
    The full prompt-tuned model.

    ``encoder`` carries its own MLM head; ``prompt`` is the Bi-LSTM prompt
    bank; ``decoder`` is present only for CM / CG.
    """

    def __init__(self, encoder: CodeEncoder, prompt: PromptBank,
                 decoder: Optional[DecoderHeader] = None):
        super().__init__()
        if prompt.hidden_dim != encoder.hidden_dim:
            raise ConfigError(
                f"Prompt bank width {prompt.hidden_dim} != encoder width {encoder.hidden_dim}"
            )
        self.encoder = encoder
        self.prompt = prompt
        self.decoder = decoder

    @property
    def components(self) -> Dict[str, Optional[nn.Module]]:
        return {"encoder": self.encoder, "prompt": self.prompt, "decoder": self.decoder}

    def apply_trainable_set(self, trainable_set: TrainableSet) -> List[Tuple[str, nn.Parameter]]:
        """
        Freeze components per ``trainable_set`` and return the trainable named parameters.

        A prompt bank built with ``trainable=False`` stays frozen under every set.
        The decoder header, being randomly initialized, always trains.
        """
        if trainable_set not in ("prompts_only", "prompts_and_plm", "plm_only"):
            raise ConfigError(f"Unknown trainable_set {trainable_set!r}")
        for param in self.encoder.parameters():
            param.requires_grad_(trainable_set != "prompts_only")
        for param in self.prompt.parameters():
            param.requires_grad_(self.prompt.trainable and trainable_set != "plm_only")
        if self.decoder is not None:
            for param in self.decoder.parameters():
                param.requires_grad_(True)
        named = [(n, p) for n, p in self.named_parameters() if p.requires_grad]
        logger.debug(f"trainable_set={trainable_set}: {len(named)} trainable tensors")
        return named

    def encode_batch(self, batch: InputBatch) -> torch.Tensor:
        embeddings = compose_embeddings(batch.ids, self.prompt(), self.encoder.word_embeddings)
        return self.encoder.encode(embeddings, batch.attention_mask)

    def mask_logits(self, batch: InputBatch) -> torch.Tensor:
        """(batch, vocab) MLM logits at each example's [MASK] slot"""
        if batch.mask_index is None:
            raise ConfigError("Batch has no [MASK] slot")
        hidden = self.encode_batch(batch)
        rows = torch.arange(hidden.shape[0], device=hidden.device)
        logits = self.encoder.mlm_logits(hidden[rows, batch.mask_index])
        check_finite(logits, "MLM logits")
        return logits

    @torch.no_grad()
    def classify(self, batch: InputBatch, verbalizer: Verbalizer) -> Tuple[torch.Tensor, torch.Tensor]:
        """Predicted labels and renormalized scores"""
        probs = torch.softmax(self.mask_logits(batch), dim=-1)
        return verbalize_batch(probs, verbalizer)

    def decoder_logits(self, batch: InputBatch, target_in: torch.Tensor,
                       target_mask: Optional[torch.Tensor] = None) -> torch.Tensor:
        if self.decoder is None:
            raise ConfigError("Model has no decoder header")
        memory = self.encode_batch(batch)
        return self.decoder(target_in, memory, batch.attention_mask, target_mask)

    @torch.no_grad()
    def generate(
        self,
        batch: InputBatch,
        vocab: Vocabulary,
        max_len: int = 64,
        strategy: DecodeStrategy = "greedy",
        beam_size: int = 5,
    ) -> List[List[int]]:
        if self.decoder is None:
            raise ConfigError("Model has no decoder header")
        memory = self.encode_batch(batch)
        if strategy == "greedy":
            return greedy_decode(memory, self.decoder, max_len, vocab.bos_id, vocab.eos_id,
                                 batch.attention_mask)
        if strategy == "beam":
            return [
                beam_decode(memory[i], self.decoder, max_len, vocab.bos_id, vocab.eos_id,
                            beam_size, batch.attention_mask[i])
                for i in range(memory.shape[0])
            ]
        raise ConfigError(f"Unknown decoding strategy {strategy!r}")


def strip_special(ids: List[int], vocab: Vocabulary) -> List[int]:
    """Cut at the first EOS and drop PAD / BOS"""
    out: List[int] = []
    for token in ids:
        if token == vocab.eos_id:
            break
        if token not in (vocab.pad_id, vocab.bos_id):
            out.append(token)
    return out
