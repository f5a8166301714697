"""
Verbalizer: maps candidate words predicted at [MASK] back to task labels.
"""
from typing import List, Mapping, Sequence, Tuple, Union

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict, Field, model_validator

from pcode_backend.tokenizer import Tokenizer, WhitespacePunctTokenizer, first_piece_id
from pcode_backend.vocab import Vocabulary
from pcode_config.errors import ConfigError

Distribution = Union[torch.Tensor, np.ndarray, Sequence[float]]

_LABEL_ALIASES = {"1": 1, "true": 1, "yes": 1, "0": 0, "false": 0, "no": 0}


def parse_label(key: Union[str, int, bool]) -> int:
    """Accept 1/0, true/false or yes/no label keys from config files"""
    if isinstance(key, bool):
        return int(key)
    if isinstance(key, int):
        return key
    normalized = str(key).strip().lower()
    if normalized in _LABEL_ALIASES:
        return _LABEL_ALIASES[normalized]
    if normalized.lstrip("-").isdigit():
        return int(normalized)
    raise ConfigError(f"Cannot interpret verbalizer label {key!r}")


class Verbalizer(BaseModel):
    """
    Positional bijection labels[i] <-> candidate_ids[i].

    The default maps true (1) -> "yes" and false (0) -> "no".
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    candidate_ids: List[int] = Field(..., min_length=2)
    labels: List[int] = Field(default_factory=lambda: [1, 0], min_length=2)
    words: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_bijection(self) -> "Verbalizer":
        if len(self.candidate_ids) != len(self.labels):
            raise ValueError(
                f"{len(self.candidate_ids)} candidate ids for {len(self.labels)} labels"
            )
        if len(set(self.candidate_ids)) != len(self.candidate_ids):
            raise ValueError(f"Candidate ids must be distinct: {self.candidate_ids}")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"Labels must be distinct: {self.labels}")
        if any(i < 0 for i in self.candidate_ids):
            raise ValueError(f"Candidate ids must be non-negative: {self.candidate_ids}")
        return self

    @classmethod
    def from_words(
        cls,
        mapping: Mapping[Union[str, int], str],
        vocab: Vocabulary,
        tokenizer: Tokenizer = WhitespacePunctTokenizer(),
    ) -> "Verbalizer":
        """Build from a {label: word} map; multi-piece words use their first piece"""
        labels, ids, words = [], [], []
        for key, word in sorted(mapping.items(), key=lambda kv: -parse_label(kv[0])):
            token_id = first_piece_id(word, vocab, tokenizer)
            if token_id == vocab.unk_id:
                raise ConfigError(f"Verbalizer word {word!r} is not in the vocabulary")
            labels.append(parse_label(key))
            ids.append(token_id)
            words.append(word)
        return cls(candidate_ids=ids, labels=labels, words=words)

    def target_id(self, label: int) -> int:
        try:
            return self.candidate_ids[self.labels.index(label)]
        except ValueError:
            raise ConfigError(f"Label {label} has no verbalizer word") from None

    def check_range(self, vocab_size: int) -> None:
        bad = [i for i in self.candidate_ids if i >= vocab_size]
        if bad:
            raise ConfigError(f"Candidate ids {bad} out of range for vocabulary of {vocab_size}")

    def _tie_order(self) -> List[int]:
        # Column order in which the first maximum wins: smallest (negative) label first.
        return sorted(range(len(self.labels)), key=lambda i: self.labels[i])


def verbalize(dist: Distribution, verbalizer: Verbalizer) -> Tuple[int, float]:
    """
    Label whose candidate word is most probable, and its share of candidate mass.

    Ties go to the smallest label, i.e. the negative label for binary tasks.

    Examples:
        p(yes)=0.7, p(no)=0.1 -> (1, 0.875)
        p(yes)=p(no)          -> (0, 0.5)
    """
    probs = torch.as_tensor(dist, dtype=torch.float64).reshape(-1)
    verbalizer.check_range(probs.shape[0])
    order = verbalizer._tie_order()
    candidate = probs[[verbalizer.candidate_ids[i] for i in order]]
    best = int(torch.argmax(candidate))
    total = float(candidate.sum())
    score = float(candidate[best]) / total if total > 0 else 1.0 / len(order)
    return verbalizer.labels[order[best]], score


def verbalize_batch(probs: torch.Tensor, verbalizer: Verbalizer) -> Tuple[torch.Tensor, torch.Tensor]:
    """Batched ``verbalize`` over (batch, vocab) probabilities; same tie rule"""
    verbalizer.check_range(probs.shape[-1])
    order = verbalizer._tie_order()
    columns = torch.tensor([verbalizer.candidate_ids[i] for i in order], device=probs.device)
    candidate = probs.index_select(-1, columns)
    best = candidate.argmax(dim=-1)
    total = candidate.sum(dim=-1)
    winner = candidate.gather(-1, best.unsqueeze(-1)).squeeze(-1)
    scores = torch.where(total > 0, winner / total.clamp(min=torch.finfo(probs.dtype).tiny),
                         torch.full_like(total, 1.0 / len(order)))
    ordered_labels = torch.tensor([verbalizer.labels[i] for i in order], device=probs.device)
    return ordered_labels[best], scores


def positive_scores(probs: torch.Tensor, verbalizer: Verbalizer, positive_label: int = 1) -> torch.Tensor:
    """Renormalized probability of the positive label; used to rank code-search candidates"""
    columns = torch.tensor(verbalizer.candidate_ids, device=probs.device)
    candidate = probs.index_select(-1, columns)
    positive = candidate[..., verbalizer.labels.index(positive_label)]
    return positive / candidate.sum(dim=-1).clamp(min=torch.finfo(probs.dtype).tiny)


def rank_candidates(scores: Sequence[float]) -> List[int]:
    """Candidate indices by descending score; stable for equal scores"""
    return sorted(range(len(scores)), key=lambda i: -float(scores[i]))
