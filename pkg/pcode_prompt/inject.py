"""
Inject prompt placeholders and the [MASK] slot into tokenized inputs.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import torch

from pcode_backend.vocab import Vocabulary
from pcode_config.errors import InputTooLongError, LayoutMismatchError
from pcode_prompt.layout import TemplateLayout


def prompt_sentinel(k: int) -> int:
    """Placeholder id of the k-th prompt (0-based); always negative"""
    return -(k + 1)


def sentinel_index(token_id: int) -> int:
    return -token_id - 1


@dataclass
class MaskedInput:
    """Token ids with prompt sentinels plus the bookkeeping to find each part"""

    ids: List[int]
    prompt_positions: List[int]
    mask_index: Optional[int]
    segment_spans: Dict[str, Tuple[int, int]] = field(default_factory=dict)
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.ids)

    def segment(self, name: str) -> List[int]:
        start, end = self.segment_spans[name]
        return self.ids[start:end]


def inject(
    x1: Sequence[int],
    x2: Optional[Sequence[int]],
    layout: TemplateLayout,
    vocab: Vocabulary,
    max_seq_len: int = 512,
) -> MaskedInput:
    """
    Lay out ``[CLS]`` + template items, e.g. for uniform pair mode
    ``[CLS] P_1:i x1 P_i+1:j x2 P_j+1:m [MASK]``.
    """
    if layout.pair_mode and x2 is None:
        raise LayoutMismatchError("Pair layout needs two input segments, got one")
    if not layout.pair_mode and x2 is not None:
        raise LayoutMismatchError("Single-segment layout given two input segments")

    total = 1 + len(x1) + (len(x2) if x2 is not None else 0) + layout.m + int(layout.mask)
    if total > max_seq_len:
        raise InputTooLongError(total, max_seq_len)

    ids: List[int] = [vocab.cls_id]
    prompt_positions: List[int] = []
    spans: Dict[str, Tuple[int, int]] = {}
    mask_index: Optional[int] = None
    segments = {"x1": list(x1), "x2": list(x2) if x2 is not None else []}
    next_prompt = 0

    for item in layout.template():
        kind = item[0]
        if kind == "prompt":
            for _ in range(layout.slot_sizes[item[1]]):
                prompt_positions.append(len(ids))
                ids.append(prompt_sentinel(next_prompt))
                next_prompt += 1
        elif kind == "mask":
            mask_index = len(ids)
            ids.append(vocab.mask_id)
        else:
            start = len(ids)
            ids.extend(segments[kind])
            spans[kind] = (start, len(ids))

    return MaskedInput(ids=ids, prompt_positions=prompt_positions, mask_index=mask_index,
                       segment_spans=spans)


@dataclass
class InputBatch:
    """Right-padded batch of MaskedInputs"""

    ids: torch.Tensor
    attention_mask: torch.Tensor
    mask_index: Optional[torch.Tensor]

    def __len__(self) -> int:
        return int(self.ids.shape[0])


def pad_batch(inputs: Sequence[MaskedInput], pad_id: int) -> InputBatch:
    """Pad to the longest input; sentinel ids are kept for ``compose_embeddings``"""
    length = max(len(item) for item in inputs)
    ids = torch.full((len(inputs), length), pad_id, dtype=torch.long)
    attention = torch.zeros((len(inputs), length), dtype=torch.bool)
    for row, item in enumerate(inputs):
        ids[row, : len(item)] = torch.tensor(item.ids, dtype=torch.long)
        attention[row, : len(item)] = True
    mask_index = None
    if all(item.mask_index is not None for item in inputs):
        mask_index = torch.tensor([item.mask_index for item in inputs], dtype=torch.long)
    return InputBatch(ids=ids, attention_mask=attention, mask_index=mask_index)
