"""
Template layouts: where the m prompt tokens, the input segments and [MASK] go.
"""
from typing import List, Literal, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from pcode_config.errors import ConfigError

PromptMode = Literal["head", "middle", "uniform", "tail"]
PROMPT_MODES: Tuple[str, ...] = ("head", "middle", "uniform", "tail")

# Template items: ("prompt", slot index) | ("x1",) | ("x2",) | ("mask",)
TemplateItem = Tuple


class TemplateLayout(BaseModel):
    """
    Placement plan for prompt slots, input segments and the mask slot.

    Pair layouts (two segments):
        head     [CLS] P x1 x2 [MASK]
        middle   [CLS] x1 P x2 [MASK]
        uniform  [CLS] P x1 P x2 P [MASK]
        tail     [CLS] x1 x2 [MASK] P
    Single-segment layouts drop x2 (uniform then has two slots around x1).
    With ``mask=False`` (generative inputs) the [MASK] slot is omitted.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    mode: PromptMode = "uniform"
    m: int = Field(default=10, ge=0)
    slot_sizes: List[int]
    mask_position: Literal["tail"] = "tail"
    pair_mode: bool = True
    mask: bool = True

    @model_validator(mode="after")
    def validate_slots(self) -> "TemplateLayout":
        if sum(self.slot_sizes) != self.m:
            raise ValueError(f"slot_sizes {self.slot_sizes} do not sum to m={self.m}")
        if any(size < 0 for size in self.slot_sizes):
            raise ValueError(f"slot_sizes must be non-negative: {self.slot_sizes}")
        expected = slot_count(self.mode, self.pair_mode)
        if len(self.slot_sizes) != expected:
            raise ValueError(
                f"mode={self.mode} (pair_mode={self.pair_mode}) needs {expected} slot(s), "
                f"got {len(self.slot_sizes)}"
            )
        return self

    def template(self) -> List[TemplateItem]:
        """Ordered template items after the leading [CLS]"""
        segments: List[TemplateItem] = [("x1",)] + ([("x2",)] if self.pair_mode else [])
        slots = [("prompt", i) for i in range(len(self.slot_sizes))]
        mask: List[TemplateItem] = [("mask",)] if self.mask else []
        if self.mode == "head":
            return [slots[0]] + segments + mask
        if self.mode == "middle":
            return segments[:1] + [slots[0]] + segments[1:] + mask
        if self.mode == "tail":
            return segments + mask + [slots[0]]
        items: List[TemplateItem] = []
        for slot, segment in zip(slots, segments):
            items += [slot, segment]
        return items + [slots[-1]] + mask


def slot_count(mode: str, pair_mode: bool) -> int:
    if mode == "uniform":
        return 3 if pair_mode else 2
    return 1


def even_split(m: int, parts: int) -> List[int]:
    """Split m into ``parts`` sizes differing by at most one, remainder leftmost"""
    base, remainder = divmod(m, parts)
    return [base + (1 if i < remainder else 0) for i in range(parts)]


def build_layout(mode: str, m: int, pair_mode: bool = True, mask: bool = True) -> TemplateLayout:
    """
    Build a layout for ``m`` prompts.

    Examples:
        build_layout("uniform", 10) -> slot_sizes [4, 3, 3]
        build_layout("head", 10)    -> slot_sizes [10]
    """
    if mode not in PROMPT_MODES:
        raise ConfigError(f"Unknown prompt mode {mode!r}; expected one of {PROMPT_MODES}")
    if m < 0:
        raise ConfigError(f"Prompt count must be >= 0, got {m}")
    sizes = even_split(m, slot_count(mode, pair_mode))
    return TemplateLayout(mode=mode, m=m, slot_sizes=sizes, pair_mode=pair_mode, mask=mask)
