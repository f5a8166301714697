"""
Cast downstream tasks into model-native inputs.

CD / CS / MNP become masked prediction over a verbalizer; CM / CG become
prefix-prompted sequence-to-sequence inputs.
"""
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

from loguru import logger

from pcode_backend.vocab import Vocabulary
from pcode_config.errors import ConfigError
from pcode_prompt.inject import MaskedInput, inject
from pcode_prompt.layout import TemplateLayout, build_layout
from pcode_tasks.verbalizer import Verbalizer


class TaskKind(str, Enum):
    CD = "cd"    # clone detection: <code, code>
    CS = "cs"    # code search: <NL query, code>
    MNP = "mnp"  # method name prediction: <code, name>
    CM = "cm"    # code summarization: code -> NL
    CG = "cg"    # code generation: NL -> code in a tagged language

    @property
    def is_classification(self) -> bool:
        return self in (TaskKind.CD, TaskKind.CS, TaskKind.MNP)

    @property
    def family(self) -> str:
        return "classification" if self.is_classification else "generative"


@dataclass
class ClassificationExample:
    x1: List[int]
    x2: List[int]
    label: int
    task: TaskKind
    language: str
    record_id: str = ""

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ConfigError(f"Classification label must be 0 or 1, got {self.label}")
        if not TaskKind(self.task).is_classification:
            raise ConfigError(f"{self.task} is not a classification task")


@dataclass
class GenerativeExample:
    source: List[int]
    target: List[int]
    task: TaskKind
    language: str
    record_id: str = ""


@dataclass
class CastResult:
    masked: MaskedInput
    target_id: int


def proportional_budget(len1: int, len2: int, budget: int) -> tuple:
    """Lengths to keep of two segments so they fit ``budget``, trimmed proportionally"""
    if len1 + len2 <= budget:
        return len1, len2
    keep1 = (budget * len1) // (len1 + len2)
    return keep1, budget - keep1


def cast_classification(
    ex: ClassificationExample,
    layout: TemplateLayout,
    vocab: Vocabulary,
    verbalizer: Verbalizer,
    max_seq_len: int = 512,
) -> CastResult:
    """
    Masked input for a pair task and the verbalizer id of its label.

    Over-long pairs are trimmed from the tail of each segment, in proportion to
    their lengths, so the template itself always survives.
    """
    budget = max_seq_len - layout.m - 1 - int(layout.mask)
    if budget < 0:
        raise ConfigError(f"Layout with m={layout.m} leaves no room under max_seq_len={max_seq_len}")
    keep1, keep2 = proportional_budget(len(ex.x1), len(ex.x2), budget)
    truncated = (keep1, keep2) != (len(ex.x1), len(ex.x2))
    if truncated:
        logger.debug(
            f"Truncated {ex.record_id or 'example'} from {len(ex.x1)}+{len(ex.x2)} to {keep1}+{keep2}"
        )
    masked = inject(ex.x1[:keep1], ex.x2[:keep2], layout, vocab, max_seq_len)
    masked.truncated = truncated
    return CastResult(masked=masked, target_id=verbalizer.target_id(ex.label))


def build_generative_input(
    source: List[int],
    language: Optional[str],
    task: TaskKind,
    m: int,
    vocab: Vocabulary,
    max_seq_len: int = 512,
) -> MaskedInput:
    """
    ``[CLS] P_1:m <language> source`` for CG, ``[CLS] P_1:m source`` for CM.

    Sources that do not fit are cut from the tail and flagged as truncated.
    """
    task = TaskKind(task)
    if task.is_classification:
        raise ConfigError(f"{task.value} is not a generative task")
    prefix: List[int] = []
    if task == TaskKind.CG:
        if not language:
            raise ConfigError("Code generation needs a target language tag")
        prefix = [vocab.tag_id(language)]

    layout = build_layout("head", m, pair_mode=False, mask=False)
    room = max_seq_len - 1 - m - len(prefix)
    if room < 0:
        raise ConfigError(f"m={m} leaves no room for the source under max_seq_len={max_seq_len}")
    kept = source[:room]
    masked = inject(prefix + kept, None, layout, vocab, max_seq_len)
    masked.truncated = len(kept) < len(source)

    start, end = masked.segment_spans.pop("x1")
    if prefix:
        masked.segment_spans["tag"] = (start, start + 1)
    masked.segment_spans["source"] = (start + len(prefix), end)
    return masked
