"""
Task casting: verbalizer-based masked prediction and prefix-prompted generation.
"""

from .cast import (
    CastResult,
    ClassificationExample,
    GenerativeExample,
    TaskKind,
    build_generative_input,
    cast_classification,
)
from .decoder import DecoderHeader, decode
from .losses import mlm_loss, seq2seq_loss
from .model import PromptedModel, strip_special
from .verbalizer import Verbalizer, rank_candidates, verbalize

__all__ = [
    'CastResult',
    'ClassificationExample',
    'DecoderHeader',
    'GenerativeExample',
    'PromptedModel',
    'TaskKind',
    'Verbalizer',
    'build_generative_input',
    'cast_classification',
    'decode',
    'mlm_loss',
    'rank_candidates',
    'seq2seq_loss',
    'strip_special',
    'verbalize',
]
