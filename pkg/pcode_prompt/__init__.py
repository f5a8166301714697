"""
Prompt templates, prompt injection and the Bi-LSTM prompt reparameterizer.
"""

from .bank import PromptBank, encode_prompt_bank
from .compose import compose_embeddings
from .inject import InputBatch, MaskedInput, inject, pad_batch
from .layout import PROMPT_MODES, TemplateLayout, build_layout

__all__ = [
    'InputBatch',
    'MaskedInput',
    'PROMPT_MODES',
    'PromptBank',
    'TemplateLayout',
    'build_layout',
    'compose_embeddings',
    'encode_prompt_bank',
    'inject',
    'pad_batch',
]
