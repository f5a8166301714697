"""
Pluggable pre-trained model backend: vocabulary, tokenizers, encoder, checkpoints.
"""

from .archive import load_checkpoint, load_pretrained_archive, save_checkpoint
from .config import ModelConfig
from .model import CodeEncoder
from .store import ParameterStore
from .tokenizer import WhitespacePunctTokenizer, WordPieceTokenizer, get_tokenizer
from .vocab import Vocabulary, language_tag

__all__ = [
    'CodeEncoder',
    'ModelConfig',
    'ParameterStore',
    'Vocabulary',
    'WhitespacePunctTokenizer',
    'WordPieceTokenizer',
    'get_tokenizer',
    'language_tag',
    'load_checkpoint',
    'load_pretrained_archive',
    'save_checkpoint',
]
