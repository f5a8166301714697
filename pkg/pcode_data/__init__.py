"""
Task records, preprocessing and the synthetic two-dialect corpus.
"""
from .comments import COMMENT_GRAMMARS, CommentGrammar, strip_comments
from .preprocess import (
    PreprocessConfig,
    balance_with_negatives,
    length_filter,
    prepare_dataset,
    split_records,
)
from .records import load_records
from .schema import DatasetSplit, Provenance, RawRecord, save_records

__all__ = [
    "COMMENT_GRAMMARS",
    "CommentGrammar",
    "DatasetSplit",
    "PreprocessConfig",
    "Provenance",
    "RawRecord",
    "balance_with_negatives",
    "length_filter",
    "load_records",
    "prepare_dataset",
    "save_records",
    "split_records",
    "strip_comments",
]
