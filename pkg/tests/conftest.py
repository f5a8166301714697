"""
Shared fixtures: a small vocabulary, a tiny encoder config and prepared toy-dialect data.
"""
from pathlib import Path

import pytest
import torch

from pcode_backend.config import ModelConfig
from pcode_backend.model import CodeEncoder
from pcode_backend.tokenizer import WhitespacePunctTokenizer
from pcode_backend.vocab import Vocabulary
from pcode_data.preprocess import PreprocessConfig, prepare_dataset
from pcode_data.schema import save_records
from pcode_data.synthetic import DIALECT_GRAMMARS, clone_records, generation_records
from pcode_eval.experiment import DecodeConfig, ExperimentSetup
from pcode_train.config import TrainConfig

SNIPPETS = [
    "func f ( x ) { let acc = 0 ; for v in x { acc = acc + v ; } return acc ; }",
    "proc g ( y ) { var res = 1 ; each w from y { res = res * w ; } give res ; }",
    "if x > 0 { return true ; } else { return false ; }",
    "sum of list",
    "add up every element of a list",
]

TOY_PREPROCESS = PreprocessConfig(min_tokens=5, max_tokens=400,
                                  comment_grammars=dict(DIALECT_GRAMMARS))


@pytest.fixture
def tokenizer():
    return WhitespacePunctTokenizer()


@pytest.fixture
def vocab(tokenizer):
    return Vocabulary.build([tokenizer.split(s) for s in SNIPPETS], languages=["toya", "toyb"])


@pytest.fixture
def tiny_config(vocab):
    return ModelConfig(hidden_dim=32, num_layers=2, num_heads=2, max_seq_len=128,
                       vocab_size=vocab.size, dropout=0.0)


@pytest.fixture
def encoder(tiny_config):
    torch.manual_seed(0)
    return CodeEncoder(tiny_config)


@pytest.fixture(scope="session")
def toy_data_root(tmp_path_factory) -> Path:
    """
    Prepared splits under ``<root>/<task>/<dialect>``: balanced CD pairs and
    canonical CG records for both toy dialects.
    """
    raw = tmp_path_factory.mktemp("raw")
    root = tmp_path_factory.mktemp("prepared")
    for dialect in ("toya", "toyb"):
        save_records(clone_records(dialect, 60, seed=1, positives_only=True),
                     raw / f"cd_{dialect}.jsonl")
        prepare_dataset(raw / f"cd_{dialect}.jsonl", root / "cd" / dialect, "cd", TOY_PREPROCESS)
        save_records(generation_records(dialect, 48, seed=1), raw / f"cg_{dialect}.jsonl")
        prepare_dataset(raw / f"cg_{dialect}.jsonl", root / "cg" / dialect, "cg", TOY_PREPROCESS)
    return root


@pytest.fixture
def toy_setup(toy_data_root, tmp_path) -> ExperimentSetup:
    return ExperimentSetup(
        data_root=toy_data_root,
        model=ModelConfig(hidden_dim=32, num_layers=2, num_heads=2, max_seq_len=160,
                          dropout=0.0),
        train=TrainConfig(base_lr=1e-3, batch_size=16, epochs=2, max_seq_len=160,
                          decoder_layers=1, max_target_len=48),
        decode=DecodeConfig(max_len=16),
        run_dir=tmp_path / "run",
        run_id="test",
    )
