"""
Tests for the fine-tuning baselines.
"""

import pytest
import torch

from pcode_backend.config import ModelConfig
from pcode_backend.model import CodeEncoder
from pcode_backend.store import ParameterStore
from pcode_config.errors import ConfigError
from pcode_data.synthetic import clone_records, generation_records
from pcode_train.baselines import BaselineClassifier, finetune_baseline, pair_input, prepare_pairs
from pcode_train.batching import build_vocabulary
from pcode_train.config import TrainConfig


@pytest.fixture
def records():
    return clone_records("toyb", 24, seed=4)


@pytest.fixture
def pair_vocab(records, tokenizer):
    return build_vocabulary(records, tokenizer, ["toya", "toyb"])


@pytest.fixture
def pair_encoder(pair_vocab):
    torch.manual_seed(0)
    return CodeEncoder(ModelConfig(hidden_dim=32, num_layers=1, num_heads=2, max_seq_len=160,
                                   vocab_size=pair_vocab.size, dropout=0.0))


@pytest.fixture
def pairs(records, pair_vocab, tokenizer):
    return prepare_pairs(records, pair_vocab, tokenizer, max_seq_len=160)


def config(**overrides) -> TrainConfig:
    settings = dict(base_lr=1e-3, batch_size=8, epochs=2, seed=1)
    settings.update(overrides)
    return TrainConfig(**settings)


class TestPairInput:
    def test_layout(self, vocab):
        masked = pair_input([20, 21], [22], vocab)
        assert masked.ids == [vocab.cls_id, 20, 21, vocab.sep_id, 22, vocab.sep_id]
        assert masked.mask_index is None
        assert not masked.truncated

    def test_truncation(self, vocab):
        masked = pair_input(list(range(20, 40)), list(range(40, 50)), vocab, max_seq_len=18)
        assert len(masked.ids) == 18
        assert masked.truncated


class TestFinetuneBaseline:
    """Test cases for the MLP-over-[CLS] and averaged-embedding baselines."""

    def test_avg_embed_freezes_backbone(self, pair_encoder, pair_vocab, pairs):
        before = ParameterStore.from_modules(encoder=pair_encoder)
        checkpoint, model = finetune_baseline(pair_encoder, pairs, pairs[:8], pair_vocab,
                                              "avg_embed", config())
        assert ParameterStore.from_modules(encoder=model.encoder).equals(before)
        assert checkpoint.metric_name == "accuracy"
        assert any(name.startswith("header.") for name in checkpoint.params)

    def test_mlp_cls_trains_backbone(self, pair_encoder, pair_vocab, pairs):
        before = ParameterStore.from_modules(encoder=pair_encoder)
        _, model = finetune_baseline(pair_encoder, pairs, (), pair_vocab, "mlp_cls", config())
        assert not ParameterStore.from_modules(encoder=model.encoder).equals(before)

    def test_predictions_are_labels(self, pair_encoder, pair_vocab, pairs):
        checkpoint, _ = finetune_baseline(pair_encoder, pairs, pairs[:8], pair_vocab, "mlp_cls",
                                          config())
        assert 0.0 <= checkpoint.metric_value <= 1.0
        assert checkpoint.history.optimizer_steps == 6

    @pytest.mark.parametrize("task", ["cm", "cg"])
    def test_generative_tasks_rejected(self, pair_encoder, pair_vocab, pairs, task):
        with pytest.raises(ConfigError):
            finetune_baseline(pair_encoder, pairs, (), pair_vocab, "mlp_cls", config(), task=task)

    def test_generative_records_rejected(self, pair_vocab, tokenizer):
        with pytest.raises(ConfigError):
            prepare_pairs(generation_records("toyb", 2), pair_vocab, tokenizer)

    def test_unknown_mode(self, pair_encoder):
        with pytest.raises(ConfigError):
            BaselineClassifier(pair_encoder, "linear_probe")
