"""
Tests for the MLM and sequence-to-sequence objectives.
"""

import math

import numpy as np
import pytest
import torch

from pcode_config.errors import ConfigError, EmptyTargetError
from pcode_tasks.losses import PROB_FLOOR, mlm_loss, mlm_loss_from_logits, seq2seq_loss


class TestMlmLoss:
    def test_negative_log_probability(self):
        dist = torch.tensor([0.1, 0.6, 0.3], dtype=torch.float64)
        assert float(mlm_loss(dist, 1)) == pytest.approx(-math.log(0.6), abs=1e-12)

    def test_zero_probability_is_clamped(self):
        dist = torch.tensor([1.0, 0.0], dtype=torch.float64)
        assert float(mlm_loss(dist, 1)) == pytest.approx(-math.log(PROB_FLOOR))

    def test_target_out_of_range(self):
        with pytest.raises(ConfigError):
            mlm_loss(torch.tensor([0.5, 0.5]), 2)

    def test_logits_form_matches_probability_form(self):
        """Batched cross-entropy equals the mean of per-example -log p within 1e-6."""
        torch.manual_seed(0)
        logits = torch.randn(8, 30, dtype=torch.float64)
        targets = torch.randint(0, 30, (8,))
        expected = torch.stack([mlm_loss(torch.softmax(logits[i], -1), int(targets[i]))
                                for i in range(8)]).mean()
        assert float(mlm_loss_from_logits(logits, targets)) == pytest.approx(float(expected), abs=1e-6)

    def test_known_distribution(self):
        dist = torch.tensor([0.2, 0.3, 0.5], dtype=torch.float64)
        assert float(mlm_loss(dist, 2)) == pytest.approx(0.693147, abs=1e-6)

    def test_certain_target(self):
        assert float(mlm_loss(torch.tensor([0.0, 1.0, 0.0]), 1)) == 0.0

    def test_uniform_is_log_vocab_size(self):
        dist = torch.full((50,), 1 / 50, dtype=torch.float64)
        assert float(mlm_loss(dist, 17)) == pytest.approx(math.log(50), abs=1e-12)

    def test_matches_scalar_cross_entropy(self):
        """1000 random distributions against -(l_t - log sum exp l) in plain floats."""
        rng = np.random.default_rng(0)
        for _ in range(1000):
            logits = rng.normal(scale=2.0, size=int(rng.integers(2, 60))).tolist()
            target = int(rng.integers(len(logits)))
            expected = -(logits[target] - math.log(sum(math.exp(v) for v in logits)))
            dist = torch.softmax(torch.tensor(logits, dtype=torch.float64), dim=-1)
            assert float(mlm_loss(dist, target)) == pytest.approx(expected, abs=1e-9)

    def test_decreases_as_target_probability_grows(self):
        losses = []
        for p in (0.1, 0.3, 0.5, 0.9):
            rest = (1 - p) / 2
            losses.append(float(mlm_loss(torch.tensor([rest, p, rest], dtype=torch.float64), 1)))
        assert losses == sorted(losses, reverse=True)
        assert len(set(losses)) == 4


class TestSeq2SeqLoss:
    def test_mean_over_non_pad_tokens(self):
        torch.manual_seed(0)
        logits = torch.randn(2, 4, 10, dtype=torch.float64)
        target = torch.tensor([[3, 4, 5, 0], [6, 0, 0, 0]])
        log_probs = torch.log_softmax(logits, dim=-1)
        picks = [log_probs[0, 0, 3], log_probs[0, 1, 4], log_probs[0, 2, 5], log_probs[1, 0, 6]]
        expected = -sum(float(p) for p in picks) / 4
        assert float(seq2seq_loss(logits, target, pad_id=0)) == pytest.approx(expected, abs=1e-6)

    def test_all_pad_target(self):
        with pytest.raises(EmptyTargetError):
            seq2seq_loss(torch.zeros(1, 3, 5), torch.zeros(1, 3, dtype=torch.long), pad_id=0)

    def test_misaligned_shapes(self):
        with pytest.raises(ConfigError):
            seq2seq_loss(torch.zeros(1, 3, 5), torch.ones(1, 4, dtype=torch.long), pad_id=0)

    def test_perfect_logits(self):
        target = torch.tensor([[3, 1, 4]])
        logits = torch.nn.functional.one_hot(target, 8).double() * 1e4
        assert float(seq2seq_loss(logits, target, pad_id=0)) == pytest.approx(0.0, abs=1e-12)

    def test_uniform_logits(self):
        target = torch.tensor([[3, 1, 4, 0]])
        logits = torch.zeros(1, 4, 8, dtype=torch.float64)
        loss = seq2seq_loss(logits, target, pad_id=0)
        assert float(loss) == pytest.approx(math.log(8), abs=1e-12)
