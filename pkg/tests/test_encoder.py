"""
Tests for the CodeEncoder backbone.
"""

import pytest
import torch
import torch.nn.functional as F

from pcode_backend.config import ModelConfig
from pcode_backend.model import CodeEncoder, check_finite
from pcode_config.errors import ConfigError, InputTooLongError, NumericError
from tests.gradients import sampled_gradient_error


class TestModelConfig:
    def test_heads_must_divide_width(self):
        with pytest.raises(ValueError):
            ModelConfig(hidden_dim=30, num_heads=4)

    def test_ffn_width_default(self):
        assert ModelConfig(hidden_dim=32, num_heads=2).ffn_width == 128


class TestCodeEncoder:
    """Test cases for encoding and the MLM head."""

    def test_shapes(self, encoder, tiny_config):
        ids = torch.tensor([[2, 10, 11, 12], [2, 13, 14, 0]])
        hidden = encoder.encode_ids(ids, ids != 0)
        assert hidden.shape == (2, 4, tiny_config.hidden_dim)
        logits = encoder.mlm_logits(hidden)
        assert logits.shape == (2, 4, tiny_config.vocab_size)

    def test_unbatched_input(self, encoder):
        ids = torch.tensor([2, 10, 11])
        assert encoder.encode_ids(ids).shape == (3, encoder.hidden_dim)

    def test_padding_does_not_leak(self, encoder):
        """Masked positions never influence hidden states at real positions."""
        encoder.eval()
        short = torch.tensor([[2, 10, 11, 12]])
        padded = torch.tensor([[2, 10, 11, 12, 0, 0]])
        mask = torch.tensor([[True, True, True, True, False, False]])
        with torch.no_grad():
            a = encoder.encode_ids(short)
            b = encoder.encode_ids(padded, mask)
        assert torch.allclose(a[0], b[0, :4], atol=1e-5)

    def test_deterministic_in_eval(self, encoder):
        encoder.eval()
        ids = torch.tensor([[2, 10, 11, 12]])
        with torch.no_grad():
            assert torch.equal(encoder.encode_ids(ids), encoder.encode_ids(ids))

    def test_mlm_predict_is_distribution(self, encoder):
        encoder.eval()
        with torch.no_grad():
            hidden = encoder.encode_ids(torch.tensor([[2, 10, 4]]))[0, -1]
            dist = encoder.mlm_predict(hidden)
        assert dist.shape == (encoder.config.vocab_size,)
        assert float(dist.sum()) == pytest.approx(1.0, abs=1e-5)
        assert bool((dist >= 0).all())

    def test_mlm_predict_wrong_width(self, encoder):
        with pytest.raises(ConfigError):
            encoder.mlm_predict(torch.zeros(encoder.hidden_dim + 1))

    def test_too_long(self, encoder, tiny_config):
        ids = torch.zeros(1, tiny_config.max_seq_len + 1, dtype=torch.long)
        with pytest.raises(InputTooLongError) as exc_info:
            encoder.encode_ids(ids)
        assert exc_info.value.limit == tiny_config.max_seq_len

    def test_mask_shape_mismatch(self, encoder):
        with pytest.raises(ConfigError):
            encoder.encode_ids(torch.tensor([[2, 10]]), torch.ones(1, 3, dtype=torch.bool))

    def test_gradient_matches_finite_differences(self, tiny_config):
        """Analytic gradients with respect to input embeddings match numeric ones."""
        torch.manual_seed(0)
        encoder = CodeEncoder(tiny_config).double().eval()
        embeddings = torch.randn(1, 4, tiny_config.hidden_dim, dtype=torch.float64,
                                 requires_grad=True)
        assert torch.autograd.gradcheck(lambda e: encoder.encode(e).sum(dim=-1), (embeddings,),
                                        eps=1e-6, atol=1e-4)

    def test_tied_mlm_head(self, encoder):
        names = dict(encoder.named_parameters())
        assert "mlm_decoder.weight" not in names

    def test_check_finite(self):
        check_finite(torch.ones(3), "values")
        with pytest.raises(NumericError):
            check_finite(torch.tensor([1.0, float("nan")]), "values")


class TestEncoderProperties:
    """Normalization, symmetry and gradient properties of the backbone."""

    def test_mlm_predict_sums_to_one(self, tiny_config):
        torch.manual_seed(0)
        encoder = CodeEncoder(tiny_config).double().eval()
        scales = torch.logspace(-2, 2, 1000, dtype=torch.float64)[:, None]
        hidden = torch.randn(1000, tiny_config.hidden_dim, dtype=torch.float64) * scales
        with torch.no_grad():
            totals = encoder.mlm_predict(hidden).sum(dim=-1)
        assert torch.allclose(totals, torch.ones(1000, dtype=torch.float64), atol=1e-6)

    def test_softmax_of_known_logits(self, tiny_config):
        encoder = CodeEncoder(tiny_config.model_copy(update={"vocab_size": 8})).eval()
        with torch.no_grad():
            # a zero norm makes the logits equal the bias
            encoder.mlm_norm.weight.zero_()
            encoder.mlm_norm.bias.zero_()
            encoder.mlm_bias.copy_(torch.tensor([1.0, 2.0, 3.0] + [-1e4] * 5))
            dist = encoder.mlm_predict(torch.randn(tiny_config.hidden_dim))
        assert dist[:3].tolist() == pytest.approx([0.09003, 0.24473, 0.66524], abs=1e-5)

    def test_zero_head_is_uniform(self, tiny_config):
        encoder = CodeEncoder(tiny_config).eval()
        with torch.no_grad():
            encoder.word_embeddings.weight.zero_()
            encoder.mlm_bias.zero_()
            dist = encoder.mlm_predict(torch.randn(tiny_config.hidden_dim))
        expected = torch.full_like(dist, 1.0 / tiny_config.vocab_size)
        assert torch.allclose(dist, expected, atol=1e-7)

    def test_permutation_equivariant_without_positions(self, tiny_config):
        torch.manual_seed(0)
        encoder = CodeEncoder(tiny_config).eval()
        embeddings = torch.randn(1, 6, tiny_config.hidden_dim)
        perm = torch.tensor([3, 0, 5, 1, 4, 2])
        with torch.no_grad():
            assert not torch.allclose(encoder.encode(embeddings)[:, perm],
                                      encoder.encode(embeddings[:, perm]), atol=1e-5)
            encoder.position_embeddings.weight.zero_()
            permuted_after = encoder.encode(embeddings)[:, perm]
            permuted_before = encoder.encode(embeddings[:, perm])
        assert torch.allclose(permuted_after, permuted_before, atol=1e-5)

    def test_parameter_gradients_match_central_differences(self, tiny_config):
        torch.manual_seed(0)
        encoder = CodeEncoder(tiny_config).double().eval()
        ids = torch.tensor([[2, 10, 11, 12, 13, 4]])
        targets = torch.tensor([2, 11, 12, 13, 14, 15])

        def loss():
            return F.cross_entropy(encoder.mlm_logits(encoder.encode_ids(ids))[0], targets)

        assert sampled_gradient_error(loss, encoder.parameters(), count=64) < 1e-4
