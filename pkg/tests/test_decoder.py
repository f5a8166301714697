"""
Tests for the decoder header and decoding strategies.
"""

import pytest
import torch

from pcode_config.errors import ConfigError
from pcode_tasks.decoder import DecoderHeader, beam_decode, decode, greedy_decode

BOS, EOS = 5, 6


@pytest.fixture
def header():
    torch.manual_seed(0)
    return DecoderHeader(vocab_size=40, hidden_dim=16, num_layers=2, num_heads=2, dropout=0.0,
                         max_target_len=12).eval()


@pytest.fixture
def memory():
    torch.manual_seed(1)
    return torch.randn(1, 7, 16)


class TestDecoderHeader:
    def test_logits_shape(self, header, memory):
        target_in = torch.tensor([[BOS, 10, 11]])
        assert header(target_in, memory).shape == (1, 3, 40)

    def test_causal(self, header, memory):
        """Changing a later target token leaves earlier logits untouched."""
        with torch.no_grad():
            a = header(torch.tensor([[BOS, 10, 11]]), memory)
            b = header(torch.tensor([[BOS, 10, 30]]), memory)
        assert torch.allclose(a[:, :2], b[:, :2], atol=1e-6)
        assert not torch.allclose(a[:, 2], b[:, 2])

    def test_memory_width_checked(self, header):
        with pytest.raises(ConfigError):
            header(torch.tensor([[BOS]]), torch.randn(1, 3, 8))

    def test_target_too_long(self, header, memory):
        with pytest.raises(ConfigError):
            header(torch.full((1, 14), BOS), memory)


class TestDecoding:
    """Test cases for greedy and beam decoding."""

    def test_greedy_stops_at_eos_or_max_len(self, header, memory):
        output = greedy_decode(memory, header, 8, BOS, EOS)[0]
        assert 1 <= len(output) <= 8
        assert EOS not in output[:-1]

    def test_beam_of_one_is_greedy(self, header, memory):
        greedy = greedy_decode(memory, header, 10, BOS, EOS)[0]
        assert beam_decode(memory, header, 10, BOS, EOS, beam_size=1) == greedy

    def test_beam_respects_max_len(self, header, memory):
        assert len(beam_decode(memory, header, 5, BOS, EOS, beam_size=3)) <= 5

    def test_batched_greedy_matches_single(self, header):
        torch.manual_seed(2)
        memory = torch.randn(3, 7, 16)
        batched = greedy_decode(memory, header, 6, BOS, EOS)
        for row in range(3):
            assert batched[row] == greedy_decode(memory[row], header, 6, BOS, EOS)[0]

    def test_decode_dispatch(self, header, memory):
        assert decode(memory, header, 6, BOS, EOS) == greedy_decode(memory, header, 6, BOS, EOS)[0]
        with pytest.raises(ConfigError):
            decode(memory, header, 0, BOS, EOS)
        with pytest.raises(ConfigError):
            decode(memory, header, 4, BOS, EOS, strategy="sample")

    def test_single_step(self, header, memory):
        with torch.no_grad():
            best = int(header(torch.tensor([[BOS]]), memory)[0, -1].argmax())
        assert decode(memory, header, 1, BOS, EOS) == [best]
        assert decode(memory, header, 1, BOS, EOS, strategy="beam", beam_size=3) == [best]

    def test_max_len_beyond_position_table(self, memory):
        torch.manual_seed(0)
        short = DecoderHeader(vocab_size=20, hidden_dim=16, num_layers=1, num_heads=2,
                              dropout=0.0, max_target_len=4).eval()
        # an EOS id outside the vocabulary is never produced
        assert len(greedy_decode(memory, short, 10, 1, -1)[0]) == 4
        assert len(beam_decode(memory, short, 10, 1, -1, beam_size=2)) == 4
