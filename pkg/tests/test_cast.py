"""
Tests for casting pair and generative tasks into model inputs.
"""

import pytest

from pcode_config.errors import ConfigError
from pcode_prompt.inject import prompt_sentinel
from pcode_prompt.layout import build_layout
from pcode_tasks.cast import (
    ClassificationExample,
    TaskKind,
    build_generative_input,
    cast_classification,
    proportional_budget,
)
from pcode_tasks.verbalizer import Verbalizer


@pytest.fixture
def verbalizer(vocab):
    return Verbalizer.from_words({"1": "yes", "0": "no"}, vocab)


class TestCastClassification:
    """Test cases for masked-prediction inputs of CD / CS / MNP."""

    def test_target_is_verbalizer_word(self, vocab, verbalizer):
        example = ClassificationExample(x1=[20, 21], x2=[22], label=1, task=TaskKind.CD,
                                        language="toya")
        cast = cast_classification(example, build_layout("uniform", 3), vocab, verbalizer)
        assert cast.target_id == vocab.token_to_id["yes"]
        assert cast.masked.ids[cast.masked.mask_index] == vocab.mask_id
        assert not cast.masked.truncated

    def test_proportional_truncation(self, vocab, verbalizer):
        """Both segments lose tail tokens in proportion; the template survives."""
        example = ClassificationExample(x1=list(range(20, 80)), x2=list(range(20, 50)), label=0,
                                        task=TaskKind.CS, language="toya")
        layout = build_layout("head", 10)
        cast = cast_classification(example, layout, vocab, verbalizer, max_seq_len=52)
        masked = cast.masked
        assert len(masked) == 52
        assert masked.truncated
        assert masked.segment("x1") == list(range(20, 46))
        assert masked.segment("x2") == list(range(20, 34))
        assert len(masked.prompt_positions) == 10

    def test_budget_split(self):
        assert proportional_budget(60, 30, 39) == (26, 13)
        assert proportional_budget(5, 5, 20) == (5, 5)

    def test_no_room_for_template(self, vocab, verbalizer):
        example = ClassificationExample(x1=[20], x2=[21], label=1, task=TaskKind.CD, language="toya")
        with pytest.raises(ConfigError):
            cast_classification(example, build_layout("head", 10), vocab, verbalizer, max_seq_len=8)

    def test_bad_label(self):
        with pytest.raises(ConfigError):
            ClassificationExample(x1=[1], x2=[2], label=2, task=TaskKind.CD, language="toya")

    def test_generative_task_rejected(self):
        with pytest.raises(ConfigError):
            ClassificationExample(x1=[1], x2=[2], label=1, task=TaskKind.CM, language="toya")


class TestGenerativeInput:
    """Test cases for prefix-prompted CM / CG inputs."""

    def test_code_generation_carries_tag(self, vocab):
        masked = build_generative_input([30, 31], "toyb", TaskKind.CG, 3, vocab)
        assert masked.ids == [vocab.cls_id, prompt_sentinel(0), prompt_sentinel(1),
                              prompt_sentinel(2), vocab.tag_id("toyb"), 30, 31]
        assert masked.mask_index is None
        assert masked.segment("tag") == [vocab.tag_id("toyb")]
        assert masked.segment("source") == [30, 31]

    def test_summarization_has_no_tag(self, vocab):
        masked = build_generative_input([30, 31], "toya", TaskKind.CM, 2, vocab)
        assert masked.ids == [vocab.cls_id, -1, -2, 30, 31]

    def test_unregistered_tag(self, vocab):
        with pytest.raises(ConfigError):
            build_generative_input([30], "haskell", TaskKind.CG, 2, vocab)

    def test_overflow_is_truncated_and_flagged(self, vocab):
        masked = build_generative_input(list(range(20, 60)), "toya", TaskKind.CG, 4, vocab,
                                        max_seq_len=16)
        assert len(masked) == 16
        assert masked.truncated
        assert masked.segment("source") == list(range(20, 30))

    def test_classification_task_rejected(self, vocab):
        with pytest.raises(ConfigError):
            build_generative_input([30], "toya", TaskKind.CD, 2, vocab)
