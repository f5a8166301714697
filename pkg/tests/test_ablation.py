"""
Tests for single-axis ablations.
"""

import pandas as pd
import pytest

from pcode_config.errors import ConfigError
from pcode_eval.ablation import ablate, default_values, summarize, variants
from pcode_eval.experiment import ExperimentSpec, LayoutConfig


@pytest.fixture
def spec():
    return ExperimentSpec(mode="zero_shot", task="cd", source_lang="toya", target_lang="toyb",
                          source_train_size=16, test_size=8, seeds=[13],
                          layout=LayoutConfig(mode="uniform", m=4))


class TestVariants:
    """Test cases for building one spec per axis value."""

    def test_sorted_by_value(self, spec, toy_setup):
        values = [value for value, _ in variants(spec, toy_setup, "prompt_count", [15, 1, 5])]
        assert values == [1, 5, 15]

    def test_positions_in_canonical_order(self, spec, toy_setup):
        out = variants(spec, toy_setup, "prompt_position", ["tail", "head", "uniform"])
        assert [value for value, _ in out] == ["head", "uniform", "tail"]
        assert [s.layout.mode for _, s in out] == ["head", "uniform", "tail"]
        assert all(s.layout.m == 4 for _, s in out)

    def test_only_the_axis_changes(self, spec, toy_setup):
        (_, varied), = variants(spec, toy_setup, "source_language", ["ToyB"])
        assert varied.source_lang == "toyb"
        assert varied.model_dump(exclude={"source_lang"}) == spec.model_dump(exclude={"source_lang"})

    @pytest.mark.parametrize("count", [0, 21])
    def test_prompt_count_range(self, spec, toy_setup, count):
        with pytest.raises(ConfigError):
            variants(spec, toy_setup, "prompt_count", [count])

    def test_unknown_axis(self, spec, toy_setup):
        with pytest.raises(ConfigError):
            variants(spec, toy_setup, "learning_rate", [1e-3])

    def test_unknown_position(self, spec, toy_setup):
        with pytest.raises(ConfigError):
            variants(spec, toy_setup, "prompt_position", ["sideways"])

    def test_default_values(self):
        assert default_values("prompt_position") == ["head", "middle", "uniform", "tail"]
        assert default_values("prompt_count") == [1, 5, 10, 15, 20]
        with pytest.raises(ConfigError):
            default_values("source_language")


class TestAblate:
    def test_table_and_csv(self, spec, toy_setup, tmp_path):
        out_csv = tmp_path / "ablation.csv"
        table = ablate(spec, toy_setup, "prompt_count", [2, 1], out_csv=out_csv)
        assert list(table["value"]) == [1, 2]
        assert set(table["axis"]) == {"prompt_count"}
        assert table["target_test_sha256"].nunique() == 1
        assert table["source_train_sha256"].nunique() == 1
        assert (toy_setup.run_dir / "prompt_count=1" / "report.json").exists()
        assert pd.read_csv(out_csv)["value"].tolist() == [1, 2]


class TestSummarize:
    def test_mean_and_std_per_value(self):
        table = pd.DataFrame({"value": [1, 1, 5, 5], "seed": [13, 42, 13, 42],
                              "accuracy": [0.5, 0.7, 0.9, 0.9]})
        summary = summarize(table, "accuracy")
        assert summary["value"].tolist() == [1, 5]
        assert summary["mean"].tolist() == pytest.approx([0.6, 0.9])
        assert summary["std"].tolist() == pytest.approx([0.1, 0.0])
        assert summary["seeds"].tolist() == [2, 2]
