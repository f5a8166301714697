"""
Tests for RunConfig loading, validation and overrides.
"""

import json

import pytest

from pcode_config.errors import ConfigError
from pcode_config.run_config import apply_overrides, load_config, parse_override

BASE = {
    "verbalizer": {"1": "yes", "0": "no"},
    "experiment": {"mode": "zero_shot", "task": "cd", "source_lang": "toya",
                   "target_lang": "toyb"},
}


def write_config(tmp_path, data, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


class TestLoadConfig:
    """Test cases for reading and validating a run configuration."""

    def test_minimal_config(self, tmp_path):
        config = load_config(write_config(tmp_path, BASE))
        assert config.experiment.seeds == [13, 42, 87]
        assert config.layout.mode == "uniform"
        assert config.layout.m == 10

    def test_classification_needs_verbalizer(self, tmp_path):
        data = {"experiment": BASE["experiment"]}
        with pytest.raises(ConfigError) as exc_info:
            load_config(write_config(tmp_path, data))
        assert "verbalizer" in str(exc_info.value)

    def test_generative_task_without_verbalizer(self, tmp_path):
        data = {"experiment": {**BASE["experiment"], "task": "cg"}}
        assert load_config(write_config(tmp_path, data)).verbalizer is None

    def test_unknown_key_rejected(self, tmp_path):
        data = {**BASE, "train": {"learning_rate": 0.1}}
        with pytest.raises(ConfigError) as exc_info:
            load_config(write_config(tmp_path, data))
        assert "train.learning_rate" in str(exc_info.value)

    def test_wrong_type_names_the_field(self, tmp_path):
        data = {**BASE, "train": {"batch_size": "many"}}
        with pytest.raises(ConfigError) as exc_info:
            load_config(write_config(tmp_path, data))
        assert "train.batch_size" in str(exc_info.value)

    def test_missing_archive_path(self, tmp_path):
        data = {**BASE, "model_archive": str(tmp_path / "absent")}
        with pytest.raises(ConfigError):
            load_config(write_config(tmp_path, data))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{\"experiment\": ")
        with pytest.raises(ConfigError) as exc_info:
            load_config(path)
        assert "line 1" in str(exc_info.value)


class TestOverrides:
    def test_parse_json_value(self):
        assert parse_override("train.epochs=3") == (["train", "epochs"], 3)
        assert parse_override("experiment.seeds=[1, 2]") == (["experiment", "seeds"], [1, 2])

    def test_plain_string_value(self):
        assert parse_override("layout.mode=head") == (["layout", "mode"], "head")

    def test_malformed(self):
        with pytest.raises(ConfigError):
            parse_override("train.epochs")

    def test_creates_sections(self):
        assert apply_overrides({}, ["decode.beam_size=3"]) == {"decode": {"beam_size": 3}}

    def test_overrides_applied_on_load(self, tmp_path):
        config = load_config(write_config(tmp_path, BASE),
                             ["train.epochs=3", "layout.mode=head", "experiment.seeds=[7]"])
        assert config.train.epochs == 3
        assert config.layout.mode == "head"
        assert config.experiment.seeds == [7]

    def test_non_section(self):
        with pytest.raises(ConfigError):
            apply_overrides({"tokenizer": "x"}, ["tokenizer.name=y"])


class TestRunId:
    """The run id is a stable digest of the effective configuration."""

    def test_stable_and_short(self, tmp_path):
        first = load_config(write_config(tmp_path, BASE, "a.json"))
        second = load_config(write_config(tmp_path, BASE, "b.json"))
        assert first.run_id == second.run_id
        assert len(first.run_id) == 12
        int(first.run_id, 16)

    def test_changes_with_config(self, tmp_path):
        path = write_config(tmp_path, BASE)
        assert load_config(path).run_id != load_config(path, ["train.epochs=2"]).run_id

    def test_output_dir_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("PCODE_OUTPUT_DIR", str(tmp_path / "out"))
        config = load_config(write_config(tmp_path, BASE))
        assert config.run_dir("train") == tmp_path / "out" / "train" / config.run_id

    def test_echo(self, tmp_path):
        config = load_config(write_config(tmp_path, BASE))
        path = config.echo(tmp_path / "run")
        assert json.loads(path.read_text())["experiment"]["target_lang"] == "toyb"
