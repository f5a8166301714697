"""
RunConfig: the single declarative file behind every command.
"""
import hashlib
import json
import os
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from pcode_backend.config import ModelConfig
from pcode_config.errors import ConfigError
from pcode_data.preprocess import PreprocessConfig
from pcode_data.schema import CLASSIFICATION_TASKS
from pcode_eval.experiment import DecodeConfig, ExperimentSetup, ExperimentSpec, LayoutConfig
from pcode_train.config import PretrainConfig, TrainConfig

DEFAULT_OUTPUT_DIR = "runs"
CONFIG_ECHO = "config.json"


class DataConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    root: str = Field(default="data/prepared", description="<root>/<task>/<lang>/{train,valid,test}.jsonl")
    preprocess: PreprocessConfig = Field(default_factory=PreprocessConfig)


class RunConfig(BaseModel):
    """
    Everything one run needs. Unknown keys are rejected at every level.

    ``verbalizer`` is required for pair-classification experiments.
    """

    model_config = ConfigDict(extra="forbid")

    model: Optional[ModelConfig] = None
    model_archive: Optional[str] = None
    vocab_path: Optional[str] = None
    tokenizer: str = "whitespace_punct"
    layout: LayoutConfig = Field(default_factory=LayoutConfig)
    verbalizer: Optional[Dict[str, str]] = None
    train: TrainConfig = Field(default_factory=TrainConfig)
    pretrain: PretrainConfig = Field(default_factory=PretrainConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    experiment: ExperimentSpec
    decode: DecodeConfig = Field(default_factory=DecodeConfig)
    output_dir: Optional[str] = None

    @model_validator(mode="after")
    def validate_run(self) -> "RunConfig":
        if self.model is not None and self.model_archive is not None:
            raise ValueError("Give either model or model_archive, not both")
        if self.experiment.task in CLASSIFICATION_TASKS and not self.verbalizer:
            raise ValueError(f"verbalizer map is required for task {self.experiment.task}")
        for name in ("model_archive", "vocab_path"):
            value = getattr(self, name)
            if value is not None and not Path(value).exists():
                raise ValueError(f"{name} path does not exist: {value}")
        if self.pretrain.enabled and self.pretrain.corpus and not Path(self.pretrain.corpus).exists():
            raise ValueError(f"pretrain.corpus path does not exist: {self.pretrain.corpus}")
        return self

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    @property
    def run_id(self) -> str:
        """First 12 hex chars of the SHA-256 of the effective config"""
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()[:12]

    def resolved_output_dir(self) -> Path:
        return Path(self.output_dir or os.getenv("PCODE_OUTPUT_DIR", DEFAULT_OUTPUT_DIR))

    def run_dir(self, command: str) -> Path:
        return self.resolved_output_dir() / command / self.run_id

    def to_setup(self, run_dir: Optional[Path] = None) -> ExperimentSetup:
        return ExperimentSetup(
            data_root=Path(self.data.root),
            model=self.model or ModelConfig(),
            model_archive=Path(self.model_archive) if self.model_archive else None,
            vocab_path=Path(self.vocab_path) if self.vocab_path else None,
            tokenizer=self.tokenizer,
            layout=self.layout,
            verbalizer=dict(self.verbalizer or {}),
            train=self.train,
            pretrain=self.pretrain,
            decode=self.decode,
            run_dir=run_dir,
            run_id=self.run_id,
        )

    def echo(self, run_dir: Path) -> Path:
        """Write the effective config into ``run_dir``"""
        run_dir.mkdir(parents=True, exist_ok=True)
        path = run_dir / CONFIG_ECHO
        path.write_text(json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
        return path


def describe_validation_error(error: ValidationError) -> str:
    """One ``field.path: message (got type)`` line per problem"""
    lines = []
    for item in error.errors():
        path = ".".join(str(part) for part in item.get("loc", ())) or "<root>"
        got = type(item.get("input")).__name__
        lines.append(f"{path}: {item.get('msg', 'invalid')} (got {got})")
    return "\n".join(lines)


def parse_override(text: str) -> Tuple[List[str], Any]:
    """``a.b.c=value``; the value is parsed as JSON when possible, else kept as a string"""
    if "=" not in text:
        raise ConfigError(f"Override {text!r} must look like dotted.key=value")
    key, raw = text.split("=", 1)
    keys = [part for part in key.strip().split(".") if part]
    if not keys:
        raise ConfigError(f"Override {text!r} has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return keys, value


def apply_overrides(data: Dict[str, Any], overrides: Iterable[str]) -> Dict[str, Any]:
    for text in overrides:
        keys, value = parse_override(text)
        node = data
        for key in keys[:-1]:
            child = node.get(key)
            if child is None:
                child = node[key] = {}
            if not isinstance(child, dict):
                raise ConfigError(f"Override {text!r}: {key} is not a section")
            node = child
        node[keys[-1]] = value
    return data


def build_config(data: Dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration:\n{describe_validation_error(e)}") from e


def load_config(path: Path, overrides: Iterable[str] = ()) -> RunConfig:
    """Read a JSON RunConfig, apply ``--set`` overrides, validate"""
    load_dotenv()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: line {e.lineno}: {e.msg}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return build_config(apply_overrides(data, overrides))


def default_log_level() -> str:
    load_dotenv()
    return os.getenv("PCODE_LOG_LEVEL", "INFO")
