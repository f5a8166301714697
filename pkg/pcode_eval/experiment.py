"""
Experiment orchestration: zero-shot transfer, cross-language few-shot continuation
and monolingual few-shot, each over several seeds.
"""
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Set, Tuple

import jsonlines
import torch
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator

from pcode_backend.archive import VOCAB_FILE, load_pretrained_archive, read_manifest
from pcode_backend.config import ModelConfig
from pcode_backend.model import CodeEncoder
from pcode_backend.store import ParameterStore
from pcode_backend.tokenizer import Tokenizer, get_tokenizer
from pcode_backend.vocab import Vocabulary
from pcode_config.errors import ConfigError, DataError
from pcode_data.schema import CLASSIFICATION_TASKS, DatasetSplit, RawRecord, TaskName, records_sha256
from pcode_eval.metrics import accuracy, bleu, exact_match, mean_rouge_l
from pcode_eval.report import EvalReport, SeedResult
from pcode_prompt.bank import PromptBank
from pcode_prompt.layout import PromptMode, build_layout
from pcode_tasks.decoder import DecodeStrategy, DecoderHeader
from pcode_tasks.model import PromptedModel
from pcode_tasks.verbalizer import Verbalizer
from pcode_train.batching import (
    PreparedExample,
    build_vocabulary,
    prepare_classification,
    prepare_generative,
    record_key,
)
from pcode_train.config import PretrainConfig, TrainConfig
from pcode_train.logger import RunLogger
from pcode_train.pretrain import continual_mlm_pretrain
from pcode_train.trainer import Checkpoint, Trainer

ExperimentMode = Literal["zero_shot", "few_shot", "monolingual"]
DEFAULT_SEEDS = [13, 42, 87]


class LayoutConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: PromptMode = "uniform"
    m: int = Field(default=10, ge=0, le=64)


class DecodeConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    strategy: DecodeStrategy = "greedy"
    beam_size: int = Field(default=5, ge=1)
    max_len: int = Field(default=64, ge=1)


class ExperimentSpec(BaseModel):
    """
    What to train on and what to evaluate.

    ``source_train_size`` and ``test_size`` take the first records of the
    (already shuffled) prepared splits; unset means all of them.
    """

    model_config = ConfigDict(extra="forbid")

    mode: ExperimentMode = "zero_shot"
    task: TaskName = "cd"
    source_lang: str
    target_lang: str
    source_train_size: Optional[int] = Field(default=None, ge=1)
    few_shot_k: int = Field(default=0, ge=0)
    test_size: Optional[int] = Field(default=None, ge=1)
    layout: Optional[LayoutConfig] = None
    seeds: List[int] = Field(default_factory=lambda: list(DEFAULT_SEEDS), min_length=1)
    metrics: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_mode(self) -> "ExperimentSpec":
        self.source_lang = self.source_lang.lower()
        self.target_lang = self.target_lang.lower()
        if self.mode == "zero_shot" and self.few_shot_k != 0:
            raise ValueError("zero_shot experiments must have few_shot_k = 0")
        if self.mode == "monolingual" and self.source_lang != self.target_lang:
            raise ValueError("monolingual experiments need source_lang == target_lang")
        if not self.metrics:
            self.metrics = (["accuracy"] if self.task in CLASSIFICATION_TASKS
                            else ["bleu", "rouge_l", "exact_match"])
        return self

    @property
    def is_classification(self) -> bool:
        return self.task in CLASSIFICATION_TASKS


@dataclass
class ExperimentSetup:
    """Everything besides the ExperimentSpec that a run needs"""

    data_root: Path
    model: ModelConfig = field(default_factory=ModelConfig)
    model_archive: Optional[Path] = None
    vocab_path: Optional[Path] = None
    tokenizer: str = "whitespace_punct"
    layout: LayoutConfig = field(default_factory=LayoutConfig)
    verbalizer: Dict[str, str] = field(default_factory=lambda: {"1": "yes", "0": "no"})
    train: TrainConfig = field(default_factory=TrainConfig)
    pretrain: PretrainConfig = field(default_factory=PretrainConfig)
    decode: DecodeConfig = field(default_factory=DecodeConfig)
    run_dir: Optional[Path] = None
    run_id: str = "local"


@dataclass
class Backbone:
    config: ModelConfig
    vocab: Vocabulary
    store: ParameterStore
    provenance: Dict[str, Any] = field(default_factory=dict)
    pretrain_record_ids: Set[str] = field(default_factory=set)


def store_sha256(store: ParameterStore) -> str:
    digest = hashlib.sha256()
    for name, array in store.items():
        digest.update(name.encode("utf-8"))
        digest.update(array.tobytes())
    return digest.hexdigest()


def load_task_split(data_root: Path, task: str, lang: str) -> DatasetSplit:
    split_dir = Path(data_root) / task / lang
    if not split_dir.is_dir():
        raise DataError(f"No prepared {task} data for {lang} at {split_dir}")
    return DatasetSplit.read(split_dir)


def _load_corpus(path: Path) -> List[Tuple[str, str]]:
    if not Path(path).exists():
        raise DataError(f"Pre-training corpus not found: {path}")
    with jsonlines.open(path) as reader:
        return [(item["code"], item["lang"]) for item in reader]


def _unlabeled_code(records: Sequence[RawRecord]) -> List[Tuple[str, str]]:
    return [(getattr(r, name), r.lang) for r in records for name in r.code_fields()]


def prepare_backbone(
    setup: ExperimentSetup,
    records: Sequence[RawRecord],
    languages: Sequence[str],
    run_logger: Optional[RunLogger] = None,
) -> Backbone:
    """
    Encoder weights shared by every seed: loaded from an archive or freshly
    initialized, then optionally continued with language-marked MLM.

    A built vocabulary covers the text of ``records``; no labels are read.
    Without a corpus file, continual MLM reads the code of ``records`` and
    their keys are returned so runs can audit them.
    """
    tokenizer = get_tokenizer(setup.tokenizer)
    if setup.model_archive is not None:
        config, vocab, encoder = load_pretrained_archive(setup.model_archive)
        source = f"archive:{setup.model_archive}"
    else:
        if setup.vocab_path is not None:
            vocab = Vocabulary.load(setup.vocab_path)
        else:
            corpus_texts = ([code for code, _ in _load_corpus(Path(setup.pretrain.corpus))]
                            if setup.pretrain.enabled and setup.pretrain.corpus else [])
            vocab = build_vocabulary(records, tokenizer, languages, setup.model.vocab_size,
                                     corpus_texts)
        config = setup.model.model_copy(update={"vocab_size": vocab.size})
        torch.manual_seed(setup.train.seed)
        encoder = CodeEncoder(config)
        source = "random_init"

    provenance: Dict[str, Any] = {"backbone": source, "vocab_sha256": vocab.sha256(),
                                  "vocab_size": vocab.size}
    pretrain_record_ids: Set[str] = set()
    if setup.pretrain.enabled:
        if setup.pretrain.corpus:
            corpus = _load_corpus(Path(setup.pretrain.corpus))
        else:
            corpus = _unlabeled_code(records)
            pretrain_record_ids = {record_key(r) for r in records}
        result = continual_mlm_pretrain(encoder, corpus, vocab, tokenizer, setup.pretrain, run_logger)
        provenance["continual_mlm"] = {
            "items": len(corpus),
            "loss_before": result.loss_before,
            "loss_after": result.loss_after,
            "optimizer_steps": result.optimizer_steps,
        }
    store = ParameterStore.from_modules(encoder=encoder)
    provenance["backbone_sha256"] = store_sha256(store)
    return Backbone(config=config, vocab=vocab, store=store, provenance=provenance,
                    pretrain_record_ids=pretrain_record_ids)


def build_model(backbone: Backbone, m: int, seed: int, generative: bool,
                train: TrainConfig) -> PromptedModel:
    torch.manual_seed(seed)
    encoder = CodeEncoder(backbone.config)
    backbone.store.load_into(encoder, "encoder.")
    prompt = PromptBank(m, backbone.config.hidden_dim, init_std=backbone.config.init_std, seed=seed)
    decoder = None
    if generative:
        decoder = DecoderHeader(
            backbone.vocab.size,
            backbone.config.hidden_dim,
            num_layers=train.decoder_layers,
            num_heads=backbone.config.num_heads,
            dropout=backbone.config.dropout,
            max_target_len=train.max_target_len,
            init_std=backbone.config.init_std,
            layer_norm_eps=backbone.config.layer_norm_eps,
        )
    return PromptedModel(encoder, prompt, decoder)


class ExperimentRunner:
    """Runs one ExperimentSpec against prepared data under ``setup.data_root``"""

    def __init__(self, spec: ExperimentSpec, setup: ExperimentSetup):
        self.spec = spec
        self.setup = setup
        self.layout_config = spec.layout or setup.layout
        self.tokenizer: Tokenizer = get_tokenizer(setup.tokenizer)
        self.run_logger = RunLogger(setup.run_dir, setup.run_id) if setup.run_dir else None

        self.target = load_task_split(setup.data_root, spec.task, spec.target_lang)
        if not self.target.test:
            raise DataError(f"Target language {spec.target_lang} has no test set for {spec.task}")
        self.source = (self.target if spec.source_lang == spec.target_lang
                       else load_task_split(setup.data_root, spec.task, spec.source_lang))
        self.test_records = self.target.test[: spec.test_size]

    # data selection

    def source_train(self) -> List[RawRecord]:
        if self.spec.mode == "monolingual":
            size = self.spec.few_shot_k or self.spec.source_train_size
            return self.target.train[:size]
        return self.source.train[: self.spec.source_train_size]

    def source_valid(self) -> List[RawRecord]:
        return self.target.valid if self.spec.mode == "monolingual" else self.source.valid

    def few_shot_records(self) -> List[RawRecord]:
        if self.spec.mode != "few_shot" or self.spec.few_shot_k == 0:
            return []
        if len(self.target.train) < self.spec.few_shot_k:
            raise DataError(
                f"few_shot_k={self.spec.few_shot_k} exceeds {len(self.target.train)} target "
                f"training records"
            )
        return self.target.train[: self.spec.few_shot_k]

    def backbone_records(self) -> List[RawRecord]:
        """Records whose text may shape the vocabulary and continual MLM; never target test"""
        return self.source_train() + self.source_valid() + self.few_shot_records()

    def languages(self) -> List[str]:
        return sorted({self.spec.source_lang, self.spec.target_lang})

    def _max_seq_len(self, backbone: Backbone) -> int:
        return min(self.setup.train.max_seq_len, backbone.config.max_seq_len)

    def prepare(self, records: Sequence[RawRecord], backbone: Backbone,
                verbalizer: Optional[Verbalizer]) -> List[PreparedExample]:
        if self.spec.is_classification:
            layout = build_layout(self.layout_config.mode, self.layout_config.m)
            return prepare_classification(records, layout, backbone.vocab, self.tokenizer,
                                          verbalizer, self._max_seq_len(backbone))
        return prepare_generative(records, self.layout_config.m, backbone.vocab, self.tokenizer,
                                  self._max_seq_len(backbone), self.setup.train.max_target_len)

    # evaluation

    def score(self, trainer: Trainer, examples: Sequence[PreparedExample]) -> Dict[str, float]:
        if self.spec.is_classification:
            predictions = trainer.predict(examples)
            return {"accuracy": accuracy(predictions, [ex.label for ex in examples])}
        decode = self.setup.decode
        outputs = trainer.generate(examples, decode.max_len, decode.strategy, decode.beam_size)
        vocab = trainer.vocab
        candidates = [[vocab.token_of(i) for i in ids] for ids in outputs]
        references = [[vocab.token_of(i) for i in ex.target] for ex in examples]
        scores = {
            "bleu": bleu(candidates, references),
            "rouge_l": mean_rouge_l(candidates, references),
            "exact_match": exact_match(candidates, references),
        }
        return {name: scores[name] for name in self.spec.metrics if name in scores}

    def verbalizer_for(self, vocab: Vocabulary) -> Optional[Verbalizer]:
        if not self.spec.is_classification:
            return None
        verbalizer = Verbalizer.from_words(self.setup.verbalizer, vocab, self.tokenizer)
        verbalizer.check_range(vocab.size)
        return verbalizer

    # orchestration

    def check_hygiene(self, seen: Set[str]) -> None:
        """No target test record, and in zero-shot no target record at all, was trained on"""
        leaked = seen & {record_key(r) for r in self.test_records}
        if self.spec.mode == "zero_shot":
            leaked |= seen & {record_key(r) for r in self.target.all_records()}
        if leaked:
            raise DataError(
                f"Data hygiene violated: {len(leaked)} target record(s) entered an optimizer "
                f"step, e.g. {sorted(leaked)[:5]}"
            )

    def run_seed(self, seed: int, backbone: Backbone, test_examples: Sequence[PreparedExample],
                 verbalizer: Optional[Verbalizer]) -> SeedResult:
        train_config = self.setup.train.model_copy(update={"seed": seed})
        model = build_model(backbone, self.layout_config.m, seed,
                            not self.spec.is_classification, train_config)
        trainer = Trainer(model, backbone.vocab, train_config, verbalizer, self.run_logger)

        train_examples = self.prepare(self.source_train(), backbone, verbalizer)
        valid_examples = self.prepare(self.source_valid(), backbone, verbalizer)
        checkpoint = trainer.fit(train_examples, valid_examples)
        seen = set(checkpoint.history.seen_record_ids) | backbone.pretrain_record_ids
        steps = checkpoint.history.optimizer_steps

        few_shot = self.few_shot_records()
        if few_shot:
            logger.info(f"[seed {seed}] continuing on {len(few_shot)} {self.spec.target_lang} examples")
            checkpoint = trainer.fit(self.prepare(few_shot, backbone, verbalizer))
            seen |= checkpoint.history.seen_record_ids
            steps += checkpoint.history.optimizer_steps

        self.check_hygiene(seen)
        metrics = self.score(trainer, test_examples)
        if self.run_logger is not None:
            self.run_logger.log("test", seed=seed, step=steps, **metrics)
            checkpoint.save(self.setup.run_dir / f"seed_{seed}" / "checkpoint", backbone.config,
                            backbone.vocab, seed=seed, spec=self.spec.model_dump(),
                            layout=self.layout_config.model_dump())
            self.run_logger.save_json(f"seed_{seed}/summary.json", {"seed": seed, "metrics": metrics,
                                                                  "optimizer_steps": steps,
                                                                  "best_epoch": checkpoint.epoch})
        return SeedResult(
            seed=seed,
            metrics=metrics,
            optimizer_steps=steps,
            best_epoch=checkpoint.epoch,
            checkpoint_sha256=store_sha256(checkpoint.params),
            seen_record_ids=len(seen),
        )

    def provenance(self, backbone: Backbone) -> Dict[str, Any]:
        return {
            **backbone.provenance,
            "run_id": self.setup.run_id,
            "layout": self.layout_config.model_dump(),
            "datasets": {
                "source_train": records_sha256(self.source_train()),
                "source_valid": records_sha256(self.source_valid()),
                "few_shot": records_sha256(self.few_shot_records()),
                "target_test": records_sha256(self.test_records),
            },
            "sizes": {
                "source_train": len(self.source_train()),
                "few_shot": len(self.few_shot_records()),
                "test": len(self.test_records),
            },
            "seeds": list(self.spec.seeds),
            "train": self.setup.train.model_dump(),
        }

    def run(self) -> EvalReport:
        spec = self.spec
        logger.info(f"Running {spec.mode} {spec.task}: {spec.source_lang} -> {spec.target_lang}, "
                    f"seeds {spec.seeds}")
        backbone = prepare_backbone(self.setup, self.backbone_records(), self.languages(),
                                    self.run_logger)
        verbalizer = self.verbalizer_for(backbone.vocab)
        test_examples = self.prepare(self.test_records, backbone, verbalizer)
        per_seed = [self.run_seed(seed, backbone, test_examples, verbalizer) for seed in spec.seeds]
        report = EvalReport.from_seeds(spec.model_dump(), per_seed, self.provenance(backbone))
        logger.info(f"{spec.mode} {spec.task} {spec.source_lang}->{spec.target_lang}: "
                    f"{report.summary_line()}")
        if self.run_logger is not None:
            report.save(self.setup.run_dir / "report.json")
            self.run_logger.save_summary({"mean": report.mean, "std": report.std,
                                          "seeds": list(spec.seeds)})
        return report


def run_experiment(spec: ExperimentSpec, setup: ExperimentSetup) -> EvalReport:
    """Train per ``spec.mode`` for every seed, test on the target language, aggregate"""
    return ExperimentRunner(spec, setup).run()


def evaluate_checkpoint(spec: ExperimentSpec, setup: ExperimentSetup,
                        checkpoint_dir: Path) -> EvalReport:
    """
    Score a saved checkpoint on the target test set without any optimizer step.

    The vocabulary, model config and prompt count come from the checkpoint.
    """
    checkpoint_dir = Path(checkpoint_dir)
    manifest = read_manifest(checkpoint_dir)
    if not manifest.get("model_config"):
        raise ConfigError(f"Checkpoint {checkpoint_dir} has no model_config")
    vocab = Vocabulary.load(checkpoint_dir / VOCAB_FILE)
    config = ModelConfig(**manifest["model_config"])
    checkpoint = Checkpoint.load(checkpoint_dir, config, vocab.sha256())
    meta = manifest.get("metadata", {})
    layout = LayoutConfig(**meta["layout"]) if meta.get("layout") else (spec.layout or setup.layout)
    if checkpoint.prompt_bank_shape and checkpoint.prompt_bank_shape[0] != layout.m:
        layout = layout.model_copy(update={"m": checkpoint.prompt_bank_shape[0]})
    runner = ExperimentRunner(spec.model_copy(update={"layout": layout}), setup)

    backbone = Backbone(config=config, vocab=vocab, store=checkpoint.params,
                        provenance={"checkpoint": str(checkpoint_dir),
                                    "vocab_sha256": vocab.sha256()})
    seed = int(meta.get("seed", setup.train.seed))
    model = build_model(backbone, layout.m, seed, not spec.is_classification, setup.train)
    checkpoint.restore(model.components)
    verbalizer = runner.verbalizer_for(vocab)
    trainer = Trainer(model, vocab, setup.train, verbalizer, runner.run_logger)
    test_examples = runner.prepare(runner.test_records, backbone, verbalizer)
    metrics = runner.score(trainer, test_examples)
    if runner.run_logger is not None:
        runner.run_logger.log("eval", seed=seed, step=0, **metrics)
    result = SeedResult(seed=seed, metrics=metrics, optimizer_steps=0, best_epoch=checkpoint.epoch,
                        checkpoint_sha256=store_sha256(checkpoint.params))
    provenance = {
        **backbone.provenance,
        "datasets": {"target_test": records_sha256(runner.test_records)},
        "sizes": {"test": len(runner.test_records)},
    }
    return EvalReport.from_seeds(runner.spec.model_dump(), [result], provenance)
