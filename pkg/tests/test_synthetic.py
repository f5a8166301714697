"""
Acceptance experiments on the two synthetic dialects.

These train real models end to end and take minutes on a CPU; run them with
``pytest -m slow``.
"""

import jsonlines
import numpy as np
import pytest
import torch

from pcode_backend.config import ModelConfig
from pcode_backend.model import CodeEncoder
from pcode_backend.tokenizer import WhitespacePunctTokenizer
from pcode_backend.vocab import Vocabulary
from pcode_data.preprocess import PreprocessConfig, prepare_dataset
from pcode_data.schema import RawRecord, save_records
from pcode_data.synthetic import DIALECT_GRAMMARS, clone_records, generation_records, unlabeled_corpus
from pcode_eval.ablation import ablate, summarize
from pcode_eval.experiment import ExperimentSetup, ExperimentSpec, LayoutConfig, run_experiment
from pcode_prompt.bank import PromptBank
from pcode_tasks.decoder import DecoderHeader
from pcode_tasks.model import PromptedModel
from pcode_train.baselines import BaselineTrainer, finetune_baseline, prepare_pairs
from pcode_train.batching import build_vocabulary, prepare_generative
from pcode_train.config import PretrainConfig, TrainConfig
from pcode_train.trainer import Trainer

pytestmark = pytest.mark.slow

SEEDS = [13, 42, 87]


@pytest.fixture(scope="module")
def dialect_root(tmp_path_factory):
    """Prepared CD splits for both dialects plus an unlabeled corpus of each"""
    raw = tmp_path_factory.mktemp("raw")
    root = tmp_path_factory.mktemp("prepared")
    preprocess = PreprocessConfig(min_tokens=5, max_tokens=250, seed=7,
                                  comment_grammars=dict(DIALECT_GRAMMARS))
    for offset, dialect in enumerate(("toya", "toyb")):
        save_records(clone_records(dialect, 600, seed=20 + offset, filler=(0, 2),
                                   comment_rate=0.2, positives_only=True),
                     raw / f"cd_{dialect}.jsonl")
        prepare_dataset(raw / f"cd_{dialect}.jsonl", root / "cd" / dialect, "cd", preprocess)
    corpus = raw / "corpus.jsonl"
    with jsonlines.open(corpus, mode="w") as writer:
        writer.write_all({"code": code, "lang": lang}
                         for code, lang in unlabeled_corpus(["toya", "toyb"], 300, seed=5))
    return root, corpus


def transfer_setup(dialect_root, run_dir) -> ExperimentSetup:
    root, corpus = dialect_root
    return ExperimentSetup(
        data_root=root,
        model=ModelConfig(hidden_dim=64, num_layers=2, num_heads=2, max_seq_len=256, dropout=0.1),
        train=TrainConfig(base_lr=1e-3, batch_size=16, epochs=8, max_seq_len=256),
        pretrain=PretrainConfig(enabled=True, corpus=str(corpus), epochs=3, batch_size=16,
                                base_lr=5e-4, max_seq_len=256),
        run_dir=run_dir,
        run_id="acceptance",
    )


def transfer_spec(**overrides) -> ExperimentSpec:
    settings = dict(mode="zero_shot", task="cd", source_lang="toya", target_lang="toyb",
                    test_size=120, seeds=SEEDS, layout=LayoutConfig(mode="uniform", m=10))
    settings.update(overrides)
    return ExperimentSpec(**settings)


class TestCrossDialectTransfer:
    """Prompt tuning on one dialect transfers to the other without target examples."""

    def test_zero_shot_beats_majority(self, dialect_root, tmp_path):
        report = run_experiment(transfer_spec(seeds=[13]), transfer_setup(dialect_root, tmp_path))
        assert report.provenance["continual_mlm"]["loss_after"] < \
            report.provenance["continual_mlm"]["loss_before"]
        assert report.mean["accuracy"] > 0.60

    def test_ten_prompts_beat_extremes(self, dialect_root, tmp_path):
        table = ablate(transfer_spec(), transfer_setup(dialect_root, tmp_path), "prompt_count",
                       [1, 10, 20])
        means = summarize(table, "accuracy").set_index("value")["mean"]
        assert means[10] >= means[1]
        assert means[10] >= means[20]

    def test_uniform_positions_best(self, dialect_root, tmp_path):
        table = ablate(transfer_spec(), transfer_setup(dialect_root, tmp_path), "prompt_position")
        summary = summarize(table, "accuracy").set_index("value")
        uniform = summary.loc["uniform"]
        for mode in ("head", "middle", "tail"):
            assert uniform["mean"] + uniform["std"] >= summary.loc[mode, "mean"]


class TestGenerativeWiring:
    """The encoder and a 6-layer decoder header can memorize a small CG set."""

    @pytest.fixture(scope="class")
    def trained(self):
        records = generation_records("toya", 25, seed=0) + generation_records("toyb", 25, seed=0)
        tokenizer = WhitespacePunctTokenizer()
        vocab = build_vocabulary(records, tokenizer, ["toya", "toyb"])
        config = ModelConfig(hidden_dim=64, num_layers=2, num_heads=4, max_seq_len=128,
                             vocab_size=vocab.size, dropout=0.0)
        torch.manual_seed(0)
        decoder = DecoderHeader(vocab.size, 64, num_layers=6, num_heads=4, dropout=0.0,
                                max_target_len=64)
        model = PromptedModel(CodeEncoder(config), PromptBank(4, 64, seed=0), decoder)
        examples = prepare_generative(records, 4, vocab, tokenizer, max_seq_len=128)
        trainer = Trainer(model, vocab, TrainConfig(base_lr=2e-3, batch_size=10, epochs=150,
                                                    seed=0, grad_clip=1.0))
        trainer.fit(examples)
        return trainer, records, examples, vocab, tokenizer

    def test_overfit_reproduces_targets(self, trained):
        trainer, _, examples, _, _ = trained
        assert trainer.evaluate(examples)["valid_loss"] < 0.05
        outputs = trainer.generate(examples, max_len=64)
        exact = sum(output == example.target for output, example in zip(outputs, examples))
        assert exact >= 48

    def test_language_tag_is_live(self, trained):
        trainer, records, examples, vocab, tokenizer = trained
        swapped = prepare_generative(records, 4, vocab, tokenizer, max_seq_len=128,
                                     language="toya")
        toyb = [i for i, r in enumerate(records) if r.lang == "toyb"]
        original = trainer.generate([examples[i] for i in toyb], max_len=64)
        retagged = trainer.generate([swapped[i] for i in toyb], max_len=64)
        assert sum(a != b for a, b in zip(original, retagged)) >= 1


class TestAveragedEmbeddingBaseline:
    def test_separable_pairs_are_learned(self):
        """A marker token decides the label, so averaged embeddings separate the classes."""
        rng = np.random.default_rng(0)
        filler = [f"w{i}" for i in range(20)]
        records = []
        for k in range(40):
            marker = "alpha" if k % 2 else "omega"
            body = " ".join(rng.choice(filler, size=6))
            records.append(RawRecord(task="cd", lang="toya", id=str(k), x1=f"{marker} {marker} {body}",
                                     x2=f"{marker} {body}", label=k % 2))
        tokenizer = WhitespacePunctTokenizer()
        vocab = Vocabulary.build([tokenizer.split(r.x1 + " " + r.x2) for r in records],
                                 languages=["toya"])
        torch.manual_seed(0)
        encoder = CodeEncoder(ModelConfig(hidden_dim=32, num_layers=1, num_heads=2,
                                          max_seq_len=64, vocab_size=vocab.size))
        pairs = prepare_pairs(records, vocab, tokenizer, max_seq_len=64)
        config = TrainConfig(base_lr=1e-2, batch_size=8, epochs=20, seed=0)
        _, model = finetune_baseline(encoder, pairs, (), vocab, "avg_embed", config)
        accuracy = BaselineTrainer(model, vocab, config).evaluate(pairs)["accuracy"]
        assert accuracy > 0.95

