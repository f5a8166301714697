"""
Corpus preprocessing: comment stripping, length window, 1:1 balancing, splits.
"""
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, field_validator

from pcode_backend.tokenizer import Tokenizer, WhitespacePunctTokenizer, get_tokenizer
from pcode_backend.vocab import Vocabulary
from pcode_config.errors import ConfigError, DataError
from pcode_data.comments import strip_comments
from pcode_data.records import load_records
from pcode_data.schema import DatasetSplit, FilterStats, Provenance, RawRecord, file_sha256


class PreprocessConfig(BaseModel):
    """Knobs of ``prepare-data``"""

    model_config = ConfigDict(extra="forbid")

    min_tokens: int = Field(default=125, ge=0)
    max_tokens: int = Field(default=250, ge=1)
    nl_max_tokens: int = Field(default=64, ge=1)
    ratios: Tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 42
    strip_comments: bool = True
    balance: bool = True
    max_attempts: int = Field(default=100, ge=1)
    tokenizer: str = "whitespace_punct"
    vocab_path: Optional[str] = None
    comment_grammars: Dict[str, str] = Field(
        default_factory=dict, description="Extra language -> registered grammar name"
    )

    @field_validator("ratios")
    @classmethod
    def validate_ratios(cls, v: Tuple[float, float, float]) -> Tuple[float, float, float]:
        if any(r < 0 for r in v) or abs(sum(v) - 1.0) > 1e-9:
            raise ValueError(f"Split ratios must be non-negative and sum to 1, got {v}")
        return v


def strip_record_comments(record: RawRecord, extra: Optional[Dict[str, str]] = None) -> RawRecord:
    updates = {
        name: strip_comments(getattr(record, name), record.lang, extra)
        for name in record.code_fields()
    }
    return record.model_copy(update=updates)


def length_filter(
    records: Sequence[RawRecord],
    min_tokens: int = 125,
    max_tokens: int = 250,
    nl_max_tokens: int = 64,
    tokenizer: Optional[Tokenizer] = None,
    vocab: Optional[Vocabulary] = None,
) -> Tuple[List[RawRecord], FilterStats]:
    """
    Keep records whose every code field has min..max tokens (inclusive) and whose
    natural-language fields have at most ``nl_max_tokens``.

    With a vocabulary, tokens are the ids the tokenizer produces, so subword
    pieces count individually; without one, words from ``tokenizer.split`` count.
    """
    tokenizer = tokenizer or WhitespacePunctTokenizer()
    if vocab is None and not isinstance(tokenizer, WhitespacePunctTokenizer):
        raise ConfigError(f"Counting {tokenizer.name} pieces needs a vocabulary (vocab_path)")

    def count(text: str) -> int:
        if vocab is None:
            return len(tokenizer.split(text))
        return len(tokenizer.tokenize(text, vocab))

    stats = FilterStats(total=len(records))
    kept = []
    for record in records:
        code_lengths = [count(getattr(record, f)) for f in record.code_fields()]
        nl_lengths = [count(getattr(record, f)) for f in record.nl_fields()]
        if any(n < min_tokens for n in code_lengths):
            stats.dropped_short += 1
        elif any(n > max_tokens for n in code_lengths):
            stats.dropped_long += 1
        elif any(n > nl_max_tokens for n in nl_lengths):
            stats.dropped_nl_long += 1
        else:
            kept.append(record)
    stats.kept = len(kept)
    logger.info(
        f"Length filter kept {stats.kept}/{stats.total} "
        f"(short={stats.dropped_short}, long={stats.dropped_long}, nl_long={stats.dropped_nl_long})"
    )
    return kept, stats


def balance_with_negatives(
    positives: Sequence[RawRecord], seed: int, max_attempts: int = 100
) -> List[RawRecord]:
    """
    Add one negative per positive pair by pairing x1 of one positive with x2 of
    another. A draw that reproduces any positive pairing (or an earlier negative)
    is rejected and redrawn, up to ``max_attempts`` times per negative.

    Returns positives followed by negatives.
    """
    positives = list(positives)
    if len(positives) < 2:
        raise DataError(f"Need at least 2 positive pairs to sample negatives, got {len(positives)}")
    if any(not r.is_classification or r.label != 1 for r in positives):
        raise DataError("balance_with_negatives expects positive classification pairs only")

    rng = np.random.default_rng(seed)
    taken: Set[Tuple[str, str]] = {r.pair_key() for r in positives}
    used_ids = {r.id for r in positives}
    negatives = []
    for i, anchor in enumerate(positives):
        for _ in range(max_attempts):
            j = int(rng.integers(len(positives) - 1))
            j = j + 1 if j >= i else j
            key = (anchor.x1 or "", positives[j].x2 or "")
            if key not in taken:
                break
        else:
            raise DataError(
                f"Could not draw a non-colliding negative for {anchor.id} in {max_attempts} attempts"
            )
        taken.add(key)
        neg_id = f"{anchor.id}-neg"
        suffix = 1
        while neg_id in used_ids:
            neg_id = f"{anchor.id}-neg{suffix}"
            suffix += 1
        used_ids.add(neg_id)
        negatives.append(anchor.model_copy(update={"id": neg_id, "x2": positives[j].x2, "label": 0}))
    return positives + negatives


def split_counts(n: int, ratios: Sequence[float]) -> Tuple[int, int, int]:
    n_train = int(round(n * ratios[0]))
    n_valid = min(int(round(n * ratios[1])), n - n_train)
    return n_train, n_valid, n - n_train - n_valid


def split_records(
    records: Sequence[RawRecord], ratios: Sequence[float] = (0.8, 0.1, 0.1), seed: int = 42
) -> DatasetSplit:
    """Shuffle with ``seed`` and cut into train / valid / test by ``ratios``"""
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"Split ratios must be three non-negative numbers summing to 1, got {ratios}")
    order = np.random.default_rng(seed).permutation(len(records))
    shuffled = [records[int(i)] for i in order]
    n_train, n_valid, _ = split_counts(len(shuffled), ratios)
    return DatasetSplit(
        train=shuffled[:n_train],
        valid=shuffled[n_train:n_train + n_valid],
        test=shuffled[n_train + n_valid:],
    )


def label_counts(records: Sequence[RawRecord]) -> Dict[str, int]:
    counts = {"0": 0, "1": 0}
    for r in records:
        if r.label is not None:
            counts[str(r.label)] += 1
    return counts


def prepare_dataset(
    in_path: Path,
    out_dir: Path,
    task: str,
    config: Optional[PreprocessConfig] = None,
    tokenizer: Optional[Tokenizer] = None,
    vocab: Optional[Vocabulary] = None,
) -> DatasetSplit:
    """
    Full preprocessing: load, strip comments, length-filter, balance 1:1
    (classification), split, and write the split files plus a provenance sidecar.

    Filtering runs before balancing, so negatives are built from in-window snippets.
    """
    config = config or PreprocessConfig()
    tokenizer = tokenizer or get_tokenizer(config.tokenizer)
    if vocab is None and config.vocab_path:
        if not Path(config.vocab_path).exists():
            raise ConfigError(f"Vocabulary not found: {config.vocab_path}")
        vocab = Vocabulary.load(Path(config.vocab_path))
    records = load_records(in_path)
    selected = [r for r in records if r.task == task]
    if len(selected) != len(records):
        logger.warning(f"Ignoring {len(records) - len(selected)} records of other tasks")
    if not selected:
        raise DataError(f"No {task} records in {in_path}")

    if config.strip_comments:
        selected = [strip_record_comments(r, config.comment_grammars) for r in selected]
    kept, stats = length_filter(
        selected, config.min_tokens, config.max_tokens, config.nl_max_tokens, tokenizer, vocab
    )

    if kept and kept[0].is_classification and config.balance:
        positives = [r for r in kept if r.label == 1]
        dropped = len(kept) - len(positives)
        if dropped:
            logger.info(f"Discarding {dropped} pre-labelled negatives; negatives are resampled 1:1")
        kept = balance_with_negatives(positives, config.seed, config.max_attempts)

    split = split_records(kept, config.ratios, config.seed)
    split.provenance = Provenance(
        seed=config.seed,
        task=task,
        source_files={Path(in_path).name: file_sha256(in_path)},
        counts={name: len(split.part(name)) for name in ("train", "valid", "test")},
        label_counts={name: label_counts(split.part(name)) for name in ("train", "valid", "test")},
        filter_stats=stats,
        config=config.model_dump(mode="json"),
    )
    split.write(Path(out_dir))
    logger.info(f"Prepared {task} dataset in {out_dir}: {split.provenance.counts}")
    return split
