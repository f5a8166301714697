"""
Turn validated records into model inputs and seeded mini-batches.
"""
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Optional, Sequence

import numpy as np
import torch

from pcode_backend.tokenizer import Tokenizer
from pcode_backend.vocab import Vocabulary
from pcode_config.errors import ConfigError, DataError
from pcode_data.schema import RawRecord
from pcode_prompt.inject import InputBatch, MaskedInput, pad_batch
from pcode_prompt.layout import TemplateLayout
from pcode_tasks.cast import (
    ClassificationExample,
    TaskKind,
    build_generative_input,
    cast_classification,
)
from pcode_tasks.verbalizer import Verbalizer


@dataclass
class PreparedExample:
    """One record after casting: the model input plus whatever the loss needs"""

    record_id: str
    masked: MaskedInput
    target_id: Optional[int] = None
    label: Optional[int] = None
    target: Optional[List[int]] = None


@dataclass
class Batch:
    inputs: InputBatch
    record_ids: List[str]
    target_ids: Optional[torch.Tensor] = None
    labels: Optional[torch.Tensor] = None
    decoder_in: Optional[torch.Tensor] = None
    decoder_target: Optional[torch.Tensor] = None

    def __len__(self) -> int:
        return len(self.record_ids)


def record_key(record: RawRecord) -> str:
    """Record id qualified by language; ids are only unique within one file"""
    return f"{record.lang}/{record.id}"


def build_vocabulary(
    records: Iterable[RawRecord],
    tokenizer: Tokenizer,
    languages: Sequence[str] = (),
    max_size: int = 8000,
    extra_texts: Iterable[str] = (),
) -> Vocabulary:
    """Vocabulary over every text field of ``records`` plus ``extra_texts``"""
    records = list(records)
    streams = [
        tokenizer.split(getattr(r, name))
        for r in records
        for name in r.code_fields() + r.nl_fields()
    ]
    streams += [tokenizer.split(text) for text in extra_texts]
    langs = sorted(set(languages) | {r.lang for r in records})
    return Vocabulary.build(streams, languages=langs, max_size=max_size)


def prepare_classification(
    records: Sequence[RawRecord],
    layout: TemplateLayout,
    vocab: Vocabulary,
    tokenizer: Tokenizer,
    verbalizer: Verbalizer,
    max_seq_len: int = 512,
) -> List[PreparedExample]:
    prepared = []
    for record in records:
        if not record.is_classification:
            raise DataError(f"Record {record.id} is a {record.task} record, not a pair task")
        example = ClassificationExample(
            x1=tokenizer.tokenize(record.x1 or "", vocab),
            x2=tokenizer.tokenize(record.x2 or "", vocab),
            label=int(record.label),
            task=TaskKind(record.task),
            language=record.lang,
            record_id=record.id,
        )
        cast = cast_classification(example, layout, vocab, verbalizer, max_seq_len)
        prepared.append(PreparedExample(record_key(record), cast.masked, cast.target_id,
                                        example.label))
    return prepared


def prepare_generative(
    records: Sequence[RawRecord],
    m: int,
    vocab: Vocabulary,
    tokenizer: Tokenizer,
    max_seq_len: int = 512,
    max_target_len: int = 64,
    language: Optional[str] = None,
) -> List[PreparedExample]:
    """
    Prefix-prompted inputs; targets are cut to ``max_target_len`` tokens.

    ``language`` overrides each record's tag (CG only), which lets callers ask for
    a different output language than the one a record was written in.
    """
    prepared = []
    for record in records:
        if record.is_classification:
            raise DataError(f"Record {record.id} is a pair task, not a generative one")
        masked = build_generative_input(
            tokenizer.tokenize(record.source or "", vocab),
            language or record.lang,
            TaskKind(record.task),
            m,
            vocab,
            max_seq_len,
        )
        target = tokenizer.tokenize(record.target or "", vocab)[:max_target_len]
        prepared.append(PreparedExample(record_key(record), masked, target=target))
    return prepared


def epoch_order(n: int, seed: int, epoch: int, shuffle: bool = True) -> List[int]:
    """Example order for one epoch, fixed by (seed, epoch)"""
    if not shuffle:
        return list(range(n))
    return [int(i) for i in np.random.default_rng([seed, epoch]).permutation(n)]


def iterate_batches(
    examples: Sequence[PreparedExample],
    batch_size: int,
    seed: int = 0,
    epoch: int = 0,
    shuffle: bool = True,
) -> Iterator[List[PreparedExample]]:
    if batch_size < 1:
        raise ConfigError(f"batch_size must be >= 1, got {batch_size}")
    order = epoch_order(len(examples), seed, epoch, shuffle)
    for start in range(0, len(order), batch_size):
        yield [examples[i] for i in order[start:start + batch_size]]


def _pad_targets(rows: List[List[int]], pad_id: int) -> torch.Tensor:
    width = max(len(row) for row in rows)
    out = torch.full((len(rows), width), pad_id, dtype=torch.long)
    for i, row in enumerate(rows):
        out[i, : len(row)] = torch.tensor(row, dtype=torch.long)
    return out


def collate(examples: Sequence[PreparedExample], vocab: Vocabulary) -> Batch:
    """
    Pad inputs; classification batches get target ids and labels, generative ones
    get ``[BOS] t`` decoder inputs aligned with ``t [EOS]`` targets.
    """
    if not examples:
        raise DataError("Cannot collate an empty batch")
    batch = Batch(
        inputs=pad_batch([ex.masked for ex in examples], vocab.pad_id),
        record_ids=[ex.record_id for ex in examples],
    )
    if all(ex.target_id is not None for ex in examples):
        batch.target_ids = torch.tensor([ex.target_id for ex in examples], dtype=torch.long)
        batch.labels = torch.tensor([ex.label for ex in examples], dtype=torch.long)
    elif all(ex.target is not None for ex in examples):
        batch.decoder_in = _pad_targets([[vocab.bos_id] + ex.target for ex in examples], vocab.pad_id)
        batch.decoder_target = _pad_targets([ex.target + [vocab.eos_id] for ex in examples],
                                            vocab.pad_id)
    else:
        raise DataError("Batch mixes classification and generative examples")
    return batch
