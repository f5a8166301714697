"""
Continual masked-language-model pre-training on language-marked unlabeled code.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn.functional as F
from loguru import logger

from pcode_backend.model import CodeEncoder
from pcode_backend.tokenizer import Tokenizer
from pcode_backend.vocab import Vocabulary
from pcode_config.errors import NumericError
from pcode_train.config import PretrainConfig
from pcode_train.logger import RunLogger
from pcode_train.optim import build_optimizer
from pcode_train.schedule import build_scheduler

IGNORE = -100
HELDOUT_EPOCH = 0


@dataclass
class PretrainResult:
    loss_before: float
    loss_after: float
    step_losses: List[float] = field(default_factory=list)
    optimizer_steps: int = 0


def marked_sequence(code: str, language: str, vocab: Vocabulary, tokenizer: Tokenizer,
                    max_seq_len: int) -> List[int]:
    """``[CLS] code <lang> [SEP]``, code cut from the tail to fit"""
    tag = vocab.tag_id(language)
    ids = tokenizer.tokenize(code, vocab)[: max_seq_len - 3]
    return [vocab.cls_id] + ids + [tag, vocab.sep_id]


def mask_tokens(ids: Sequence[int], vocab: Vocabulary, mask_rate: float,
                rng: np.random.Generator) -> Tuple[List[int], List[int]]:
    """
    Select ``mask_rate`` of the non-special positions; of those 80% become [MASK],
    10% a random ordinary token and 10% stay. Labels are ``IGNORE`` elsewhere.
    """
    protected = set(vocab.special_ids.values()) | set(vocab.language_tag_ids.values())
    candidates = [i for i, token in enumerate(ids) if token not in protected]
    inputs, labels = list(ids), [IGNORE] * len(ids)
    if not candidates or mask_rate <= 0:
        return inputs, labels
    count = max(1, int(round(len(candidates) * mask_rate)))
    chosen = rng.choice(len(candidates), size=min(count, len(candidates)), replace=False)
    ordinary = [t for t in range(vocab.size) if t not in protected]
    for c in sorted(int(k) for k in chosen):
        position = candidates[c]
        labels[position] = ids[position]
        roll = rng.random()
        if roll < 0.8:
            inputs[position] = vocab.mask_id
        elif roll < 0.9:
            inputs[position] = ordinary[int(rng.integers(len(ordinary)))]
    return inputs, labels


def mask_epoch(sequences: Sequence[List[int]], vocab: Vocabulary, mask_rate: float,
               seed: int, epoch: int) -> List[Tuple[List[int], List[int]]]:
    """Masked copies of ``sequences``; the same (seed, epoch) gives the same masks"""
    rng = np.random.default_rng([seed, epoch])
    return [mask_tokens(seq, vocab, mask_rate, rng) for seq in sequences]


def _collate(items: Sequence[Tuple[List[int], List[int]]], pad_id: int):
    width = max(len(inputs) for inputs, _ in items)
    ids = torch.full((len(items), width), pad_id, dtype=torch.long)
    labels = torch.full((len(items), width), IGNORE, dtype=torch.long)
    attention = torch.zeros((len(items), width), dtype=torch.bool)
    for row, (inputs, targets) in enumerate(items):
        ids[row, : len(inputs)] = torch.tensor(inputs)
        labels[row, : len(targets)] = torch.tensor(targets)
        attention[row, : len(inputs)] = True
    return ids, labels, attention


def _batch_loss(encoder: CodeEncoder, items, pad_id: int) -> Tuple[torch.Tensor, int]:
    ids, labels, attention = _collate(items, pad_id)
    keep = labels != IGNORE
    count = int(keep.sum())
    if count == 0:
        return torch.zeros(()), 0
    hidden = encoder.encode_ids(ids, attention)
    logits = encoder.mlm_logits(hidden[keep])
    return F.cross_entropy(logits, labels[keep]), count


@torch.no_grad()
def mlm_eval_loss(encoder: CodeEncoder, masked: Sequence[Tuple[List[int], List[int]]],
                  vocab: Vocabulary, batch_size: int = 8) -> float:
    """Mean cross-entropy over every masked position"""
    encoder.eval()
    total, count = 0.0, 0
    for start in range(0, len(masked), batch_size):
        loss, n = _batch_loss(encoder, masked[start:start + batch_size], vocab.pad_id)
        total += float(loss) * n
        count += n
    return total / count if count else 0.0


def continual_mlm_pretrain(
    encoder: CodeEncoder,
    corpus: Sequence[Tuple[str, str]],
    vocab: Vocabulary,
    tokenizer: Tokenizer,
    config: Optional[PretrainConfig] = None,
    run_logger: Optional[RunLogger] = None,
) -> PretrainResult:
    """
    Continue MLM training of ``encoder`` (and its MLM head) on ``(code, language)``
    items, each carrying its language tag.

    A held-out slice of the corpus, masked once, measures the loss before and
    after. Steps whose batch has no masked position are skipped.
    """
    config = config or PretrainConfig()
    sequences = [marked_sequence(code, lang, vocab, tokenizer, config.max_seq_len)
                 for code, lang in corpus]
    order = np.random.default_rng(config.seed).permutation(len(sequences))
    n_heldout = int(round(len(sequences) * config.heldout_fraction))
    heldout = [sequences[int(i)] for i in order[:n_heldout]]
    train = [sequences[int(i)] for i in order[n_heldout:]]
    heldout_masked = mask_epoch(heldout, vocab, config.mask_rate, config.seed, HELDOUT_EPOCH)

    for param in encoder.parameters():
        param.requires_grad_(True)
    torch.manual_seed(config.seed)
    optimizer = build_optimizer(encoder.named_parameters(), config.base_lr, config.weight_decay)
    steps_per_epoch = -(-len(train) // config.batch_size)
    total_steps = max(steps_per_epoch * config.epochs, 1)
    scheduler = build_scheduler(optimizer, min(steps_per_epoch, total_steps), total_steps)

    result = PretrainResult(loss_before=mlm_eval_loss(encoder, heldout_masked, vocab),
                            loss_after=float("nan"))
    logger.info(f"Continual MLM on {len(train)} items ({len(heldout)} held out), "
                f"held-out loss before: {result.loss_before:.4f}")
    for epoch in range(1, config.epochs + 1):
        encoder.train()
        masked = mask_epoch(train, vocab, config.mask_rate, config.seed, epoch)
        batch_order = np.random.default_rng([config.seed, epoch]).permutation(len(masked))
        epoch_losses = []
        for start in range(0, len(batch_order), config.batch_size):
            items = [masked[int(i)] for i in batch_order[start:start + config.batch_size]]
            optimizer.zero_grad(set_to_none=True)
            loss, count = _batch_loss(encoder, items, vocab.pad_id)
            if count == 0:
                continue
            if not torch.isfinite(loss):
                raise NumericError(f"Non-finite MLM loss at step {result.optimizer_steps + 1}")
            loss.backward()
            torch.nn.utils.clip_grad_norm_(encoder.parameters(), 1.0)
            optimizer.step()
            scheduler.step()
            result.optimizer_steps += 1
            result.step_losses.append(float(loss.detach()))
            epoch_losses.append(result.step_losses[-1])
        mean_loss = float(np.mean(epoch_losses)) if epoch_losses else 0.0
        if run_logger is not None:
            run_logger.log_epoch(config.seed, epoch, result.optimizer_steps, mlm_loss=mean_loss)

    result.loss_after = mlm_eval_loss(encoder, heldout_masked, vocab)
    logger.info(f"Held-out MLM loss {result.loss_before:.4f} -> {result.loss_after:.4f}")
    return result
