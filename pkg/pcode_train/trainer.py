"""
Prompt-tuning training loop with best-on-validation checkpoint selection.
"""
import copy
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Set, Tuple

import numpy as np
import torch
from loguru import logger
from torch import nn
from tqdm import tqdm

from pcode_backend.archive import load_checkpoint, save_checkpoint
from pcode_backend.config import ModelConfig
from pcode_backend.store import ParameterStore
from pcode_backend.vocab import Vocabulary
from pcode_config.errors import DataError, NumericError
from pcode_tasks.losses import mlm_loss_from_logits, seq2seq_loss
from pcode_tasks.model import PromptedModel, strip_special
from pcode_tasks.verbalizer import Verbalizer, verbalize_batch
from pcode_train.batching import Batch, PreparedExample, collate, iterate_batches
from pcode_train.config import TrainConfig
from pcode_train.logger import RunLogger
from pcode_train.optim import build_optimizer
from pcode_train.schedule import build_scheduler


@dataclass
class TrainHistory:
    epoch_logs: List[Dict[str, Any]] = field(default_factory=list)
    step_losses: List[float] = field(default_factory=list)
    seen_record_ids: Set[str] = field(default_factory=set)
    optimizer_steps: int = 0


@dataclass
class Checkpoint:
    """
    Parameters of every trained component plus the selection bookkeeping.

    ``params`` holds ``encoder.*``, ``prompt.*`` and (generative) ``decoder.*``
    arrays; baselines store ``encoder.*`` and ``header.*``.
    """

    params: ParameterStore
    epoch: int
    metric_name: str
    metric_value: float
    step: int = 0
    optimizer_state: Optional[Dict[str, Any]] = None
    prompt_bank_shape: Optional[List[int]] = None
    history: TrainHistory = field(default_factory=TrainHistory)

    def metadata(self) -> Dict[str, Any]:
        return {
            "epoch": self.epoch,
            "metric_name": self.metric_name,
            "metric_value": self.metric_value,
            "step": self.step,
        }

    def save(self, path: Path, model_config: Optional[ModelConfig] = None,
             vocab: Optional[Vocabulary] = None, **extra: Any) -> Path:
        return save_checkpoint(
            path, self.params, self.optimizer_state, {**self.metadata(), **extra},
            model_config, vocab, self.prompt_bank_shape,
        )

    @classmethod
    def load(cls, path: Path, expected_config: Optional[ModelConfig] = None,
             expected_vocab_sha256: Optional[str] = None) -> "Checkpoint":
        params, optimizer_state, manifest = load_checkpoint(path, expected_config,
                                                            expected_vocab_sha256)
        meta = manifest.get("metadata", {})
        return cls(
            params=params,
            epoch=int(meta.get("epoch", 0)),
            metric_name=meta.get("metric_name", ""),
            metric_value=float(meta.get("metric_value", float("nan"))),
            step=int(meta.get("step", 0)),
            optimizer_state=optimizer_state,
            prompt_bank_shape=manifest.get("prompt_bank_shape"),
        )

    def restore(self, components: Dict[str, Optional[nn.Module]]) -> None:
        """Load arrays back into each ``name -> module`` component"""
        for name, module in components.items():
            if module is not None:
                self.params.load_into(module, f"{name}.")


class Trainer:
    """
    Trains a PromptedModel on prepared examples.

    Classification runs optimize the MLM loss at [MASK] and select the epoch with
    the best validation accuracy; generative runs optimize the teacher-forced loss
    and select the lowest validation loss. Without validation data the lowest
    training loss wins.
    """

    def __init__(
        self,
        model: PromptedModel,
        vocab: Vocabulary,
        config: TrainConfig,
        verbalizer: Optional[Verbalizer] = None,
        run_logger: Optional[RunLogger] = None,
        progress: bool = False,
    ):
        self.model = model
        self.vocab = vocab
        self.family = "generative" if getattr(model, "decoder", None) is not None else "classification"
        self.config = config.for_family(self.family)
        self.verbalizer = verbalizer
        self.run_logger = run_logger
        self.progress = progress
        if isinstance(model, PromptedModel) and self.family == "classification" and verbalizer is None:
            raise DataError("Classification training needs a verbalizer")

    # overridable pieces

    def components(self) -> Dict[str, Optional[nn.Module]]:
        return self.model.components

    def trainable_parameters(self) -> List[Tuple[str, nn.Parameter]]:
        return self.model.apply_trainable_set(self.config.trainable_set)

    def compute_loss(self, batch: Batch) -> torch.Tensor:
        if self.family == "classification":
            return mlm_loss_from_logits(self.model.mask_logits(batch.inputs), batch.target_ids)
        logits = self.model.decoder_logits(batch.inputs, batch.decoder_in,
                                           batch.decoder_in != self.vocab.pad_id)
        return seq2seq_loss(logits, batch.decoder_target, self.vocab.pad_id)

    def predict_batch(self, batch: Batch) -> torch.Tensor:
        probs = torch.softmax(self.model.mask_logits(batch.inputs), dim=-1)
        labels, _ = verbalize_batch(probs, self.verbalizer)
        return labels

    # evaluation

    @torch.no_grad()
    def evaluate(self, examples: Sequence[PreparedExample]) -> Dict[str, float]:
        """Mean loss, plus accuracy for classification"""
        self.model.eval()
        total_loss, count, correct = 0.0, 0, 0
        for chunk in iterate_batches(examples, self.config.batch_size, shuffle=False):
            batch = collate(chunk, self.vocab)
            total_loss += float(self.compute_loss(batch)) * len(batch)
            count += len(batch)
            if self.family == "classification":
                correct += int((self.predict_batch(batch) == batch.labels).sum())
        metrics = {"valid_loss": total_loss / max(count, 1)}
        if self.family == "classification":
            metrics["accuracy"] = correct / max(count, 1)
        return metrics

    @torch.no_grad()
    def predict(self, examples: Sequence[PreparedExample]) -> List[int]:
        self.model.eval()
        predictions: List[int] = []
        for chunk in iterate_batches(examples, self.config.batch_size, shuffle=False):
            predictions += self.predict_batch(collate(chunk, self.vocab)).tolist()
        return predictions

    @torch.no_grad()
    def generate(self, examples: Sequence[PreparedExample], max_len: int = 64,
                 strategy: str = "greedy", beam_size: int = 5) -> List[List[int]]:
        """Decoded target ids per example, specials stripped"""
        self.model.eval()
        outputs: List[List[int]] = []
        for chunk in iterate_batches(examples, self.config.batch_size, shuffle=False):
            batch = collate(chunk, self.vocab)
            decoded = self.model.generate(batch.inputs, self.vocab, max_len, strategy, beam_size)
            outputs += [strip_special(ids, self.vocab) for ids in decoded]
        return outputs

    # training

    def _metric(self, has_valid: bool) -> Tuple[str, bool]:
        if not has_valid:
            return "train_loss", False
        return ("accuracy", True) if self.family == "classification" else ("valid_loss", False)

    def fit(self, train: Sequence[PreparedExample],
            valid: Sequence[PreparedExample] = ()) -> Checkpoint:
        cfg = self.config
        if not train:
            raise DataError("No training examples")
        torch.manual_seed(cfg.seed)

        named = self.trainable_parameters()
        optimizer = build_optimizer(named, cfg.base_lr, cfg.weight_decay)
        steps_per_epoch = math.ceil(len(train) / cfg.batch_size)
        total_steps = steps_per_epoch * cfg.epochs
        warmup = steps_per_epoch if cfg.warmup_steps is None else min(cfg.warmup_steps, total_steps)
        scheduler = build_scheduler(optimizer, warmup, total_steps)
        metric_name, maximize = self._metric(bool(valid))
        params = [p for _, p in named]

        history = TrainHistory()
        best: Optional[Checkpoint] = None
        step = 0
        logger.info(
            f"Training {self.family} model on {len(train)} examples: {cfg.epochs} epochs x "
            f"{steps_per_epoch} steps, warmup {warmup}, trainable_set={cfg.trainable_set}"
        )
        for epoch in range(1, cfg.epochs + 1):
            self.model.train()
            epoch_losses = []
            chunks = iterate_batches(train, cfg.batch_size, cfg.seed, epoch)
            for chunk in tqdm(chunks, total=steps_per_epoch, desc=f"epoch {epoch}",
                              disable=not self.progress, leave=False):
                batch = collate(chunk, self.vocab)
                optimizer.zero_grad(set_to_none=True)
                try:
                    loss = self.compute_loss(batch)
                except NumericError as e:
                    raise NumericError(f"{e} at step {step + 1}; batch ids: {batch.record_ids}") from e
                if not torch.isfinite(loss):
                    raise NumericError(
                        f"Non-finite loss {float(loss)} at step {step + 1} (epoch {epoch}); "
                        f"batch ids: {batch.record_ids}"
                    )
                loss.backward()
                if cfg.grad_clip:
                    torch.nn.utils.clip_grad_norm_(params, cfg.grad_clip)
                optimizer.step()
                scheduler.step()
                step += 1
                history.seen_record_ids.update(batch.record_ids)
                history.step_losses.append(float(loss.detach()))
                epoch_losses.append(history.step_losses[-1])

            metrics: Dict[str, float] = {"train_loss": float(np.mean(epoch_losses))}
            if valid:
                metrics.update(self.evaluate(valid))
            record = {"epoch": epoch, "step": step, "lr": scheduler.get_last_lr()[0], **metrics}
            history.epoch_logs.append(record)
            if self.run_logger is not None:
                self.run_logger.log_epoch(cfg.seed, epoch, step, **metrics)
            else:
                logger.info(f"epoch {epoch}: " + ", ".join(f"{k}={v:.4f}" for k, v in metrics.items()))

            value = metrics[metric_name]
            if best is None or (value > best.metric_value if maximize else value < best.metric_value):
                best = Checkpoint(
                    params=ParameterStore.from_modules(**self.components()),
                    epoch=epoch,
                    metric_name=metric_name,
                    metric_value=value,
                    step=step,
                    optimizer_state=copy.deepcopy(optimizer.state_dict()) if cfg.save_optimizer else None,
                    prompt_bank_shape=self._prompt_shape(),
                )

        assert best is not None
        best.restore(self.components())
        history.optimizer_steps = step
        best.history = history
        logger.info(f"Selected epoch {best.epoch} ({metric_name}={best.metric_value:.4f})")
        return best

    def _prompt_shape(self) -> Optional[List[int]]:
        return self.model.prompt.shape if isinstance(self.model, PromptedModel) else None


def train(
    model: PromptedModel,
    vocab: Vocabulary,
    train_examples: Sequence[PreparedExample],
    valid_examples: Sequence[PreparedExample],
    config: TrainConfig,
    verbalizer: Optional[Verbalizer] = None,
    run_logger: Optional[RunLogger] = None,
) -> Checkpoint:
    """Train ``model`` in place and return the best-on-validation checkpoint"""
    trainer = Trainer(model, vocab, config, verbalizer, run_logger)
    return trainer.fit(train_examples, valid_examples)
