"""
Fine-tuning baselines for pair classification: an MLP over [CLS], or an MLP over
averaged token embeddings with the backbone frozen.
"""
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import torch
import torch.nn.functional as F
from torch import nn

from pcode_backend.model import CodeEncoder
from pcode_backend.tokenizer import Tokenizer
from pcode_backend.vocab import Vocabulary
from pcode_config.errors import ConfigError
from pcode_data.schema import RawRecord
from pcode_prompt.inject import InputBatch, MaskedInput
from pcode_tasks.cast import proportional_budget
from pcode_train.batching import Batch, PreparedExample, record_key
from pcode_train.config import TrainConfig
from pcode_train.logger import RunLogger
from pcode_train.trainer import Checkpoint, Trainer

BaselineMode = Literal["mlp_cls", "avg_embed"]
BASELINE_MODES = ("mlp_cls", "avg_embed")
NUM_CLASSES = 2


class MLPHeader(nn.Module):
    """Three linear layers with ReLU in between, ending in two class logits"""

    def __init__(self, hidden_dim: int, num_classes: int = NUM_CLASSES):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(hidden_dim, hidden_dim),
            nn.ReLU(),
            nn.Linear(hidden_dim, hidden_dim),
            nn.ReLU(),
            nn.Linear(hidden_dim, num_classes),
        )

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        return self.net(features)


class BaselineClassifier(nn.Module):
    def __init__(self, encoder: CodeEncoder, mode: BaselineMode):
        super().__init__()
        if mode not in BASELINE_MODES:
            raise ConfigError(f"Unknown baseline mode {mode!r}; expected one of {BASELINE_MODES}")
        self.encoder = encoder
        self.mode = mode
        self.header = MLPHeader(encoder.hidden_dim)

    @property
    def components(self) -> Dict[str, Optional[nn.Module]]:
        return {"encoder": self.encoder, "header": self.header}

    def features(self, inputs: InputBatch) -> torch.Tensor:
        if self.mode == "mlp_cls":
            return self.encoder.encode_ids(inputs.ids, inputs.attention_mask)[:, 0]
        embeddings = self.encoder.embed(inputs.ids)
        weights = inputs.attention_mask.unsqueeze(-1).to(embeddings.dtype)
        return (embeddings * weights).sum(dim=1) / weights.sum(dim=1).clamp(min=1.0)

    def forward(self, inputs: InputBatch) -> torch.Tensor:
        return self.header(self.features(inputs))


def pair_input(x1: Sequence[int], x2: Sequence[int], vocab: Vocabulary,
               max_seq_len: int = 512) -> MaskedInput:
    """``[CLS] x1 [SEP] x2 [SEP]`` with proportional tail truncation"""
    keep1, keep2 = proportional_budget(len(x1), len(x2), max_seq_len - 3)
    ids = [vocab.cls_id] + list(x1[:keep1]) + [vocab.sep_id] + list(x2[:keep2]) + [vocab.sep_id]
    return MaskedInput(ids=ids, prompt_positions=[], mask_index=None,
                       truncated=(keep1, keep2) != (len(x1), len(x2)))


def prepare_pairs(records: Sequence[RawRecord], vocab: Vocabulary, tokenizer: Tokenizer,
                  max_seq_len: int = 512) -> List[PreparedExample]:
    prepared = []
    for record in records:
        if not record.is_classification:
            raise ConfigError(f"Baselines support pair classification only, got {record.task}")
        masked = pair_input(tokenizer.tokenize(record.x1 or "", vocab),
                            tokenizer.tokenize(record.x2 or "", vocab), vocab, max_seq_len)
        prepared.append(PreparedExample(record_key(record), masked, target_id=record.label,
                                        label=record.label))
    return prepared


class BaselineTrainer(Trainer):
    """The prompt-tuning loop with a classification header in place of the verbalizer"""

    model: BaselineClassifier

    def components(self) -> Dict[str, Optional[nn.Module]]:
        return self.model.components

    def trainable_parameters(self) -> List[Tuple[str, nn.Parameter]]:
        frozen = self.model.mode == "avg_embed"
        for param in self.model.encoder.parameters():
            param.requires_grad_(not frozen)
        for param in self.model.header.parameters():
            param.requires_grad_(True)
        return [(n, p) for n, p in self.model.named_parameters() if p.requires_grad]

    def compute_loss(self, batch: Batch) -> torch.Tensor:
        return F.cross_entropy(self.model(batch.inputs), batch.labels)

    def predict_batch(self, batch: Batch) -> torch.Tensor:
        return self.model(batch.inputs).argmax(dim=-1)


def finetune_baseline(
    encoder: CodeEncoder,
    train_examples: Sequence[PreparedExample],
    valid_examples: Sequence[PreparedExample],
    vocab: Vocabulary,
    mode: BaselineMode,
    config: TrainConfig,
    task: str = "cd",
    run_logger: Optional[RunLogger] = None,
) -> Tuple[Checkpoint, BaselineClassifier]:
    """Train a baseline classifier; generative tasks are rejected"""
    if task in ("cm", "cg"):
        raise ConfigError(f"Baseline mode {mode!r} does not support generative task {task}")
    torch.manual_seed(config.seed)
    model = BaselineClassifier(encoder, mode)
    trainer = BaselineTrainer(model, vocab, config, run_logger=run_logger)
    return trainer.fit(train_examples, valid_examples), model
