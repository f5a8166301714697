"""
Training and continual pre-training knobs.
"""
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

TrainableSet = Literal["prompts_only", "prompts_and_plm", "plm_only"]
TaskFamily = Literal["classification", "generative"]

# (batch_size, epochs) per task family
FAMILY_DEFAULTS = {"classification": (10, 20), "generative": (20, 15)}


class TrainConfig(BaseModel):
    """
    Optimization settings for prompt tuning.

    ``batch_size`` and ``epochs`` left unset take the task family's defaults;
    ``warmup_steps`` left unset equals the number of steps in the first epoch.
    """

    model_config = ConfigDict(extra="forbid")

    base_lr: float = Field(default=3e-5, gt=0)
    batch_size: Optional[int] = Field(default=None, ge=1)
    epochs: Optional[int] = Field(default=None, ge=1)
    warmup_steps: Optional[int] = Field(default=None, ge=0)
    weight_decay: float = Field(default=0.01, ge=0)
    grad_clip: Optional[float] = Field(default=1.0, gt=0)
    seed: int = 42
    trainable_set: TrainableSet = "prompts_and_plm"
    max_seq_len: int = Field(default=512, ge=8)
    max_target_len: int = Field(default=64, ge=1)
    decoder_layers: int = Field(default=6, ge=1)
    save_optimizer: bool = True

    def for_family(self, family: TaskFamily) -> "TrainConfig":
        """Copy with batch size and epochs filled from the family defaults"""
        batch_size, epochs = FAMILY_DEFAULTS[family]
        return self.model_copy(update={
            "batch_size": self.batch_size or batch_size,
            "epochs": self.epochs or epochs,
        })


class PretrainConfig(BaseModel):
    """Continual MLM pre-training on language-marked unlabeled code (opt-in)"""

    model_config = ConfigDict(extra="forbid")

    enabled: bool = False
    corpus: Optional[str] = Field(default=None, description="JSONL of {code, lang} items")
    batch_size: int = Field(default=8, ge=1)
    epochs: int = Field(default=3, ge=1)
    mask_rate: float = Field(default=0.15, ge=0, le=1)
    base_lr: float = Field(default=5e-5, gt=0)
    weight_decay: float = Field(default=0.01, ge=0)
    max_seq_len: int = Field(default=256, ge=8)
    heldout_fraction: float = Field(default=0.1, ge=0, lt=1)
    seed: int = 42
