"""
Model hyper-parameters for the encoder backbone.
"""
from pydantic import BaseModel, ConfigDict, Field, model_validator


class ModelConfig(BaseModel):
    """Shape of the transformer encoder and its MLM head"""

    model_config = ConfigDict(extra="forbid")

    hidden_dim: int = Field(default=128, ge=2, description="Width d of every hidden state")
    num_layers: int = Field(default=4, ge=1)
    num_heads: int = Field(default=4, ge=1)
    max_seq_len: int = Field(default=512, ge=2)
    vocab_size: int = Field(default=8000, ge=8)
    ffn_dim: int = Field(default=0, ge=0, description="Feed-forward width; 0 means 4 * hidden_dim")
    dropout: float = Field(default=0.1, ge=0.0, lt=1.0)
    layer_norm_eps: float = Field(default=1e-12, gt=0.0)
    init_std: float = Field(default=0.02, gt=0.0)
    mlm_head: bool = Field(default=True, description="Tie the MLM decoder to the embedding table")

    @model_validator(mode="after")
    def validate_heads(self) -> "ModelConfig":
        if self.hidden_dim % self.num_heads != 0:
            raise ValueError(
                f"hidden_dim={self.hidden_dim} is not divisible by num_heads={self.num_heads}"
            )
        return self

    @property
    def ffn_width(self) -> int:
        return self.ffn_dim or 4 * self.hidden_dim

    @property
    def head_dim(self) -> int:
        return self.hidden_dim // self.num_heads
