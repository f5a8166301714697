"""
Optimization: prompt tuning, continual MLM pre-training and fine-tuning baselines.
"""

from .baselines import BaselineClassifier, finetune_baseline
from .config import PretrainConfig, TrainConfig
from .logger import RunLogger, configure_logging
from .pretrain import continual_mlm_pretrain, mlm_eval_loss
from .schedule import build_scheduler, lr_at
from .trainer import Checkpoint, Trainer, train

__all__ = [
    'BaselineClassifier',
    'Checkpoint',
    'PretrainConfig',
    'RunLogger',
    'TrainConfig',
    'Trainer',
    'build_scheduler',
    'configure_logging',
    'continual_mlm_pretrain',
    'finetune_baseline',
    'lr_at',
    'mlm_eval_loss',
    'train',
]
