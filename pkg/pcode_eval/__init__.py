"""
Metrics, experiment orchestration and ablations.
"""

from .ablation import ABLATION_AXES, ablate
from .experiment import (
    DecodeConfig,
    ExperimentSetup,
    ExperimentSpec,
    LayoutConfig,
    evaluate_checkpoint,
    run_experiment,
)
from .metrics import accuracy, bleu, exact_match, mean_rouge_l, rouge_l
from .report import EvalReport, SeedResult

__all__ = [
    'ABLATION_AXES',
    'DecodeConfig',
    'EvalReport',
    'ExperimentSetup',
    'ExperimentSpec',
    'LayoutConfig',
    'SeedResult',
    'ablate',
    'accuracy',
    'bleu',
    'evaluate_checkpoint',
    'exact_match',
    'mean_rouge_l',
    'rouge_l',
    'run_experiment',
]
