from .dataset import LabeledFeatureSet
from .voting import MAX_MEMBERS, Ensemble, TieBreaker, vote
from .evaluation import (
    Confusion,
    EvalReport,
    RankedModel,
    ensemble_size_sweep,
    evaluate,
    evaluate_model,
    rank_models,
)
from .stats import BoxStats, boxplot_stats, scale_stats
from .training import TuningOptions, train_scale_models
from .protocols import (
    GroupResult,
    LogoOptions,
    LogoPartition,
    LogoResult,
    leave_one_group_out,
    logo_partitions,
)

__all__ = [
    'LabeledFeatureSet',
    'MAX_MEMBERS',
    'Ensemble',
    'TieBreaker',
    'vote',
    'Confusion',
    'EvalReport',
    'RankedModel',
    'ensemble_size_sweep',
    'evaluate',
    'evaluate_model',
    'rank_models',
    'BoxStats',
    'boxplot_stats',
    'scale_stats',
    'TuningOptions',
    'train_scale_models',
    'GroupResult',
    'LogoOptions',
    'LogoPartition',
    'LogoResult',
    'leave_one_group_out',
    'logo_partitions',
]
