from .kernel import rbf_kernel, rbf_gram
from .smo import (
    ATTACK,
    BONAFIDE,
    LABEL_MAP,
    SmoResult,
    SvmModel,
    TrainSet,
    decision_function,
    kkt_violations,
    labels_from_decisions,
    predict,
    solve_smo,
    train_smo,
    training_alphas,
)
from .tuning import ParameterGrid, TuningCell, TuningReport, stratified_folds, train_auto
from .model_io import FORMAT_VERSION, load_model, save_model

__all__ = [
    'rbf_kernel',
    'rbf_gram',
    'ATTACK',
    'BONAFIDE',
    'LABEL_MAP',
    'SmoResult',
    'SvmModel',
    'TrainSet',
    'decision_function',
    'kkt_violations',
    'labels_from_decisions',
    'predict',
    'solve_smo',
    'train_smo',
    'training_alphas',
    'ParameterGrid',
    'TuningCell',
    'TuningReport',
    'stratified_folds',
    'train_auto',
    'FORMAT_VERSION',
    'load_model',
    'save_model',
]
