from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple
import logging
import time

from src.bsif import ScaleId
from src.observability import get_metrics
from src.svm import ParameterGrid, SvmModel, TuningReport, train_auto
from src.svm.smo import DEFAULT_MAX_ITER, DEFAULT_SV_THRESHOLD, DEFAULT_TOL
from src.svm.tuning import DEFAULT_FOLDS

from .dataset import LabeledFeatureSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TuningOptions:
    grid: ParameterGrid = field(default_factory=ParameterGrid)
    k: int = DEFAULT_FOLDS
    seed: int = 0
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    sv_threshold: float = DEFAULT_SV_THRESHOLD


def _train_one(train_set, options: TuningOptions):
    return train_auto(train_set, grid=options.grid, k=options.k, seed=options.seed,
                      tol=options.tol, max_iter=options.max_iter, sv_threshold=options.sv_threshold)


def train_scale_models(dataset: LabeledFeatureSet, scales: Sequence[ScaleId], options: TuningOptions,
                       workers: int = 1) -> Dict[ScaleId, Tuple[SvmModel, TuningReport]]:
    """One auto-tuned SVM per scale; results are keyed and ordered like `scales`"""
    dataset.require_scales(scales)
    train_sets = [dataset.train_set(s) for s in scales]
    started = time.perf_counter()

    if workers > 1 and len(scales) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results: List = list(pool.map(_train_one, train_sets, [options] * len(train_sets)))
    else:
        results = [_train_one(ts, options) for ts in train_sets]

    get_metrics().record_models(len(results))
    logger.info(f"Trained {len(results)} models on {len(dataset)} images in {time.perf_counter() - started:.1f}s")
    return dict(zip(scales, results))
