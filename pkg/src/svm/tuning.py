"""
Automatic (C, gamma) selection by stratified k-fold cross validation.

Every grid cell is scored by its mean fold CCR; the best cell wins, ties go
to the smaller C and then the smaller gamma. One Gram matrix per gamma is
computed on the full set and sliced for each fold.
"""

from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple
import logging

import numpy as np
from sklearn.model_selection import StratifiedKFold

from src.errors import InvalidDataError
from src.observability import SpanHelper, get_metrics, traced

from .kernel import rbf_gram
from .smo import (
    DEFAULT_MAX_ITER,
    DEFAULT_SV_THRESHOLD,
    DEFAULT_TOL,
    SvmModel,
    TrainSet,
    labels_from_decisions,
    model_from_solution,
    solve_smo,
)

logger = logging.getLogger(__name__)

DEFAULT_C_VALUES = tuple(2.0 ** e for e in range(-5, 16, 2))
DEFAULT_GAMMA_VALUES = tuple(2.0 ** e for e in range(-15, 4, 2))
DEFAULT_FOLDS = 10


@dataclass(frozen=True)
class ParameterGrid:
    c_values: Tuple[float, ...] = DEFAULT_C_VALUES
    gamma_values: Tuple[float, ...] = DEFAULT_GAMMA_VALUES

    def __post_init__(self):
        c_values = tuple(sorted(float(v) for v in self.c_values))
        gamma_values = tuple(sorted(float(v) for v in self.gamma_values))
        if not c_values or not gamma_values:
            raise InvalidDataError("Parameter grid is empty")
        if min(c_values) <= 0 or min(gamma_values) <= 0:
            raise InvalidDataError("Grid values for C and gamma must be positive")
        object.__setattr__(self, "c_values", c_values)
        object.__setattr__(self, "gamma_values", gamma_values)

    def cells(self) -> Iterator[Tuple[float, float]]:
        for c in self.c_values:
            for gamma in self.gamma_values:
                yield c, gamma

    def __len__(self) -> int:
        return len(self.c_values) * len(self.gamma_values)


@dataclass
class TuningCell:
    c: float
    gamma: float
    fold_ccrs: Tuple[float, ...]
    mean_ccr: float


@dataclass
class TuningReport:
    k: int
    seed: int
    fold_sizes: Tuple[int, ...]
    cells: List[TuningCell] = field(default_factory=list)
    best_c: Optional[float] = None
    best_gamma: Optional[float] = None
    best_ccr: Optional[float] = None

    def header(self) -> List[str]:
        return ["c", "gamma", "mean_ccr", "selected"] + [f"fold{i + 1}" for i in range(self.k)]

    def rows(self) -> List[List[str]]:
        rows = []
        for cell in self.cells:
            selected = cell.c == self.best_c and cell.gamma == self.best_gamma
            rows.append([repr(cell.c), repr(cell.gamma), repr(cell.mean_ccr), str(int(selected))]
                        + [repr(v) for v in cell.fold_ccrs])
        return rows


def stratified_folds(labels: Sequence[int], k: int, seed: int) -> List[np.ndarray]:
    """Seeded stratified partition into k validation folds (sorted indices)"""
    labels = np.asarray(labels)
    if k < 2:
        raise InvalidDataError(f"Need at least 2 folds, got {k}")
    if labels.shape[0] < k:
        raise InvalidDataError(f"{labels.shape[0]} samples cannot fill {k} folds")
    classes, counts = np.unique(labels, return_counts=True)
    if classes.shape[0] < 2 or counts.min() < k:
        raise InvalidDataError(
            f"Stratified {k}-fold split impossible: class counts {dict(zip(classes.tolist(), counts.tolist()))}"
        )
    splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed)
    placeholder = np.zeros((labels.shape[0], 1))
    return [np.sort(val) for _, val in splitter.split(placeholder, labels)]


def _fold_ccr(K: np.ndarray, y: np.ndarray, train_idx: np.ndarray, val_idx: np.ndarray,
              c: float, tol: float, max_iter: int) -> float:
    result = solve_smo(K[np.ix_(train_idx, train_idx)], y[train_idx], c, tol=tol, max_iter=max_iter)
    get_metrics().record_smo_iterations(result.iterations)
    coefs = result.alpha * y[train_idx]
    decisions = K[np.ix_(val_idx, train_idx)] @ coefs + result.bias
    return float(np.mean(labels_from_decisions(decisions) == y[val_idx]))


@traced("svm.train_auto")
def train_auto(data: TrainSet, grid: Optional[ParameterGrid] = None, k: int = DEFAULT_FOLDS,
               seed: int = 0, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
               sv_threshold: float = DEFAULT_SV_THRESHOLD) -> Tuple[SvmModel, TuningReport]:
    grid = grid or ParameterGrid()
    folds = stratified_folds(data.labels, k, seed)
    all_idx = np.arange(len(data))
    splits = [(np.setdiff1d(all_idx, val), val) for val in folds]
    report = TuningReport(k=k, seed=seed, fold_sizes=tuple(len(v) for v in folds))

    grams = {}
    best_key = None
    for c, gamma in grid.cells():
        if gamma not in grams:
            grams[gamma] = rbf_gram(data.features, data.features, gamma)
        K = grams[gamma]
        fold_ccrs = tuple(_fold_ccr(K, data.labels, tr, val, c, tol, max_iter) for tr, val in splits)
        mean_ccr = float(np.mean(fold_ccrs))
        report.cells.append(TuningCell(c=c, gamma=gamma, fold_ccrs=fold_ccrs, mean_ccr=mean_ccr))

        # Cells arrive in ascending (C, gamma) order, so only a strictly better CCR replaces the leader
        if best_key is None or mean_ccr > best_key[0]:
            best_key = (mean_ccr, c, gamma)

    report.best_ccr, report.best_c, report.best_gamma = best_key
    scale = data.scale_id.label if data.scale_id else "unscaled"
    logger.info(
        f"✅ {scale}: selected C={report.best_c:g}, gamma={report.best_gamma:g} "
        f"(mean {k}-fold CCR {report.best_ccr:.4f} over {len(grid)} cells)"
    )
    SpanHelper.set_attributes({"svm.best_c": report.best_c, "svm.best_gamma": report.best_gamma})

    result = solve_smo(grams[report.best_gamma], data.labels, report.best_c, tol=tol, max_iter=max_iter)
    get_metrics().record_smo_iterations(result.iterations)
    model = model_from_solution(data, result, report.best_c, report.best_gamma, sv_threshold)
    return model, report
