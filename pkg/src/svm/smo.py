"""
Soft-margin RBF SVM trained by sequential minimal optimization.

The solver works on a precomputed Gram matrix and picks working pairs with
the maximal-violating first index and a second-order choice for the second
index. It stops once the largest KKT violation gap drops below tol.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np

from src.bsif import FeatureVector, ScaleId
from src.errors import InvalidDataError, TrainingError
from src.observability import get_metrics, traced

from .kernel import rbf_gram

logger = logging.getLogger(__name__)

ATTACK = 1
BONAFIDE = -1
LABEL_MAP: Dict[int, str] = {ATTACK: "attack", BONAFIDE: "bonafide"}

DEFAULT_TOL = 1e-3
DEFAULT_MAX_ITER = 10_000_000
DEFAULT_SV_THRESHOLD = 1e-8

# Curvature floor for non positive-definite pairs
TAU = 1e-12


@dataclass(frozen=True, eq=False)
class TrainSet:
    """Feature rows of one scale with labels +1 (attack) / -1 (bona fide)"""
    features: np.ndarray
    labels: np.ndarray
    scale_id: Optional[ScaleId] = None
    n: Optional[int] = None

    def __post_init__(self):
        features = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        labels = np.asarray(self.labels).astype(np.int64).ravel()
        if features.shape[0] != labels.shape[0]:
            raise InvalidDataError(f"{features.shape[0]} feature rows but {labels.shape[0]} labels")
        if not np.all(np.isin(labels, (ATTACK, BONAFIDE))):
            raise InvalidDataError("Labels must be +1 (attack) or -1 (bona fide)")
        if not (np.any(labels == ATTACK) and np.any(labels == BONAFIDE)):
            raise InvalidDataError("Training data must contain both classes")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_vectors(cls, vectors: Sequence[FeatureVector], labels: Sequence[int]) -> "TrainSet":
        if not vectors:
            raise InvalidDataError("Empty training set")
        scale_ids = {v.scale_id for v in vectors}
        if len(scale_ids) != 1:
            raise InvalidDataError(f"Training vectors mix scales {sorted(map(str, scale_ids))}")
        dims = {v.bins.shape[0] for v in vectors}
        if len(dims) != 1:
            raise InvalidDataError(f"Training vectors mix dimensions {sorted(dims)}")
        return cls(np.stack([v.bins for v in vectors]), np.asarray(labels),
                   scale_id=vectors[0].scale_id, n=vectors[0].n)

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def dimension(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> "TrainSet":
        return TrainSet(self.features[indices], self.labels[indices], self.scale_id, self.n)


@dataclass(frozen=True, eq=False)
class SvmModel:
    support_vectors: np.ndarray
    dual_coefs: np.ndarray
    bias: float
    gamma: float
    c: float
    scale_id: Optional[ScaleId] = None
    n: Optional[int] = None
    # training rows of the support vectors; not serialized
    support_indices: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        sv = np.atleast_2d(np.asarray(self.support_vectors, dtype=np.float64))
        coefs = np.asarray(self.dual_coefs, dtype=np.float64).ravel()
        if coefs.shape[0] < 1 or coefs.shape[0] != sv.shape[0]:
            raise InvalidDataError(f"{sv.shape[0]} support vectors but {coefs.shape[0]} coefficients")
        if not (self.gamma > 0 and self.c > 0):
            raise InvalidDataError(f"gamma and C must be positive, got gamma={self.gamma}, C={self.c}")
        if np.any(np.abs(coefs) > self.c * (1 + 1e-12)):
            raise InvalidDataError("Dual coefficient exceeds the box constraint C")
        if abs(coefs.sum()) > 1e-6:
            raise InvalidDataError(f"Dual coefficients sum to {coefs.sum():.3g}, expected 0")
        if self.support_indices is not None:
            indices = np.asarray(self.support_indices, dtype=np.int64).ravel()
            if indices.shape[0] != coefs.shape[0]:
                raise InvalidDataError(f"{indices.shape[0]} support indices for {coefs.shape[0]} support vectors")
            object.__setattr__(self, "support_indices", indices)
        sv.flags.writeable = False
        coefs.flags.writeable = False
        object.__setattr__(self, "support_vectors", sv)
        object.__setattr__(self, "dual_coefs", coefs)
        object.__setattr__(self, "bias", float(self.bias))
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "c", float(self.c))

    @property
    def dimension(self) -> int:
        return self.support_vectors.shape[1]

    @property
    def label_map(self) -> Dict[int, str]:
        return LABEL_MAP

    def dual_objective(self) -> float:
        """sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij over the support vectors"""
        K = rbf_gram(self.support_vectors, self.support_vectors, self.gamma)
        return float(np.abs(self.dual_coefs).sum() - 0.5 * self.dual_coefs @ K @ self.dual_coefs)

    def __eq__(self, other):
        if not isinstance(other, SvmModel):
            return NotImplemented
        return (np.array_equal(self.support_vectors, other.support_vectors)
                and np.array_equal(self.dual_coefs, other.dual_coefs)
                and self.bias == other.bias and self.gamma == other.gamma and self.c == other.c
                and self.scale_id == other.scale_id and self.n == other.n)

    __hash__ = None


@dataclass
class SmoResult:
    alpha: np.ndarray
    bias: float
    iterations: int
    gap: float
    objective: float


def _bias(alpha: np.ndarray, y: np.ndarray, G: np.ndarray, c: float) -> float:
    yG = y * G
    at_upper = alpha >= c
    at_lower = alpha <= 0
    free = ~(at_upper | at_lower)
    if free.any():
        rho = float(yG[free].mean())
    else:
        ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
        lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
        ub = yG[ub_mask].min() if ub_mask.any() else None
        lb = yG[lb_mask].max() if lb_mask.any() else None
        if ub is None:
            rho = float(lb)
        elif lb is None:
            rho = float(ub)
        else:
            rho = float((ub + lb) / 2)
    return -rho


def solve_smo(kernel_matrix: np.ndarray, labels, c: float, tol: float = DEFAULT_TOL,
              max_iter: int = DEFAULT_MAX_ITER) -> SmoResult:
    """Maximize sum(a) - 1/2 a'Qa subject to 0 <= a <= C and y'a = 0.

    Raises TrainingError carrying the best-so-far state when max_iter pair
    updates do not bring the violation gap under tol.
    """
    K = np.asarray(kernel_matrix, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64).ravel()
    m = y.shape[0]
    if K.shape != (m, m):
        raise InvalidDataError(f"Kernel matrix shape {K.shape} does not match {m} labels")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise InvalidDataError("Training data must contain both classes")
    if not (c > 0 and tol > 0):
        raise InvalidDataError(f"C and tol must be positive, got C={c}, tol={tol}")

    alpha = np.zeros(m)
    G = -np.ones(m)
    diag = np.diag(K).copy()
    positive = y > 0
    iterations = 0

    while True:
        minus_yG = -y * G
        up = np.where(positive, alpha < c, alpha > 0)
        low = np.where(positive, alpha > 0, alpha < c)

        up_vals = np.where(up, minus_yG, -np.inf)
        i = int(np.argmax(up_vals))
        g_max = up_vals[i]
        g_min = np.where(low, minus_yG, np.inf).min()
        gap = float(g_max - g_min)
        if gap < tol:
            break

        if iterations >= max_iter:
            objective = float(alpha.sum() - 0.5 * alpha @ (G + 1))
            raise TrainingError(
                f"SMO did not converge in {max_iter} pair updates (gap {gap:.3g} > tol {tol})",
                diagnostics={
                    "iterations": iterations,
                    "gap": gap,
                    "objective": objective,
                    "bias": _bias(alpha, y, G, c),
                    "alpha": alpha.copy(),
                },
            )

        grad_diff = g_max - minus_yG
        quad = diag[i] + diag - 2 * K[i]
        quad = np.where(quad > 0, quad, TAU)
        score = np.where(low & (grad_diff > 0), -(grad_diff ** 2) / quad, np.inf)
        j = int(np.argmin(score))

        ai, aj = alpha[i], alpha[j]
        quad_coef = diag[i] + diag[j] - 2 * K[i, j]
        if quad_coef <= 0:
            quad_coef = TAU

        if y[i] != y[j]:
            delta = (-G[i] - G[j]) / quad_coef
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > c:
                    ai, aj = c, c - diff
            elif aj > c:
                aj, ai = c, c + diff
        else:
            delta = (G[i] - G[j]) / quad_coef
            total = ai + aj
            ai -= delta
            aj += delta
            if total > c:
                if ai > c:
                    ai, aj = c, total - c
            elif aj < 0:
                aj, ai = 0.0, total
            if total > c:
                if aj > c:
                    aj, ai = c, total - c
            elif ai < 0:
                ai, aj = 0.0, total

        d_ai = ai - alpha[i]
        d_aj = aj - alpha[j]
        alpha[i], alpha[j] = ai, aj
        G += y * (y[i] * d_ai * K[:, i] + y[j] * d_aj * K[:, j])
        iterations += 1

    objective = float(alpha.sum() - 0.5 * alpha @ (G + 1))
    return SmoResult(alpha=alpha, bias=_bias(alpha, y, G, c), iterations=iterations,
                     gap=gap, objective=objective)


def model_from_solution(data: TrainSet, result: SmoResult, c: float, gamma: float,
                        sv_threshold: float = DEFAULT_SV_THRESHOLD) -> SvmModel:
    """Support vectors are the rows with alpha > sv_threshold.

    When dropping the tiny alphas would leave the coefficients off the
    y'a = 0 constraint by more than 1e-6, every nonzero alpha is kept.
    """
    keep = result.alpha > sv_threshold
    if not keep.any():
        raise TrainingError("Solver returned no support vectors",
                            diagnostics={"iterations": result.iterations, "gap": result.gap})
    coefs = result.alpha * data.labels
    if abs(coefs[keep].sum()) > 1e-6:
        logger.debug(f"Pruning at {sv_threshold:g} breaks the equality constraint; keeping all nonzero alphas")
        keep = result.alpha > 0
    indices = np.flatnonzero(keep)
    return SvmModel(
        support_vectors=data.features[indices],
        dual_coefs=coefs[indices],
        bias=result.bias,
        gamma=gamma,
        c=c,
        scale_id=data.scale_id,
        n=data.n,
        support_indices=indices,
    )


@traced("svm.train_smo")
def train_smo(data: TrainSet, c: float, gamma: float, tol: float = DEFAULT_TOL,
              max_iter: int = DEFAULT_MAX_ITER,
              sv_threshold: float = DEFAULT_SV_THRESHOLD) -> SvmModel:
    K = rbf_gram(data.features, data.features, gamma)
    result = solve_smo(K, data.labels, c, tol=tol, max_iter=max_iter)
    get_metrics().record_smo_iterations(result.iterations)
    logger.debug(f"SMO C={c:g} gamma={gamma:g}: {result.iterations} updates, gap {result.gap:.2e}")
    return model_from_solution(data, result, c, gamma, sv_threshold)


def decision_function(model: SvmModel, X) -> np.ndarray:
    """f(x) = sum_i coef_i K(sv_i, x) + b for every row of X"""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.dimension:
        raise InvalidDataError(f"Feature dimension {X.shape[1]} does not match model dimension {model.dimension}")
    return rbf_gram(X, model.support_vectors, model.gamma) @ model.dual_coefs + model.bias


def labels_from_decisions(values: np.ndarray) -> np.ndarray:
    """sign(f), with f == 0 mapped to bona fide"""
    return np.where(np.asarray(values) > 0, ATTACK, BONAFIDE)


def predict(model: SvmModel, x) -> Tuple[int, float]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidDataError("predict expects one feature vector")
    value = float(decision_function(model, x[None, :])[0])
    return (ATTACK if value > 0 else BONAFIDE), value


def training_alphas(model: SvmModel, data: TrainSet) -> np.ndarray:
    """alpha_i for every training row (0 for rows that are not support vectors).

    Uses the training row indices recorded by the solver. Models read back
    from disk carry none; their support vectors are matched by value, each
    to the first training row not already claimed.
    """
    alphas = np.zeros(len(data))
    if model.support_indices is not None:
        alphas[model.support_indices] = np.abs(model.dual_coefs)
        return alphas
    claimed = np.zeros(len(data), dtype=bool)
    for sv, coef in zip(model.support_vectors, model.dual_coefs):
        matches = np.flatnonzero(np.all(data.features == sv, axis=1) & ~claimed)
        if matches.size:
            alphas[matches[0]] = abs(coef)
            claimed[matches[0]] = True
    return alphas


def kkt_violations(model: SvmModel, data: TrainSet, tol: float = DEFAULT_TOL) -> List[int]:
    """Indices of training rows whose margin y f(x) breaks the KKT condition for its alpha"""
    alphas = training_alphas(model, data)
    margins = data.labels * decision_function(model, data.features)
    at_upper = alphas >= model.c * (1 - 1e-12)
    at_zero = alphas == 0
    free = ~(at_upper | at_zero)
    bad = ((at_zero & (margins < 1 - tol))
           | (at_upper & (margins > 1 + tol))
           | (free & (np.abs(margins - 1) > tol)))
    return [int(i) for i in np.flatnonzero(bad)]
