import numpy as np
from scipy.spatial.distance import cdist

from src.errors import InvalidDataError


def rbf_kernel(x, z, gamma: float) -> float:
    """exp(-gamma * ||x - z||^2)"""
    x = np.asarray(x, dtype=np.float64).ravel()
    z = np.asarray(z, dtype=np.float64).ravel()
    if x.shape != z.shape:
        raise InvalidDataError(f"Dimension mismatch: {x.shape[0]} vs {z.shape[0]}")
    if not gamma > 0:
        raise InvalidDataError(f"gamma must be positive, got {gamma}")
    diff = x - z
    return float(np.exp(-gamma * np.dot(diff, diff)))


def rbf_gram(X, Z, gamma: float) -> np.ndarray:
    """Kernel matrix K[i, j] = rbf_kernel(X[i], Z[j])"""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    if X.shape[1] != Z.shape[1]:
        raise InvalidDataError(f"Dimension mismatch: {X.shape[1]} vs {Z.shape[1]}")
    if not gamma > 0:
        raise InvalidDataError(f"gamma must be positive, got {gamma}")
    return np.exp(-gamma * cdist(X, Z, "sqeuclidean"))
