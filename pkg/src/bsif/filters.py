"""
BSIF filter banks: validated containers, the text asset format, a seeded
synthesizer for tests and CI, and a converter for the published .mat sets.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Union
import logging

import numpy as np

from src.errors import FormatError, InvalidDataError

logger = logging.getLogger(__name__)

FILTER_SIZES = (3, 5, 7, 9, 11, 13, 15, 17)
BIT_DEPTHS = tuple(range(5, 13))
DEFAULT_BIT_DEPTH = 8
MEAN_TOLERANCE = 1e-9
SYNTHESIS_ATTEMPTS = 8


def is_valid_combination(s: int, n: int) -> bool:
    """60 (s, n) pairs; n in 9..12 is skipped for 3x3 filters"""
    return s in FILTER_SIZES and n in BIT_DEPTHS and not (s == 3 and n > 8)


def filter_file_name(s: int, n: int) -> str:
    return f"ICAtextureFilters_{s}x{s}_{n}bit.txt"


@dataclass(frozen=True, eq=False)
class FilterBank:
    """n zero-mean s x s filters; filter i contributes bit 2^i of the code"""
    s: int
    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        if not is_valid_combination(self.s, self.n):
            raise InvalidDataError(f"Unsupported filter combination s={self.s}, n={self.n}")
        coeffs = np.array(self.coeffs, dtype=np.float64)
        if coeffs.size != self.n * self.s * self.s:
            raise InvalidDataError(
                f"Expected {self.n * self.s * self.s} coefficients, got {coeffs.size}"
            )
        coeffs = coeffs.reshape(self.n, self.s, self.s)
        if not np.all(np.isfinite(coeffs)):
            raise InvalidDataError("Filter coefficients must be finite")
        for i, f in enumerate(coeffs):
            if not np.any(f):
                raise InvalidDataError(f"Filter {i + 1} is the zero vector")
            mean = f.mean()
            if abs(mean) > MEAN_TOLERANCE:
                raise InvalidDataError(f"Filter {i + 1} is not zero-mean (mean {mean:.3g})")
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)

    def __eq__(self, other):
        if not isinstance(other, FilterBank):
            return NotImplemented
        return self.s == other.s and self.n == other.n and np.array_equal(self.coeffs, other.coeffs)

    __hash__ = None


def load_filter_bank(path: Union[str, Path]) -> FilterBank:
    """Read '<n> <s>' followed by n*s*s reals, filter-major, rows within a filter"""
    path = Path(path)
    tokens = path.read_text().split()
    if len(tokens) < 2:
        raise FormatError(f"{path.name}: missing '<n> <s>' header")
    try:
        n, s = int(tokens[0]), int(tokens[1])
    except ValueError as e:
        raise FormatError(f"{path.name}: malformed header {tokens[:2]}") from e
    if not is_valid_combination(s, n):
        raise InvalidDataError(f"{path.name}: unsupported filter combination s={s}, n={n}")

    body = tokens[2:]
    if len(body) != n * s * s:
        raise FormatError(f"{path.name}: expected {n * s * s} coefficients, found {len(body)}")
    try:
        coeffs = np.array([float(t) for t in body], dtype=np.float64)
    except ValueError as e:
        raise FormatError(f"{path.name}: non-numeric coefficient ({e})") from e

    bank = FilterBank(s=s, n=n, coeffs=coeffs)
    logger.debug(f"Loaded filter bank {path.name}")
    return bank


def save_filter_bank(bank: FilterBank, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{bank.n} {bank.s}"]
    for f in bank.coeffs:
        lines.append(" ".join(repr(float(v)) for v in f.ravel()))
    path.write_text("\n".join(lines) + "\n")
    return path


def synthesize_filter_bank(s: int, n: int, seed: int) -> FilterBank:
    """Seeded stand-in for ICA-learned filters.

    Uniform draws are projected onto the zero-mean subspace and orthonormalized
    in order, so the bank is zero-mean and orthonormal by construction.
    """
    if not is_valid_combination(s, n):
        raise InvalidDataError(f"Unsupported filter combination s={s}, n={n}")

    rng = np.random.default_rng(seed)
    dim = s * s
    for attempt in range(SYNTHESIS_ATTEMPTS):
        draws = rng.uniform(-1.0, 1.0, size=(n, dim))
        draws -= draws.mean(axis=1, keepdims=True)
        basis = []
        degenerate = False
        for v in draws:
            for b in basis:
                v = v - (v @ b) * b
            norm = np.linalg.norm(v)
            if norm < 1e-8:
                degenerate = True
                break
            basis.append(v / norm)
        if not degenerate:
            return FilterBank(s=s, n=n, coeffs=np.array(basis))
        logger.warning(f"⚠️ Degenerate filter draw for s={s}, n={n} (attempt {attempt + 1}), redrawing")

    raise InvalidDataError(
        f"Could not synthesize an orthonormal {s}x{s} bank of {n} filters after {SYNTHESIS_ATTEMPTS} attempts"
    )


def convert_mat_filters(mat_path: Union[str, Path]) -> FilterBank:
    """Convert a published ICAtextureFilters .mat array (s x s x n) to a FilterBank.

    The reference code gives bit i to filter n-1-i, so filters are reversed to
    keep identical codes. Residual means are projected out.
    """
    from scipy.io import loadmat

    mat = loadmat(str(mat_path))
    filters = mat.get("ICAtextureFilters")
    if filters is None or filters.ndim != 3 or filters.shape[0] != filters.shape[1]:
        raise FormatError(f"{Path(mat_path).name}: no s x s x n 'ICAtextureFilters' array")
    s, n = filters.shape[0], filters.shape[2]
    coeffs = np.stack([filters[:, :, n - 1 - i] for i in range(n)]).astype(np.float64)
    means = coeffs.mean(axis=(1, 2), keepdims=True)
    logger.info(f"Converted {Path(mat_path).name}: s={s}, n={n}, max |mean| removed {np.abs(means).max():.3g}")
    return FilterBank(s=s, n=n, coeffs=coeffs - means)
