"""
BSIF code maps and histogram features.

Responses are circular correlations of the raw intensities with each filter
(no filter flip, wrap-around borders). Bit i of a pixel's code is set when
filter i responds above ZERO_RESPONSE_TOLERANCE.
"""

from dataclasses import dataclass
from typing import Iterable, List, Mapping, Optional, Union
import logging

import numpy as np
from scipy import ndimage

from src.errors import InvalidDataError
from src.imgio import GrayImage, downsample_half
from src.observability import traced

from .filters import FilterBank
from .scale import Resolution, ScaleId

logger = logging.getLogger(__name__)

# Responses of zero-mean filters on flat patches are zero up to rounding;
# anything this close to zero counts as zero.
ZERO_RESPONSE_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class CodeMap:
    width: int
    height: int
    n: int
    codes: np.ndarray
    scale_id: Optional[ScaleId] = None

    def __post_init__(self):
        codes = np.asarray(self.codes)
        if codes.shape != (self.height, self.width):
            raise InvalidDataError(f"Code array shape {codes.shape} does not match {self.width}x{self.height}")
        if codes.size and int(codes.max()) >= 2 ** self.n:
            raise InvalidDataError(f"Code {int(codes.max())} out of range for n={self.n}")
        codes.flags.writeable = False
        object.__setattr__(self, "codes", codes)

    def __eq__(self, other):
        if not isinstance(other, CodeMap):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.codes, other.codes)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """2^n histogram bins for one scale; L1-normalized unless raw counts were asked for"""
    bins: np.ndarray
    scale_id: Optional[ScaleId]
    n: int
    normalized: bool = True

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.float64)
        if bins.shape != (2 ** self.n,):
            raise InvalidDataError(f"Expected {2 ** self.n} bins, got shape {bins.shape}")
        if np.any(bins < 0):
            raise InvalidDataError("Histogram bins must be non-negative")
        if self.normalized and abs(bins.sum() - 1.0) > 1e-9:
            raise InvalidDataError(f"Normalized histogram sums to {bins.sum()}")
        bins.flags.writeable = False
        object.__setattr__(self, "bins", bins)

    def __eq__(self, other):
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return (self.scale_id == other.scale_id and self.n == other.n
                and self.normalized == other.normalized and np.array_equal(self.bins, other.bins))

    __hash__ = None


def filter_responses(img: GrayImage, bank: FilterBank) -> np.ndarray:
    """Stack of n response maps, shape (n, height, width)"""
    if img.width < bank.s or img.height < bank.s:
        raise InvalidDataError(
            f"Image {img.width}x{img.height} is smaller than the {bank.s}x{bank.s} filter"
        )
    pixels = img.data.astype(np.float64)
    return np.stack([ndimage.correlate(pixels, f, mode="wrap") for f in bank.coeffs])


def compute_code_map(img: GrayImage, bank: FilterBank,
                     resolution: Resolution = Resolution.FULL) -> CodeMap:
    """Bit i of each code is set where filter i responds above 1e-9.

    Responses in (0, 1e-9] are treated as zero, the same as a flat patch.
    """
    responses = filter_responses(img, bank)
    codes = np.zeros((img.height, img.width), dtype=np.uint16)
    for i, response in enumerate(responses):
        codes |= (response > ZERO_RESPONSE_TOLERANCE).astype(np.uint16) << i
    return CodeMap(width=img.width, height=img.height, n=bank.n, codes=codes,
                   scale_id=ScaleId(bank.s, resolution))


def histogram(code_map: CodeMap, normalize: bool = True) -> FeatureVector:
    counts = np.bincount(code_map.codes.ravel(), minlength=2 ** code_map.n).astype(np.float64)
    if normalize:
        counts /= code_map.width * code_map.height
    return FeatureVector(bins=counts, scale_id=code_map.scale_id, n=code_map.n, normalized=normalize)


def _ordered_banks(banks: Union[Mapping[int, FilterBank], Iterable[FilterBank]]) -> List[FilterBank]:
    if isinstance(banks, Mapping):
        banks = banks.values()
    ordered = sorted(banks, key=lambda b: b.s)
    sizes = [b.s for b in ordered]
    if not ordered:
        raise InvalidDataError("No filter banks configured")
    if len(set(sizes)) != len(sizes):
        raise InvalidDataError(f"Duplicate filter sizes {sizes}")
    return ordered


@traced("bsif.extract_all")
def extract_all(img: GrayImage, banks: Union[Mapping[int, FilterBank], Iterable[FilterBank]],
                n: int, raw_counts: bool = False) -> List[FeatureVector]:
    """One histogram per bank on the full image, then one per bank on the half-size copy.

    The default eight banks yield the 16 feature sets; half-resolution vectors
    carry effective sizes 2s.
    """
    ordered = _ordered_banks(banks)
    for bank in ordered:
        if bank.n != n:
            raise InvalidDataError(f"Filter bank {bank.s}x{bank.s} has n={bank.n}, expected {n}")

    half = downsample_half(img)
    features = []
    for resolution, source in ((Resolution.FULL, img), (Resolution.HALF, half)):
        for bank in ordered:
            code_map = compute_code_map(source, bank, resolution)
            features.append(histogram(code_map, normalize=not raw_counts))
    return features
