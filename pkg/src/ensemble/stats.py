from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Sequence
import numpy as np

from src.errors import InvalidDataError


@dataclass(frozen=True)
class BoxStats:
    median: float
    q1: float
    q3: float
    iqr: float
    whisker_low: float
    whisker_high: float
    outliers: List[float] = field(default_factory=list)
    count: int = 0


def boxplot_stats(values: Sequence[float]) -> BoxStats:
    """Quartiles by linear interpolation between order statistics (position p*(n-1));
    whiskers at Q1 - 1.5 IQR and Q3 + 1.5 IQR, anything beyond is an outlier."""
    data = np.asarray(values, dtype=np.float64).ravel()
    if data.size == 0:
        raise InvalidDataError("Box plot statistics need at least one value")
    q1, median, q3 = np.percentile(data, [25, 50, 75], method="linear")
    iqr = q3 - q1
    low, high = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    outliers = sorted(float(v) for v in data if v < low or v > high)
    return BoxStats(median=float(median), q1=float(q1), q3=float(q3), iqr=float(iqr),
                    whisker_low=float(low), whisker_high=float(high), outliers=outliers,
                    count=int(data.size))


def scale_stats(runs: Mapping[str, Sequence[float]]) -> Dict[str, BoxStats]:
    """One box per key (scale label or group), keys kept in input order"""
    return {key: boxplot_stats(values) for key, values in runs.items()}
