from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence
import logging

import numpy as np

from src.bsif import ScaleId
from src.errors import InvalidDataError
from src.svm import ATTACK, BONAFIDE, TrainSet

logger = logging.getLogger(__name__)


@dataclass
class LabeledFeatureSet:
    """Images with labels, optional group/subject tags and one feature matrix per scale.

    Row r of every matrix belongs to names[r].
    """
    names: List[str]
    labels: np.ndarray
    features: Dict[ScaleId, np.ndarray]
    groups: List[Optional[str]] = field(default_factory=list)
    subjects: List[Optional[str]] = field(default_factory=list)
    n: Optional[int] = None

    def __post_init__(self):
        m = len(self.names)
        self.labels = np.asarray(self.labels, dtype=np.int64).ravel()
        if self.labels.shape[0] != m:
            raise InvalidDataError(f"{m} names but {self.labels.shape[0]} labels")
        if not np.all(np.isin(self.labels, (ATTACK, BONAFIDE))):
            raise InvalidDataError("Labels must be +1 (attack) or -1 (bona fide)")
        if len(set(self.names)) != m:
            raise InvalidDataError("Image names must be unique")
        self.groups = list(self.groups) or [None] * m
        self.subjects = list(self.subjects) or [None] * m
        if len(self.groups) != m or len(self.subjects) != m:
            raise InvalidDataError("Group and subject tags must cover every image")
        for scale_id, matrix in self.features.items():
            matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
            if m == 0:
                matrix = matrix.reshape(0, matrix.shape[-1])
            if matrix.shape[0] != m:
                raise InvalidDataError(f"Scale {scale_id}: {matrix.shape[0]} rows for {m} images")
            self.features[scale_id] = matrix

    def __len__(self) -> int:
        return len(self.names)

    @property
    def scales(self) -> List[ScaleId]:
        return sorted(self.features, key=ScaleId.extraction_key)

    def require_scales(self, scales: Iterable[ScaleId]):
        missing = [str(s) for s in scales if s not in self.features]
        if missing:
            raise InvalidDataError(f"No features for scale(s) {', '.join(missing)}")

    def subset(self, indices: Sequence[int]) -> "LabeledFeatureSet":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledFeatureSet(
            names=[self.names[i] for i in idx],
            labels=self.labels[idx],
            features={s: f[idx] for s, f in self.features.items()},
            groups=[self.groups[i] for i in idx],
            subjects=[self.subjects[i] for i in idx],
            n=self.n,
        )

    def train_set(self, scale_id: ScaleId) -> TrainSet:
        self.require_scales([scale_id])
        return TrainSet(self.features[scale_id], self.labels, scale_id=scale_id, n=self.n)
