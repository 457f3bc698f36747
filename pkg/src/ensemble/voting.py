from dataclasses import dataclass
from typing import Sequence, Tuple
import logging

import numpy as np

from src.errors import InvalidDataError
from src.svm import ATTACK, BONAFIDE, SvmModel

logger = logging.getLogger(__name__)

MAX_MEMBERS = 16


class TieBreaker:
    """Seeded coin for exact ties; draw k is fixed by (seed, k)"""

    def __init__(self, seed: int):
        self.seed = seed
        self._rng = np.random.default_rng(seed)
        self.draws = 0

    def draw(self) -> int:
        self.draws += 1
        return ATTACK if self._rng.integers(0, 2) == 1 else BONAFIDE


def vote(predictions: Sequence[int], tie_rng: TieBreaker) -> int:
    """Strict majority of +1/-1 predictions; exact ties go to tie_rng"""
    predictions = np.asarray(predictions)
    if predictions.size == 0:
        raise InvalidDataError("Cannot vote on an empty prediction list")
    attack_votes = int(np.count_nonzero(predictions == ATTACK))
    bonafide_votes = predictions.size - attack_votes
    if attack_votes > bonafide_votes:
        return ATTACK
    if bonafide_votes > attack_votes:
        return BONAFIDE
    return tie_rng.draw()


@dataclass(frozen=True)
class Ensemble:
    members: Tuple[SvmModel, ...]
    tie_seed: int = 0

    def __post_init__(self):
        members = tuple(self.members)
        if not 1 <= len(members) <= MAX_MEMBERS:
            raise InvalidDataError(f"Ensemble needs 1..{MAX_MEMBERS} members, got {len(members)}")
        scale_ids = [m.scale_id for m in members]
        if None in scale_ids:
            raise InvalidDataError("Every ensemble member needs a scale id")
        if len(set(scale_ids)) != len(scale_ids):
            raise InvalidDataError(f"Duplicate member scales {[str(s) for s in scale_ids]}")
        object.__setattr__(self, "members", members)

    @property
    def scale_ids(self):
        return [m.scale_id for m in self.members]

    def __len__(self) -> int:
        return len(self.members)
