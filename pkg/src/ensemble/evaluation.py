"""
Ensemble decisions and PAD metrics.

Attack is the positive class: APCER counts attacks accepted as bona fide,
BPCER counts bona fide presentations rejected as attacks.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union
import logging

import numpy as np

from src.errors import InvalidDataError
from src.observability import get_metrics, traced
from src.svm import ATTACK, BONAFIDE, SvmModel, decision_function, labels_from_decisions

from .dataset import LabeledFeatureSet
from .voting import Ensemble, TieBreaker, vote

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Confusion:
    tp: int  # attack classified as attack
    fn: int  # attack classified as bona fide
    fp: int  # bona fide classified as attack
    tn: int  # bona fide classified as bona fide

    @classmethod
    def from_labels(cls, truth, decisions) -> "Confusion":
        truth = np.asarray(truth)
        decisions = np.asarray(decisions)
        attack = truth == ATTACK
        return cls(
            tp=int(np.count_nonzero(attack & (decisions == ATTACK))),
            fn=int(np.count_nonzero(attack & (decisions == BONAFIDE))),
            fp=int(np.count_nonzero(~attack & (decisions == ATTACK))),
            tn=int(np.count_nonzero(~attack & (decisions == BONAFIDE))),
        )

    @property
    def attack_total(self) -> int:
        return self.tp + self.fn

    @property
    def bonafide_total(self) -> int:
        return self.fp + self.tn

    @property
    def total(self) -> int:
        return self.attack_total + self.bonafide_total


@dataclass
class EvalReport:
    ccr: float
    apcer: float
    bpcer: float
    confusion: Confusion
    per_model_ccr: Dict[str, float] = field(default_factory=dict)
    tie_draws: int = 0
    tie_seed: Optional[int] = None
    names: List[str] = field(default_factory=list)
    labels: Optional[np.ndarray] = None
    decisions: Optional[np.ndarray] = None
    attack_votes: Optional[np.ndarray] = None
    members: List[str] = field(default_factory=list)

    @classmethod
    def from_decisions(cls, truth, decisions, **extra) -> "EvalReport":
        confusion = Confusion.from_labels(truth, decisions)
        if confusion.total == 0:
            raise InvalidDataError("Cannot evaluate on an empty test set")
        # Rates over an absent class are reported as 0
        apcer = confusion.fn / confusion.attack_total if confusion.attack_total else 0.0
        bpcer = confusion.fp / confusion.bonafide_total if confusion.bonafide_total else 0.0
        return cls(
            ccr=(confusion.tp + confusion.tn) / confusion.total,
            apcer=apcer,
            bpcer=bpcer,
            confusion=confusion,
            labels=np.asarray(truth),
            decisions=np.asarray(decisions),
            **extra,
        )


@dataclass(frozen=True)
class RankedModel:
    model: SvmModel
    ccr: float

    @property
    def scale_id(self):
        return self.model.scale_id


def _member_predictions(model: SvmModel, test: LabeledFeatureSet) -> np.ndarray:
    test.require_scales([model.scale_id])
    features = test.features[model.scale_id]
    broken = ~np.all(np.isfinite(features), axis=1)
    if broken.any():
        offenders = [test.names[i] for i in np.flatnonzero(broken)]
        raise InvalidDataError(f"Missing feature rows for scale {model.scale_id}: {', '.join(offenders)}")
    return labels_from_decisions(decision_function(model, features))


def evaluate_model(model: SvmModel, test: LabeledFeatureSet) -> EvalReport:
    predictions = _member_predictions(model, test)
    label = model.scale_id.label
    report = EvalReport.from_decisions(test.labels, predictions, names=list(test.names), members=[label])
    report.per_model_ccr = {label: report.ccr}
    return report


@traced("ensemble.evaluate")
def evaluate(ensemble: Ensemble, test: LabeledFeatureSet) -> EvalReport:
    """Majority vote of every member on its own scale, one decision per image"""
    test.require_scales(ensemble.scale_ids)
    predictions = np.stack([_member_predictions(m, test) for m in ensemble.members])

    tie_rng = TieBreaker(ensemble.tie_seed)
    decisions = np.array([vote(predictions[:, r], tie_rng) for r in range(len(test))], dtype=np.int64)

    per_model = {
        m.scale_id.label: float(np.mean(predictions[k] == test.labels)) if len(test) else 0.0
        for k, m in enumerate(ensemble.members)
    }
    report = EvalReport.from_decisions(
        test.labels, decisions,
        per_model_ccr=per_model,
        tie_draws=tie_rng.draws,
        tie_seed=ensemble.tie_seed,
        names=list(test.names),
        attack_votes=np.count_nonzero(predictions == ATTACK, axis=0),
        members=[m.scale_id.label for m in ensemble.members],
    )
    get_metrics().record_tie_draws(tie_rng.draws)
    logger.info(
        f"Ensemble of {len(ensemble)}: CCR {report.ccr:.4f}, APCER {report.apcer:.4f}, "
        f"BPCER {report.bpcer:.4f}, tie draws {tie_rng.draws}"
    )
    return report


def rank_models(models: Sequence[SvmModel], validation: LabeledFeatureSet) -> List[RankedModel]:
    """Best validation CCR first; ties by smaller filter, then full resolution first"""
    validation.require_scales([m.scale_id for m in models])
    ranked = [RankedModel(model=m, ccr=evaluate_model(m, validation).ccr) for m in models]
    ranked.sort(key=lambda r: (-r.ccr, r.model.scale_id.ranking_key()))
    return ranked


def ensemble_size_sweep(ranked: Sequence[Union[RankedModel, SvmModel]], test: LabeledFeatureSet,
                        tie_seed: int = 0) -> Dict[int, float]:
    """CCR of the best-first ensembles of size 1..len(ranked), each evaluated afresh"""
    models = [r.model if isinstance(r, RankedModel) else r for r in ranked]
    sweep = {}
    for size in range(1, len(models) + 1):
        sweep[size] = evaluate(Ensemble(tuple(models[:size]), tie_seed=tie_seed), test).ccr
    return sweep
