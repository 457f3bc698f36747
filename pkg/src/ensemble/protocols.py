"""
Leave-one-group-out evaluation: train on the attack images of every group
but one (plus bona fide images), test on the held-out group plus unseen bona
fide images. Groups are normally lens brands.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence
import logging

import numpy as np

from src.bsif import ScaleId
from src.errors import InvalidDataError
from src.observability import traced
from src.svm import ATTACK, BONAFIDE, SvmModel

from .dataset import LabeledFeatureSet
from .evaluation import EvalReport, evaluate, evaluate_model
from .stats import BoxStats, scale_stats
from .training import TuningOptions, train_scale_models
from .voting import Ensemble

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LogoOptions:
    tuning: TuningOptions = field(default_factory=TuningOptions)
    scales: Optional[Sequence[ScaleId]] = None
    groups: Optional[Sequence[str]] = None
    attack_train_per_group: Optional[int] = None
    attack_test: Optional[int] = None
    bonafide_train: Optional[int] = None
    bonafide_test: Optional[int] = None
    seed: int = 0
    tie_seed: int = 0
    workers: int = 1


@dataclass
class LogoPartition:
    group: str
    train_idx: np.ndarray
    test_idx: np.ndarray


@dataclass
class GroupResult:
    group: str
    partition: LogoPartition
    models: Dict[ScaleId, SvmModel]
    scale_reports: Dict[ScaleId, EvalReport]
    ensemble_report: EvalReport

    @property
    def scale_ccr(self) -> Dict[str, float]:
        return {s.label: r.ccr for s, r in self.scale_reports.items()}


@dataclass
class LogoResult:
    groups: List[GroupResult]
    scale_stats: Dict[str, BoxStats]
    group_stats: Dict[str, BoxStats]

    @property
    def models_trained(self) -> int:
        return sum(len(g.models) for g in self.groups)

    @property
    def mean_model_ccr(self) -> float:
        values = [ccr for g in self.groups for ccr in g.scale_ccr.values()]
        return float(np.mean(values)) if values else 0.0


def _sample(rng: np.random.Generator, indices: np.ndarray, count: Optional[int], what: str) -> np.ndarray:
    if count is None or count >= len(indices):
        if count is not None and count > len(indices):
            logger.warning(f"⚠️ Requested {count} {what} but only {len(indices)} available; using all")
        return np.sort(indices)
    return np.sort(rng.choice(indices, size=count, replace=False))


def _split_bonafide(rng: np.random.Generator, dataset: LabeledFeatureSet, pool: np.ndarray,
                    test_count: int):
    """(test, train pool) with no subject on both sides when every image has a subject tag"""
    subjects = [dataset.subjects[i] for i in pool]
    if all(s is not None for s in subjects):
        unique = sorted(set(subjects))
        chosen, taken = set(), 0
        for subject in rng.permutation(unique):
            if taken >= test_count:
                break
            chosen.add(subject)
            taken += subjects.count(subject)
        in_test = np.array([s in chosen for s in subjects], dtype=bool)
        test = np.sort(pool[in_test])[:test_count]
        return test, np.sort(pool[~in_test])
    shuffled = rng.permutation(pool)
    return np.sort(shuffled[:test_count]), np.sort(shuffled[test_count:])


def logo_partitions(dataset: LabeledFeatureSet, options: LogoOptions) -> List[LogoPartition]:
    attack_idx = np.flatnonzero(dataset.labels == ATTACK)
    bonafide_idx = np.flatnonzero(dataset.labels == BONAFIDE)
    untagged = [dataset.names[i] for i in attack_idx if dataset.groups[i] is None]
    if untagged:
        raise InvalidDataError(f"Attack images without a group tag: {', '.join(untagged[:10])}")

    tags = np.array([dataset.groups[i] for i in attack_idx], dtype=object)
    groups = list(options.groups) if options.groups else sorted(set(tags.tolist()))
    for group in groups:
        if not np.any(tags == group):
            raise InvalidDataError(f"Group {group!r} has no attack images")
    if len(groups) < 2:
        raise InvalidDataError(f"Leave-one-group-out needs at least 2 groups, found {groups}")

    partitions = []
    for gi, group in enumerate(groups):
        rng = np.random.default_rng([options.seed, gi])
        test_attack = _sample(rng, attack_idx[tags == group], options.attack_test, f"{group} test attacks")
        train_attack = np.concatenate([
            _sample(rng, attack_idx[tags == other], options.attack_train_per_group, f"{other} training attacks")
            for other in groups if other != group
        ])

        test_count = options.bonafide_test if options.bonafide_test is not None else len(test_attack)
        if test_count >= len(bonafide_idx):
            raise InvalidDataError(
                f"Bona fide pool of {len(bonafide_idx)} is too small for {test_count} test images plus training"
            )
        test_bonafide, train_pool = _split_bonafide(rng, dataset, bonafide_idx, test_count)
        if len(train_pool) == 0:
            raise InvalidDataError("No bona fide images left for training")
        train_bonafide = _sample(rng, train_pool, options.bonafide_train, "training bona fide images")

        partitions.append(LogoPartition(
            group=group,
            train_idx=np.sort(np.concatenate([train_attack, train_bonafide])),
            test_idx=np.sort(np.concatenate([test_attack, test_bonafide])),
        ))
        logger.info(
            f"Group {group}: train {len(train_attack)} attack + {len(train_bonafide)} bona fide, "
            f"test {len(test_attack)} attack + {len(test_bonafide)} bona fide"
        )
    return partitions


@traced("ensemble.leave_one_group_out")
def leave_one_group_out(dataset: LabeledFeatureSet, options: LogoOptions) -> LogoResult:
    scales = list(options.scales) if options.scales else dataset.scales
    dataset.require_scales(scales)

    results = []
    for partition in logo_partitions(dataset, options):
        train = dataset.subset(partition.train_idx)
        test = dataset.subset(partition.test_idx)
        trained = train_scale_models(train, scales, options.tuning, workers=options.workers)
        models = {s: model for s, (model, _) in trained.items()}
        scale_reports = {s: evaluate_model(m, test) for s, m in models.items()}
        ensemble = Ensemble(tuple(models[s] for s in scales), tie_seed=options.tie_seed)
        results.append(GroupResult(
            group=partition.group,
            partition=partition,
            models=models,
            scale_reports=scale_reports,
            ensemble_report=evaluate(ensemble, test),
        ))
        logger.info(f"✅ Held out {partition.group}: ensemble CCR {results[-1].ensemble_report.ccr:.4f}")

    per_scale = {s.label: [g.scale_reports[s].ccr for g in results] for s in scales}
    per_group = {g.group: [r.ccr for r in g.scale_reports.values()] for g in results}
    result = LogoResult(groups=results, scale_stats=scale_stats(per_scale), group_stats=scale_stats(per_group))
    logger.info(
        f"Leave-one-group-out: {result.models_trained} models, mean per-model CCR {result.mean_model_ccr:.4f}"
    )
    return result
