"""
Pipeline manager: the extraction, training and testing modes plus the two
evaluation protocols. Each stage returns a summary whose `summary_line()` is
a single key=value record for CI logs.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple
import logging
import time

import numpy as np

from src.bsif import FilterBank, ScaleId, extract_all, filter_file_name, load_filter_bank
from src.ensemble import (
    Ensemble,
    EvalReport,
    LabeledFeatureSet,
    LogoOptions,
    ensemble_size_sweep,
    evaluate,
    evaluate_model,
    leave_one_group_out,
    rank_models,
    train_scale_models,
)
from src.errors import InvalidDataError, PadError
from src.imgio import load_image
from src.observability import SpanHelper, get_metrics, traced
from src.svm import ATTACK, BONAFIDE, SvmModel

from .config import Config
from .manifest import Manifest, load_manifest, merge_manifests, split_manifest, write_manifest
from .store import (
    feature_file_name,
    load_features,
    model_file_name,
    read_model,
    read_ranking,
    tuning_file_name,
    write_box_stats,
    write_decisions,
    write_eval_report,
    write_feature_csv,
    write_model,
    write_model_table,
    write_ranking,
    write_sweep,
    write_table,
    write_tuning_report,
)

logger = logging.getLogger(__name__)

RANKING_FILE = "ranking.csv"


def _fields(**values) -> str:
    return " ".join(f"{key}={value}" for key, value in values.items())


def _ratio(value: Optional[float]) -> str:
    return "nan" if value is None else f"{value:.6f}"


@dataclass
class ExtractionSummary:
    images: int
    extracted: int
    failures: List[Tuple[str, str]]
    files: List[Path]
    n: int
    seeds: str
    exit_code: int = 0

    def summary_line(self) -> str:
        return _fields(stage="extract", images=self.images, extracted=self.extracted,
                       failed=len(self.failures), files=len(self.files), n=self.n, seeds=self.seeds)

    def details(self) -> List[str]:
        return [f"failed {name}: {message}" for name, message in self.failures]


@dataclass
class TrainingSummary:
    images: int
    models: Dict[ScaleId, SvmModel]
    cv_ccr: Dict[ScaleId, float]
    seeds: str
    exit_code: int = 0

    def summary_line(self) -> str:
        mean = float(np.mean(list(self.cv_ccr.values()))) if self.cv_ccr else None
        return _fields(stage="train", images=self.images, models=len(self.models),
                       mean_cv_ccr=_ratio(mean), seeds=self.seeds)

    def details(self) -> List[str]:
        return [f"{s.label}: C={m.c:g} gamma={m.gamma:g} support_vectors={len(m.dual_coefs)} "
                f"cv_ccr={self.cv_ccr[s]:.4f}" for s, m in self.models.items()]


@dataclass
class TestingSummary:
    images: int
    voting: bool
    seeds: str
    ensemble_report: Optional[EvalReport] = None
    model_reports: Dict[ScaleId, EvalReport] = field(default_factory=dict)
    exit_code: int = 0

    def summary_line(self) -> str:
        if self.voting:
            r = self.ensemble_report
            return _fields(stage="test", voting="on", images=self.images, members=len(r.members),
                           ccr=_ratio(r.ccr), apcer=_ratio(r.apcer), bpcer=_ratio(r.bpcer),
                           tie_draws=r.tie_draws, seeds=self.seeds)
        best = max(self.model_reports.values(), key=lambda r: r.ccr, default=None)
        return _fields(stage="test", voting="off", images=self.images, models=len(self.model_reports),
                       best_ccr=_ratio(best.ccr if best else None), seeds=self.seeds)

    def details(self) -> List[str]:
        if self.voting:
            r = self.ensemble_report
            return [f"members: {' '.join(r.members)}",
                    f"tp={r.confusion.tp} fn={r.confusion.fn} fp={r.confusion.fp} tn={r.confusion.tn}"]
        return [f"{s.label:>10}  ccr={r.ccr:.4f}  apcer={r.apcer:.4f}  bpcer={r.bpcer:.4f}"
                for s, r in self.model_reports.items()]


@dataclass
class Protocol8020Summary:
    train_images: int
    validation_images: int
    ranking: List[Tuple[ScaleId, float]]
    sweep: Dict[int, float]
    sweep_set: str
    seeds: str
    exit_code: int = 0

    def summary_line(self) -> str:
        best_scale, best_ccr = self.ranking[0]
        best_size = max(self.sweep, key=lambda size: (self.sweep[size], -size))
        return _fields(stage="protocol-8020", train=self.train_images, validation=self.validation_images,
                       models=len(self.ranking), best_scale=best_scale.label, best_ccr=_ratio(best_ccr),
                       sweep_set=self.sweep_set, best_size=best_size,
                       best_size_ccr=_ratio(self.sweep[best_size]), seeds=self.seeds)

    def details(self) -> List[str]:
        lines = [f"rank {k}: {s.label} validation_ccr={ccr:.4f}" for k, (s, ccr) in enumerate(self.ranking, 1)]
        lines += [f"size {size}: ccr={ccr:.4f}" for size, ccr in self.sweep.items()]
        return lines


@dataclass
class LogoSummary:
    groups: List[str]
    models: int
    mean_model_ccr: float
    ensemble_ccr: Dict[str, float]
    seeds: str
    exit_code: int = 0

    def summary_line(self) -> str:
        return _fields(stage="protocol-logo", groups=len(self.groups), models=self.models,
                       mean_model_ccr=_ratio(self.mean_model_ccr), seeds=self.seeds)

    def details(self) -> List[str]:
        return [f"held out {g}: ensemble_ccr={ccr:.4f}" for g, ccr in self.ensemble_ccr.items()]


# ============================================================================
# FEATURE EXTRACTION
# ============================================================================

def load_filter_banks(cfg: Config) -> Dict[int, FilterBank]:
    """Every configured bank; a missing or broken asset stops the run"""
    cfg.require_paths("filter_dir")
    n = cfg.bsif.bit_depth
    banks = {}
    for s in cfg.bsif.scales:
        path = cfg.paths.filter_dir / filter_file_name(s, n)
        if not path.is_file():
            raise FileNotFoundError(f"Filter asset missing for {s}x{s}, n={n}: {path}")
        bank = load_filter_bank(path)
        if bank.s != s or bank.n != n:
            raise InvalidDataError(f"{path.name} holds a {bank.s}x{bank.s} n={bank.n} bank")
        banks[s] = bank
    return banks


def _extract_one(path: Path, banks: Dict[int, FilterBank], n: int, raw_counts: bool):
    try:
        return [fv.bins for fv in extract_all(load_image(path), banks, n, raw_counts=raw_counts)], None
    except (OSError, PadError) as e:
        return None, f"{type(e).__name__}: {e}"


def _extraction_manifest(cfg: Config) -> Manifest:
    lists = [cfg.paths.training_list, cfg.paths.testing_list]
    return merge_manifests(*(load_manifest(p) for p in lists if p is not None))


@traced("pipeline.run_extraction")
def run_extraction(cfg: Config) -> ExtractionSummary:
    """Write one feature CSV per (scale, resolution) for every image of the manifests.

    Unreadable images are recorded and skipped (exit code 2); a missing filter
    asset is fatal.
    """
    cfg.require_paths("image_dir", "filter_dir", "feature_dir")
    started = time.perf_counter()
    n = cfg.bsif.bit_depth
    banks = load_filter_banks(cfg)
    manifest = _extraction_manifest(cfg)
    scales = cfg.scale_ids
    if not len(manifest):
        logger.warning("⚠️ Manifest is empty; writing feature files with headers only")

    paths = [cfg.paths.image_dir / name for name in manifest.filenames]
    workers = cfg.runtime.workers
    args = (paths, [banks] * len(paths), [n] * len(paths), [cfg.bsif.raw_counts] * len(paths))
    if workers > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_extract_one, *args, chunksize=max(1, len(paths) // (4 * workers))))
    else:
        outcomes = [_extract_one(*a) for a in zip(*args)]

    rows: Dict[ScaleId, List] = {s: [] for s in scales}
    failures = []
    metrics = get_metrics()
    for name, (vectors, error) in zip(manifest.filenames, outcomes):
        if error is not None:
            logger.warning(f"⚠️ Skipping {name}: {error}")
            metrics.record_extraction_failure({"reason": error.split(":", 1)[0]})
            SpanHelper.add_event("extraction_failed", {"image": name, "error": error})
            failures.append((name, error))
            continue
        for scale_id, bins in zip(scales, vectors):
            rows[scale_id].append((name, bins))
    extracted = len(manifest) - len(failures)
    metrics.record_images(extracted)

    files = [
        write_feature_csv(cfg.paths.feature_dir / feature_file_name(s, n), s, n, rows[s],
                          normalized=not cfg.bsif.raw_counts)
        for s in scales
    ]
    metrics.record_duration(time.perf_counter() - started, {"stage": "extract"})
    if failures:
        logger.error(f"❌ {len(failures)} of {len(manifest)} images failed extraction")
    else:
        logger.info(f"✅ Extracted {len(scales)} feature sets for {extracted} images")
    return ExtractionSummary(images=len(manifest), extracted=extracted, failures=failures, files=files,
                             n=n, seeds=cfg.seeds_summary(), exit_code=2 if failures else 0)


# ============================================================================
# TRAINING
# ============================================================================

def load_dataset(cfg: Config, manifest: Manifest, scales: Sequence[ScaleId]) -> LabeledFeatureSet:
    cfg.require_paths("feature_dir")
    features = load_features(cfg.paths.feature_dir, scales, cfg.bsif.bit_depth, manifest.filenames)
    return LabeledFeatureSet(
        names=manifest.filenames,
        labels=manifest.labels,
        features=features,
        groups=[e.group for e in manifest.entries],
        subjects=[e.subject for e in manifest.entries],
        n=cfg.bsif.bit_depth,
    )


def _require_both_classes(dataset: LabeledFeatureSet, what: str):
    present = set(dataset.labels.tolist())
    if present != {ATTACK, BONAFIDE}:
        raise InvalidDataError(f"{what} holds a single class; both attack and bona fide images are needed")


def _train_and_save(cfg: Config, dataset: LabeledFeatureSet, model_dir: Path) -> Dict[ScaleId, Tuple]:
    _require_both_classes(dataset, "Training data")
    n = cfg.bsif.bit_depth
    trained = train_scale_models(dataset, cfg.scale_ids, cfg.tuning_options(), workers=cfg.runtime.workers)
    for scale_id, (model, report) in trained.items():
        write_model(model_dir / model_file_name(scale_id, n), model)
        write_tuning_report(model_dir / tuning_file_name(scale_id, n), report)
    return trained


@traced("pipeline.run_training")
def run_training(cfg: Config) -> TrainingSummary:
    cfg.require_paths("feature_dir", "model_dir", "training_list")
    started = time.perf_counter()
    manifest = load_manifest(cfg.paths.training_list)
    dataset = load_dataset(cfg, manifest, cfg.scale_ids)
    trained = _train_and_save(cfg, dataset, cfg.paths.model_dir)

    get_metrics().record_duration(time.perf_counter() - started, {"stage": "train"})
    logger.info(f"✅ Wrote {len(trained)} models to {cfg.paths.model_dir}")
    return TrainingSummary(
        images=len(dataset),
        models={s: model for s, (model, _) in trained.items()},
        cv_ccr={s: report.best_ccr for s, (_, report) in trained.items()},
        seeds=cfg.seeds_summary(),
    )


# ============================================================================
# TESTING
# ============================================================================

def resolve_members(cfg: Config) -> List[ScaleId]:
    """Explicit members win, then the stored ranking, then the configured scales in order"""
    size = cfg.ensemble.size
    if cfg.ensemble.members:
        return [ScaleId.parse(label) for label in cfg.ensemble.members]
    ranking_path = cfg.paths.model_dir / RANKING_FILE if cfg.paths.model_dir else None
    if ranking_path is not None and ranking_path.is_file():
        ranked = read_ranking(ranking_path)
        logger.info(f"Ensemble members taken from {ranking_path.name}")
        return ranked[:size]
    return cfg.scale_ids[:size]


def load_models(cfg: Config, scales: Sequence[ScaleId], model_dir: Optional[Path] = None) -> List[SvmModel]:
    n = cfg.bsif.bit_depth
    model_dir = model_dir or cfg.paths.model_dir
    models = []
    for scale_id in scales:
        path = model_dir / model_file_name(scale_id, n)
        if not path.is_file():
            raise FileNotFoundError(f"No model for scale {scale_id}: {path} is missing")
        model = read_model(path)
        if model.scale_id != scale_id or model.n != n:
            raise InvalidDataError(
                f"Scale {scale_id}: {path.name} was trained for {model.scale_id} n={model.n}"
            )
        if model.dimension != 2 ** n:
            raise InvalidDataError(f"Scale {scale_id}: model dimension {model.dimension}, features have {2 ** n}")
        models.append(model)
    return models


@traced("pipeline.run_testing")
def run_testing(cfg: Config) -> TestingSummary:
    """Per-model accuracy table with voting off, one ensemble report with voting on"""
    cfg.require_paths("feature_dir", "model_dir", "output_dir", "testing_list")
    started = time.perf_counter()
    manifest = load_manifest(cfg.paths.testing_list)
    out = cfg.paths.output_dir
    voting = cfg.ensemble.majority_voting

    scales = resolve_members(cfg) if voting else cfg.scale_ids
    models = load_models(cfg, scales)
    test = load_dataset(cfg, manifest, scales)
    summary = TestingSummary(images=len(test), voting=voting, seeds=cfg.seeds_summary())

    if voting:
        report = evaluate(Ensemble(tuple(models), tie_seed=cfg.seeds.tie), test)
        write_eval_report(out / "ensemble_report.csv", report)
        write_decisions(out / "decisions.csv", report)
        summary.ensemble_report = report
    else:
        summary.model_reports = {m.scale_id: evaluate_model(m, test) for m in models}
        write_model_table(out / "per_model_accuracy.csv", summary.model_reports)

    get_metrics().record_duration(time.perf_counter() - started, {"stage": "test"})
    logger.info(f"✅ Test reports written to {out}")
    return summary


# ============================================================================
# PROTOCOLS
# ============================================================================

@traced("pipeline.run_protocol_8020")
def run_protocol_8020(cfg: Config) -> Protocol8020Summary:
    """Seeded 80:20 split of the training list, training on the larger part,
    ranking on the validation part and sweeping the best-first ensemble size.

    The sweep runs on the testing list when one is configured, otherwise on
    the validation part.
    """
    cfg.require_paths("feature_dir", "model_dir", "output_dir", "training_list")
    out = cfg.paths.output_dir
    manifest = load_manifest(cfg.paths.training_list)
    train_manifest, val_manifest = split_manifest(manifest, cfg.protocol.validation_fraction, cfg.seeds.split)
    write_manifest(train_manifest, out / "split_train.csv")
    write_manifest(val_manifest, out / "split_validation.csv")
    logger.info(f"Split {len(manifest)} images into {len(train_manifest)} training / {len(val_manifest)} validation")

    scales = cfg.scale_ids
    train = load_dataset(cfg, train_manifest, scales)
    validation = load_dataset(cfg, val_manifest, scales)
    trained = _train_and_save(cfg, train, cfg.paths.model_dir)
    models = [model for model, _ in trained.values()]

    ranked = rank_models(models, validation)
    write_ranking(cfg.paths.model_dir / RANKING_FILE, ranked)
    write_ranking(out / RANKING_FILE, ranked)
    write_model_table(out / "per_model_accuracy.csv", {m.scale_id: evaluate_model(m, validation) for m in models})

    if cfg.paths.testing_list is not None:
        sweep_set, sweep_data = "test", load_dataset(cfg, load_manifest(cfg.paths.testing_list), scales)
    else:
        sweep_set, sweep_data = "validation", validation
    top = ranked[:cfg.ensemble.size]
    sweep = ensemble_size_sweep(top, sweep_data, tie_seed=cfg.seeds.tie)
    write_sweep(out / "ensemble_sweep.csv", sweep, top)

    logger.info(f"✅ 80:20 protocol done; best single model {ranked[0].scale_id} ({ranked[0].ccr:.4f})")
    return Protocol8020Summary(
        train_images=len(train),
        validation_images=len(validation),
        ranking=[(r.scale_id, r.ccr) for r in ranked],
        sweep=sweep,
        sweep_set=sweep_set,
        seeds=cfg.seeds_summary(),
    )


def logo_options(cfg: Config) -> LogoOptions:
    p = cfg.protocol
    return LogoOptions(
        tuning=cfg.tuning_options(),
        scales=cfg.scale_ids,
        groups=p.logo_groups or None,
        attack_train_per_group=p.logo_attack_train_per_group,
        attack_test=p.logo_attack_test,
        bonafide_train=p.logo_bonafide_train,
        bonafide_test=p.logo_bonafide_test,
        seed=cfg.seeds.split,
        tie_seed=cfg.seeds.tie,
        workers=cfg.runtime.workers,
    )


@traced("pipeline.run_protocol_logo")
def run_protocol_logo(cfg: Config) -> LogoSummary:
    """Leave-one-group-out over the group tags of the training list.

    Models of each permutation are kept under model_dir/logo_<group>/ when a
    model dir is configured.
    """
    cfg.require_paths("feature_dir", "output_dir", "training_list")
    out = cfg.paths.output_dir
    n = cfg.bsif.bit_depth
    manifest = load_manifest(cfg.paths.training_list)
    dataset = load_dataset(cfg, manifest, cfg.scale_ids)
    result = leave_one_group_out(dataset, logo_options(cfg))

    if cfg.paths.model_dir is not None:
        for g in result.groups:
            for scale_id, model in g.models.items():
                write_model(cfg.paths.model_dir / f"logo_{g.group}" / model_file_name(scale_id, n), model)

    labels = [s.label for s in cfg.scale_ids]
    write_table(out / "logo_scale_ccr.csv", ["group"] + labels,
                [[g.group] + [repr(g.scale_ccr[label]) for label in labels] for g in result.groups])
    write_table(
        out / "logo_group_reports.csv",
        ["group", "train_images", "test_images", "ccr", "apcer", "bpcer", "tie_draws"],
        [[g.group, len(g.partition.train_idx), len(g.partition.test_idx), repr(g.ensemble_report.ccr),
          repr(g.ensemble_report.apcer), repr(g.ensemble_report.bpcer), g.ensemble_report.tie_draws]
         for g in result.groups],
    )
    write_box_stats(out / "logo_scale_stats.csv", result.scale_stats, "scale")
    write_box_stats(out / "logo_group_stats.csv", result.group_stats, "group")

    return LogoSummary(
        groups=[g.group for g in result.groups],
        models=result.models_trained,
        mean_model_ccr=result.mean_model_ccr,
        ensemble_ccr={g.group: g.ensemble_report.ccr for g in result.groups},
        seeds=cfg.seeds_summary(),
    )


def run_enabled_modes(cfg: Config) -> list:
    """Extraction, then training, then testing, each only when its mode is on"""
    summaries = []
    if cfg.modes.extract_features:
        summaries.append(run_extraction(cfg))
    if cfg.modes.train_models:
        summaries.append(run_training(cfg))
    if cfg.modes.test_images:
        summaries.append(run_testing(cfg))
    return summaries
