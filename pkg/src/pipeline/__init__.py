from .config import (
    ALIASES,
    Config,
    build_config,
    known_keys,
    parse_config,
    parse_overrides,
    show_config,
)
from .manifest import (
    Manifest,
    ManifestEntry,
    load_manifest,
    merge_manifests,
    parse_manifest,
    render_manifest,
    split_manifest,
    write_manifest,
)
from .store import (
    FeatureTable,
    atomic_write_bytes,
    atomic_write_text,
    feature_file_name,
    load_features,
    model_file_name,
    read_feature_csv,
    read_model,
    read_ranking,
    tuning_file_name,
    write_feature_csv,
    write_model,
)
from .runner import (
    ExtractionSummary,
    LogoSummary,
    Protocol8020Summary,
    TestingSummary,
    TrainingSummary,
    load_dataset,
    load_filter_banks,
    load_models,
    resolve_members,
    run_enabled_modes,
    run_extraction,
    run_protocol_8020,
    run_protocol_logo,
    run_testing,
    run_training,
)

__all__ = [
    'ALIASES',
    'Config',
    'build_config',
    'known_keys',
    'parse_config',
    'parse_overrides',
    'show_config',
    'Manifest',
    'ManifestEntry',
    'load_manifest',
    'merge_manifests',
    'parse_manifest',
    'render_manifest',
    'split_manifest',
    'write_manifest',
    'FeatureTable',
    'atomic_write_bytes',
    'atomic_write_text',
    'feature_file_name',
    'load_features',
    'model_file_name',
    'read_feature_csv',
    'read_model',
    'read_ranking',
    'tuning_file_name',
    'write_feature_csv',
    'write_model',
    'ExtractionSummary',
    'LogoSummary',
    'Protocol8020Summary',
    'TestingSummary',
    'TrainingSummary',
    'load_dataset',
    'load_filter_banks',
    'load_models',
    'resolve_members',
    'run_enabled_modes',
    'run_extraction',
    'run_protocol_8020',
    'run_protocol_logo',
    'run_testing',
    'run_training',
]
