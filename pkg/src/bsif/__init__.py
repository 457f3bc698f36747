from .scale import Resolution, ScaleId, all_scales
from .filters import (
    BIT_DEPTHS,
    DEFAULT_BIT_DEPTH,
    FILTER_SIZES,
    FilterBank,
    convert_mat_filters,
    filter_file_name,
    is_valid_combination,
    load_filter_bank,
    save_filter_bank,
    synthesize_filter_bank,
)
from .codes import (
    ZERO_RESPONSE_TOLERANCE,
    CodeMap,
    FeatureVector,
    compute_code_map,
    extract_all,
    filter_responses,
    histogram,
)

__all__ = [
    'Resolution',
    'ScaleId',
    'all_scales',
    'BIT_DEPTHS',
    'DEFAULT_BIT_DEPTH',
    'FILTER_SIZES',
    'FilterBank',
    'convert_mat_filters',
    'filter_file_name',
    'is_valid_combination',
    'load_filter_bank',
    'save_filter_bank',
    'synthesize_filter_bank',
    'ZERO_RESPONSE_TOLERANCE',
    'CodeMap',
    'FeatureVector',
    'compute_code_map',
    'extract_all',
    'filter_responses',
    'histogram',
]
