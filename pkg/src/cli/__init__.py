from .main import build_parser, main
from .synthetic import SyntheticSet, gen_synthetic, synthesize_image

__all__ = [
    'build_parser',
    'main',
    'SyntheticSet',
    'gen_synthetic',
    'synthesize_image',
]
