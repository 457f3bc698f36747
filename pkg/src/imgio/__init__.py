from .image import GrayImage, load_image, write_pgm, downsample_half, luma

__all__ = [
    'GrayImage',
    'load_image',
    'write_pgm',
    'downsample_half',
    'luma',
]
