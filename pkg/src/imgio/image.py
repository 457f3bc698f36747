"""
Iris image ingestion.

Loads NIR iris captures as 8-bit grayscale and builds the half-resolution
copy that doubles the effective BSIF filter support.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Union
import logging

import numpy as np
from PIL import Image, UnidentifiedImageError

from src.errors import FormatError, InvalidDataError, PadError

logger = logging.getLogger(__name__)

# PIL reports binary PGM as "PPM"
SUPPORTED_FORMATS = {"PPM", "PNG", "BMP", "TIFF"}

# Integer luma weights, per mille
LUMA_WEIGHTS = (299, 587, 114)


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Immutable 8-bit single-channel raster, row-major"""
    width: int
    height: int
    data: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InvalidDataError(f"Image dimensions must be positive, got {self.width}x{self.height}")
        data = np.ascontiguousarray(self.data, dtype=np.uint8)
        if data.size != self.width * self.height:
            raise InvalidDataError(
                f"Pixel count {data.size} does not match {self.width}x{self.height}"
            )
        data = data.reshape(self.height, self.width)
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, pixels: np.ndarray) -> "GrayImage":
        pixels = np.asarray(pixels)
        if pixels.ndim != 2:
            raise InvalidDataError(f"Expected a 2-D array, got shape {pixels.shape}")
        if pixels.size and (pixels.min() < 0 or pixels.max() > 255):
            raise InvalidDataError("Pixel values must lie in [0, 255]")
        return cls(width=pixels.shape[1], height=pixels.shape[0], data=pixels.astype(np.uint8))

    @property
    def shape(self):
        return self.data.shape

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.data, other.data)

    __hash__ = None


def luma(rgb: np.ndarray) -> np.ndarray:
    """round(0.299 R + 0.587 G + 0.114 B), half up, saturated to [0, 255]"""
    rgb = np.asarray(rgb, dtype=np.int64)
    wr, wg, wb = LUMA_WEIGHTS
    weighted = wr * rgb[..., 0] + wg * rgb[..., 1] + wb * rgb[..., 2]
    return np.clip((weighted + 500) // 1000, 0, 255).astype(np.uint8)


def load_image(path: Union[str, Path]) -> GrayImage:
    """Load a PGM/PNG/BMP/TIFF file as an 8-bit grayscale image.

    Multi-channel inputs are reduced with the integer luma transform.
    Unreadable or truncated files raise OSError, other formats FormatError.
    """
    path = Path(path)
    try:
        with Image.open(path) as img:
            fmt = img.format
            if fmt not in SUPPORTED_FORMATS:
                raise FormatError(f"{path.name}: unsupported image format {fmt}")
            img.load()
            mode = img.mode
            if mode == "L":
                pixels = np.asarray(img, dtype=np.uint8)
            elif mode == "1":
                pixels = np.asarray(img, dtype=np.uint8) * 255
            elif mode in ("RGB", "RGBA", "P", "LA", "PA"):
                pixels = luma(np.asarray(img.convert("RGB")))
            else:
                raise FormatError(f"{path.name}: unsupported pixel mode {mode}")
    except PadError:
        raise
    except UnidentifiedImageError as e:
        raise FormatError(f"{path.name}: not a recognised image ({e})") from e
    except SyntaxError as e:
        # PIL raises SyntaxError for broken headers
        raise OSError(f"{path.name}: corrupt image header ({e})") from e
    except (ValueError, Image.DecompressionBombError) as e:
        # short pixel buffers surface as ValueError from the decoder
        raise OSError(f"{path}: unreadable image data ({e})") from e

    if pixels.ndim != 2 or pixels.shape[0] == 0 or pixels.shape[1] == 0:
        raise InvalidDataError(f"{path.name}: zero-dimension image")

    logger.debug(f"Loaded {path.name} ({fmt}, {mode}) {pixels.shape[1]}x{pixels.shape[0]}")
    return GrayImage.from_array(pixels)


def write_pgm(img: GrayImage, path: Union[str, Path]) -> Path:
    """Write a binary (P5, maxval 255) PGM file"""
    path = Path(path)
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    path.write_bytes(header + img.data.tobytes())
    return path


def downsample_half(img: GrayImage) -> GrayImage:
    """Halve both dimensions with a 2x2 box mean, rounding half up"""
    if img.width % 2 or img.height % 2:
        raise InvalidDataError(
            f"Half-resolution copy needs even dimensions, got {img.width}x{img.height}"
        )
    blocks = img.data.astype(np.uint16).reshape(img.height // 2, 2, img.width // 2, 2)
    sums = blocks.sum(axis=(1, 3))
    return GrayImage.from_array((sums + 2) // 4)
