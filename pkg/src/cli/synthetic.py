"""
Desk-scale surrogate data for exercising the pipeline end to end.

Bona fide images are band-limited smooth noise around a dark pupil. Attack
images use the same kind of base with a jittered dot-matrix printed over the
iris annulus, imitating the pigment pattern of a textured lens. With groups,
each group gets its own dot pitch.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Union
import logging

import numpy as np
from scipy import ndimage

from src.errors import InvalidDataError
from src.imgio import GrayImage, write_pgm
from src.pipeline.manifest import Manifest, ManifestEntry, write_manifest

logger = logging.getLogger(__name__)

DEFAULT_WIDTH = 640
DEFAULT_HEIGHT = 480
BASE_SIGMA = 4.0
BASE_MEAN = 120.0
BASE_STD = 25.0
DOT_PITCH = 8
DOT_AMPLITUDE = -70.0
DOT_SIGMA = 0.8
IMAGES_PER_SUBJECT = 2
MANIFEST_NAME = "manifest.csv"


@dataclass
class SyntheticSet:
    out_dir: Path
    manifest_path: Path
    manifest: Manifest
    seed: int

    def summary_line(self) -> str:
        attacks = sum(1 for e in self.manifest.entries if e.label == "attack")
        return (f"stage=gen-synthetic images={len(self.manifest)} attack={attacks} "
                f"bonafide={len(self.manifest) - attacks} seed={self.seed} manifest={self.manifest_path}")


def group_pitch(group_index: int) -> int:
    return DOT_PITCH + 2 * group_index


def _geometry(rng: np.random.Generator, width: int, height: int):
    cy = height / 2 + rng.uniform(-10, 10)
    cx = width / 2 + rng.uniform(-10, 10)
    yy, xx = np.mgrid[0:height, 0:width]
    radius = np.hypot(yy - cy, xx - cx)
    pupil = 0.1 * min(width, height) + rng.uniform(-5, 5)
    iris = 0.45 * min(width, height)
    return radius, pupil, iris


def _base(rng: np.random.Generator, width: int, height: int):
    noise = ndimage.gaussian_filter(rng.standard_normal((height, width)), BASE_SIGMA, mode="wrap")
    canvas = noise / noise.std() * BASE_STD + BASE_MEAN
    radius, pupil, iris = _geometry(rng, width, height)
    canvas[radius < pupil] = 30.0
    return canvas, radius, pupil, iris


def _dots(rng: np.random.Generator, width: int, height: int, pitch: int) -> np.ndarray:
    gy, gx = np.mgrid[pitch // 2:height:pitch, pitch // 2:width:pitch]
    jitter = pitch / 6
    ys = np.clip(np.rint(gy + rng.uniform(-jitter, jitter, gy.shape)), 0, height - 1).astype(int)
    xs = np.clip(np.rint(gx + rng.uniform(-jitter, jitter, gx.shape)), 0, width - 1).astype(int)
    impulses = np.zeros((height, width))
    np.add.at(impulses, (ys.ravel(), xs.ravel()), 1.0)
    blurred = ndimage.gaussian_filter(impulses, DOT_SIGMA)
    return blurred / blurred.max() * DOT_AMPLITUDE


def synthesize_image(rng: np.random.Generator, attack: bool, width: int = DEFAULT_WIDTH,
                     height: int = DEFAULT_HEIGHT, pitch: int = DOT_PITCH) -> GrayImage:
    canvas, radius, pupil, iris = _base(rng, width, height)
    if attack:
        lens = (radius >= pupil) & (radius <= iris)
        canvas = canvas + _dots(rng, width, height, pitch) * lens
    return GrayImage.from_array(np.clip(np.rint(canvas), 0, 255).astype(np.uint8))


def gen_synthetic(out_dir: Union[str, Path], count: int, seed: int, width: int = DEFAULT_WIDTH,
                  height: int = DEFAULT_HEIGHT, groups: int = 0) -> SyntheticSet:
    """Write `count` bona fide and `count` attack PGMs plus manifest.csv.

    Every image has its own generator derived from (seed, class, index), so
    the output is identical for identical arguments. Bona fide images carry
    subject tags; with groups > 0 attack images are spread round-robin over
    groups brand1..brandN.
    """
    if count < 1:
        raise InvalidDataError(f"count must be positive, got {count}")
    if width % 2 or height % 2 or width < 64 or height < 64:
        raise InvalidDataError(f"Synthetic images need even dimensions of at least 64, got {width}x{height}")
    if groups < 0:
        raise InvalidDataError(f"groups must not be negative, got {groups}")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries: List[ManifestEntry] = []

    for i in range(count):
        rng = np.random.default_rng([seed, 0, i])
        name = f"bonafide_{i:04d}.pgm"
        write_pgm(synthesize_image(rng, attack=False, width=width, height=height), out_dir / name)
        entries.append(ManifestEntry(filename=name, label="bonafide",
                                     subject=f"subject{i // IMAGES_PER_SUBJECT:03d}"))

    for i in range(count):
        rng = np.random.default_rng([seed, 1, i])
        group_index: Optional[int] = i % groups if groups else None
        pitch = group_pitch(group_index or 0)
        name = f"attack_{i:04d}.pgm"
        write_pgm(synthesize_image(rng, attack=True, width=width, height=height, pitch=pitch), out_dir / name)
        entries.append(ManifestEntry(filename=name, label="attack",
                                     group=None if group_index is None else f"brand{group_index + 1}"))

    manifest = Manifest(entries=entries)
    manifest_path = write_manifest(manifest, out_dir / MANIFEST_NAME)
    logger.info(f"✅ Wrote {2 * count} synthetic images to {out_dir}")
    return SyntheticSet(out_dir=out_dir, manifest_path=manifest_path, manifest=manifest, seed=seed)
