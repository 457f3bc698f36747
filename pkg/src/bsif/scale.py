from dataclasses import dataclass
from enum import Enum
import re

from src.errors import InvalidDataError


class Resolution(str, Enum):
    FULL = "full"
    HALF = "half"


_LABEL_RE = re.compile(r"^(\d+)x(\d+)-(full|half)$")


@dataclass(frozen=True)
class ScaleId:
    """One BSIF feature set: native filter size plus the image resolution it ran on"""
    s: int
    resolution: Resolution = Resolution.FULL

    def __post_init__(self):
        object.__setattr__(self, "resolution", Resolution(self.resolution))

    @property
    def effective_size(self) -> int:
        """Filter support measured in full-resolution pixels"""
        return self.s if self.resolution is Resolution.FULL else 2 * self.s

    @property
    def label(self) -> str:
        return f"{self.s}x{self.s}-{self.resolution.value}"

    def file_stem(self, n: int) -> str:
        return f"{self.s}x{self.s}_{n}bit_{self.resolution.value}"

    def extraction_key(self):
        """Full resolution ascending s, then half resolution ascending s"""
        return (self.resolution is Resolution.HALF, self.s)

    def ranking_key(self):
        """Smaller filter first, full resolution before half"""
        return (self.s, self.resolution is Resolution.HALF)

    @classmethod
    def parse(cls, label: str) -> "ScaleId":
        match = _LABEL_RE.match(label.strip())
        if not match or match.group(1) != match.group(2):
            raise InvalidDataError(f"Malformed scale label {label!r}, expected e.g. '7x7-half'")
        return cls(int(match.group(1)), Resolution(match.group(3)))

    def __str__(self) -> str:
        return self.label


def all_scales(sizes) -> list:
    """Every (size, resolution) pair in extraction order"""
    scales = [ScaleId(s, r) for r in Resolution for s in sizes]
    return sorted(scales, key=ScaleId.extraction_key)
