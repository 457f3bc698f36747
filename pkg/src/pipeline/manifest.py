from pathlib import Path
from typing import Iterable, List, Literal, Optional, Tuple, Union
import csv
import io
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator
from sklearn.model_selection import train_test_split

from src.errors import FormatError, InvalidDataError
from src.svm import ATTACK, BONAFIDE

from .store import atomic_write_text

logger = logging.getLogger(__name__)

HEADER = ["filename", "label", "group", "subject"]


class ManifestEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    filename: str
    label: Literal["attack", "bonafide"]
    group: Optional[str] = None
    subject: Optional[str] = None

    @field_validator("label", mode="before")
    @classmethod
    def _normalize_label(cls, value):
        return value.strip().lower() if isinstance(value, str) else value

    @field_validator("group", "subject", mode="before")
    @classmethod
    def _empty_is_none(cls, value):
        if isinstance(value, str) and not value.strip():
            return None
        return value.strip() if isinstance(value, str) else value

    @property
    def y(self) -> int:
        return ATTACK if self.label == "attack" else BONAFIDE


class Manifest(BaseModel):
    entries: List[ManifestEntry] = []

    @model_validator(mode="after")
    def _unique_names(self):
        seen = set()
        for entry in self.entries:
            if entry.filename in seen:
                raise ValueError(f"duplicate filename {entry.filename}")
            seen.add(entry.filename)
        return self

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def filenames(self) -> List[str]:
        return [e.filename for e in self.entries]

    @property
    def labels(self) -> np.ndarray:
        return np.array([e.y for e in self.entries], dtype=np.int64)

    def select(self, indices: Iterable[int]) -> "Manifest":
        return Manifest(entries=[self.entries[i] for i in indices])


def parse_manifest(text: str, source: str = "manifest") -> Manifest:
    """CSV rows 'filename,label[,group][,subject]'; a leading header row is optional"""
    rows = [row for row in csv.reader(io.StringIO(text)) if row and any(cell.strip() for cell in row)]
    if rows and rows[0][0].strip().lower() == "filename":
        rows = rows[1:]
    entries = []
    for line_no, row in enumerate(rows, start=1):
        if len(row) < 2 or len(row) > 4:
            raise FormatError(f"{source} row {line_no}: expected 2 to 4 columns, got {len(row)}")
        try:
            entries.append(ManifestEntry(**dict(zip(HEADER, (cell.strip() for cell in row)))))
        except ValidationError as e:
            raise FormatError(f"{source} row {line_no}: {e.errors()[0]['msg']}") from e
    try:
        return Manifest(entries=entries)
    except ValidationError as e:
        raise InvalidDataError(f"{source}: {e.errors()[0]['msg']}") from e


def load_manifest(path: Union[str, Path]) -> Manifest:
    path = Path(path)
    manifest = parse_manifest(path.read_text(), source=path.name)
    logger.debug(f"Loaded {len(manifest)} entries from {path.name}")
    return manifest


def render_manifest(manifest: Manifest) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(HEADER)
    for e in manifest.entries:
        writer.writerow([e.filename, e.label, e.group or "", e.subject or ""])
    return buffer.getvalue()


def write_manifest(manifest: Manifest, path: Union[str, Path]) -> Path:
    return atomic_write_text(path, render_manifest(manifest))


def merge_manifests(*manifests: Optional[Manifest]) -> Manifest:
    """Concatenate in order, keeping the first entry for repeated filenames"""
    seen, entries = set(), []
    for manifest in manifests:
        if manifest is None:
            continue
        for entry in manifest.entries:
            if entry.filename not in seen:
                seen.add(entry.filename)
                entries.append(entry)
    return Manifest(entries=entries)


def split_manifest(manifest: Manifest, validation_fraction: float, seed: int) -> Tuple[Manifest, Manifest]:
    """Seeded stratified split; each part keeps the manifest order"""
    indices = np.arange(len(manifest))
    try:
        train_idx, val_idx = train_test_split(indices, test_size=validation_fraction,
                                              random_state=seed, stratify=manifest.labels)
    except ValueError as e:
        raise InvalidDataError(f"Cannot split {len(manifest)} images {validation_fraction:g} for validation: {e}") from e
    return manifest.select(np.sort(train_idx)), manifest.select(np.sort(val_idx))
