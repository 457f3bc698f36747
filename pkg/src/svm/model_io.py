"""
Versioned text format for trained models.

Floats are written with repr(), which round-trips every double exactly. The
last line is a SHA-256 over everything before it.
"""

from typing import List, Optional
import hashlib
import logging

import numpy as np

from src.bsif import ScaleId
from src.errors import FormatError, InvalidDataError

from .smo import SvmModel

logger = logging.getLogger(__name__)

MAGIC = "TCLPAD-SVM"
FORMAT_VERSION = 1
LABEL_LINE = "labels attack=+1 bonafide=-1"


def _digest(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


def save_model(model: SvmModel) -> bytes:
    lines: List[str] = [
        MAGIC,
        f"version {FORMAT_VERSION}",
        f"scale {model.scale_id.label if model.scale_id else 'none'}",
        f"n {model.n if model.n is not None else 'none'}",
        f"dimension {model.dimension}",
        f"gamma {repr(float(model.gamma))}",
        f"c {repr(float(model.c))}",
        LABEL_LINE,
        f"support_vectors {model.support_vectors.shape[0]}",
    ]
    for coef, sv in zip(model.dual_coefs, model.support_vectors):
        lines.append("sv " + " ".join([repr(float(coef))] + [repr(float(v)) for v in sv]))
    lines.append(f"bias {repr(float(model.bias))}")
    body = ("\n".join(lines) + "\n").encode("ascii")
    return body + f"checksum sha256 {_digest(body)}\n".encode("ascii")


def _field(line: str, name: str) -> str:
    parts = line.split(" ", 1)
    if len(parts) != 2 or parts[0] != name:
        raise FormatError(f"Expected '{name} ...', found {line[:40]!r}")
    return parts[1]


def _float(text: str, name: str) -> float:
    try:
        return float(text)
    except ValueError as e:
        raise FormatError(f"Malformed {name} value {text[:40]!r}") from e


def load_model(payload: bytes) -> SvmModel:
    try:
        text = payload.decode("ascii")
    except UnicodeDecodeError as e:
        raise FormatError("Model payload is not ASCII text") from e

    body_end = text.rfind("checksum sha256 ")
    if body_end < 0 or not text.endswith("\n"):
        raise FormatError("Model payload is truncated (no checksum line)")
    expected = text[body_end:].strip().split(" ")[-1]
    body = text[:body_end]
    if _digest(body.encode("ascii")) != expected:
        raise FormatError("Model checksum mismatch")

    lines = body.splitlines()
    if len(lines) < 10 or lines[0] != MAGIC:
        raise FormatError("Not a model file")
    version = _field(lines[1], "version")
    if version != str(FORMAT_VERSION):
        raise FormatError(f"Unsupported model format version {version} (expected {FORMAT_VERSION})")

    scale_text = _field(lines[2], "scale")
    n_text = _field(lines[3], "n")
    try:
        scale_id: Optional[ScaleId] = None if scale_text == "none" else ScaleId.parse(scale_text)
        n = None if n_text == "none" else int(n_text)
        dimension = int(_field(lines[4], "dimension"))
        count = int(_field(lines[8], "support_vectors"))
    except (InvalidDataError, ValueError) as e:
        raise FormatError(f"Malformed model header: {e}") from e
    gamma = _float(_field(lines[5], "gamma"), "gamma")
    c = _float(_field(lines[6], "c"), "c")
    if lines[7] != LABEL_LINE:
        raise FormatError(f"Unexpected label mapping {lines[7]!r}")

    sv_lines = lines[9:9 + count]
    if len(sv_lines) != count or len(lines) != 9 + count + 1:
        raise FormatError(f"Expected {count} support vectors followed by the bias line")
    coefs = np.empty(count)
    vectors = np.empty((count, dimension))
    for k, line in enumerate(sv_lines):
        values = _field(line, "sv").split(" ")
        if len(values) != dimension + 1:
            raise FormatError(f"Support vector {k + 1} has {len(values) - 1} values, expected {dimension}")
        coefs[k] = _float(values[0], "coefficient")
        vectors[k] = [_float(v, "support vector") for v in values[1:]]
    bias = _float(_field(lines[-1], "bias"), "bias")

    try:
        return SvmModel(support_vectors=vectors, dual_coefs=coefs, bias=bias, gamma=gamma, c=c,
                        scale_id=scale_id, n=n)
    except InvalidDataError as e:
        raise FormatError(f"Model violates its invariants: {e}") from e
