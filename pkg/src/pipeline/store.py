"""
On-disk artifacts: feature CSVs, model files and report CSVs.

Every write goes to a temporary file in the target directory and is renamed
into place, so readers never see a partial file.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union
import csv
import io
import logging
import os
import re
import tempfile

import numpy as np

from src.bsif import ScaleId
from src.errors import FormatError, InvalidDataError
from src.ensemble import BoxStats, EvalReport
from src.svm import ATTACK, SvmModel, TuningReport, load_model, save_model

logger = logging.getLogger(__name__)

FEATURE_DIGITS = 9
_META_RE = re.compile(r"^# scale=(\S+) effective_size=(\d+) n=(\d+) bins=(\d+) values=(normalized|counts)$")


def atomic_write_bytes(path: Union[str, Path], data: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path: Union[str, Path], text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[object]], preamble: str = "") -> str:
    buffer = io.StringIO()
    buffer.write(preamble)
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def write_table(path: Union[str, Path], header: Sequence[str], rows: Sequence[Sequence[object]]) -> Path:
    return atomic_write_text(path, _csv_text(header, rows))


def read_table(path: Union[str, Path]) -> Tuple[List[str], List[List[str]]]:
    rows = list(csv.reader(io.StringIO(Path(path).read_text())))
    if not rows:
        raise FormatError(f"{Path(path).name}: empty table")
    return rows[0], rows[1:]


# ============================================================================
# FEATURES
# ============================================================================

@dataclass
class FeatureTable:
    scale_id: ScaleId
    n: int
    normalized: bool
    names: List[str]
    matrix: np.ndarray


def feature_file_name(scale_id: ScaleId, n: int) -> str:
    return f"bsif_{scale_id.file_stem(n)}.csv"


def format_value(value: float) -> str:
    return format(float(value), f".{FEATURE_DIGITS}g")


def write_feature_csv(path: Union[str, Path], scale_id: ScaleId, n: int,
                      rows: Sequence[Tuple[str, np.ndarray]], normalized: bool = True) -> Path:
    bins = 2 ** n
    preamble = (f"# scale={scale_id.label} effective_size={scale_id.effective_size} n={n} "
                f"bins={bins} values={'normalized' if normalized else 'counts'}\n")
    header = ["filename"] + [f"bin{k}" for k in range(bins)]
    body = []
    for name, values in rows:
        values = np.asarray(values).ravel()
        if values.shape[0] != bins:
            raise InvalidDataError(f"{name}: {values.shape[0]} bins, expected {bins}")
        body.append([name] + [format_value(v) for v in values])
    return atomic_write_text(path, _csv_text(header, body, preamble))


def read_feature_csv(path: Union[str, Path]) -> FeatureTable:
    path = Path(path)
    lines = path.read_text().splitlines()
    if len(lines) < 2:
        raise FormatError(f"{path.name}: missing metadata or header row")
    meta = _META_RE.match(lines[0])
    if not meta:
        raise FormatError(f"{path.name}: malformed metadata row {lines[0][:60]!r}")
    try:
        scale_id = ScaleId.parse(meta.group(1))
    except InvalidDataError as e:
        raise FormatError(f"{path.name}: {e}") from e
    n, bins = int(meta.group(3)), int(meta.group(4))
    if bins != 2 ** n:
        raise FormatError(f"{path.name}: {bins} bins does not match n={n}")

    rows = list(csv.reader(io.StringIO("\n".join(lines[1:]))))
    if len(rows[0]) != bins + 1 or rows[0][0] != "filename":
        raise FormatError(f"{path.name}: header does not list filename plus {bins} bins")
    names, matrix = [], np.empty((len(rows) - 1, bins))
    for r, row in enumerate(rows[1:]):
        if len(row) != bins + 1:
            raise FormatError(f"{path.name} row {r + 1}: {len(row) - 1} values, expected {bins}")
        names.append(row[0])
        try:
            matrix[r] = [float(v) for v in row[1:]]
        except ValueError as e:
            raise FormatError(f"{path.name} row {r + 1}: {e}") from e
    return FeatureTable(scale_id=scale_id, n=n, normalized=meta.group(5) == "normalized",
                        names=names, matrix=matrix)


def load_features(feature_dir: Union[str, Path], scales: Sequence[ScaleId], n: int,
                  names: Sequence[str]) -> Dict[ScaleId, np.ndarray]:
    """Feature matrices with rows in `names` order; any missing row is fatal"""
    feature_dir = Path(feature_dir)
    features = {}
    for scale_id in scales:
        path = feature_dir / feature_file_name(scale_id, n)
        if not path.is_file():
            raise FileNotFoundError(f"No features for scale {scale_id}: {path} is missing")
        table = read_feature_csv(path)
        if table.scale_id != scale_id or table.n != n:
            raise InvalidDataError(f"{path.name} holds {table.scale_id} n={table.n}, expected {scale_id} n={n}")
        index = {name: r for r, name in enumerate(table.names)}
        missing = [name for name in names if name not in index]
        if missing:
            raise InvalidDataError(
                f"Scale {scale_id}: no feature rows for {len(missing)} image(s): {', '.join(missing[:20])}"
            )
        features[scale_id] = table.matrix[[index[name] for name in names]]
    return features


# ============================================================================
# MODELS
# ============================================================================

def model_file_name(scale_id: ScaleId, n: int) -> str:
    return f"svm_{scale_id.file_stem(n)}.model"


def tuning_file_name(scale_id: ScaleId, n: int) -> str:
    return f"tuning_{scale_id.file_stem(n)}.csv"


def write_model(path: Union[str, Path], model: SvmModel) -> Path:
    return atomic_write_bytes(path, save_model(model))


def read_model(path: Union[str, Path]) -> SvmModel:
    return load_model(Path(path).read_bytes())


def write_ranking(path: Union[str, Path], ranked) -> Path:
    rows = [[rank, r.model.scale_id.label, r.model.scale_id.effective_size, repr(r.ccr)]
            for rank, r in enumerate(ranked, start=1)]
    return write_table(path, ["rank", "scale", "effective_size", "validation_ccr"], rows)


def read_ranking(path: Union[str, Path]) -> List[ScaleId]:
    header, rows = read_table(path)
    if header[:2] != ["rank", "scale"]:
        raise FormatError(f"{Path(path).name}: not a ranking table")
    return [ScaleId.parse(row[1]) for row in rows]


# ============================================================================
# REPORTS
# ============================================================================

def _label_name(y: int) -> str:
    return "attack" if y == ATTACK else "bonafide"


def write_tuning_report(path: Union[str, Path], report: TuningReport) -> Path:
    return write_table(path, report.header(), report.rows())


def write_eval_report(path: Union[str, Path], report: EvalReport) -> Path:
    c = report.confusion
    rows = [
        ["ccr", repr(report.ccr)],
        ["apcer", repr(report.apcer)],
        ["bpcer", repr(report.bpcer)],
        ["tp", c.tp],
        ["fn", c.fn],
        ["fp", c.fp],
        ["tn", c.tn],
        ["images", c.total],
        ["tie_draws", report.tie_draws],
        ["tie_seed", "" if report.tie_seed is None else report.tie_seed],
        ["members", " ".join(report.members)],
    ]
    return write_table(path, ["metric", "value"], rows)


def read_eval_report(path: Union[str, Path]) -> Dict[str, str]:
    header, rows = read_table(path)
    if header != ["metric", "value"]:
        raise FormatError(f"{Path(path).name}: not an evaluation report")
    return {row[0]: row[1] for row in rows}


def write_decisions(path: Union[str, Path], report: EvalReport) -> Path:
    """One row per test image: truth, attack votes (when voting) and the decision"""
    votes = report.attack_votes
    rows = []
    for i, name in enumerate(report.names):
        row = [name, _label_name(report.labels[i])]
        if votes is not None:
            row += [int(votes[i]), len(report.members)]
        rows.append(row + [_label_name(report.decisions[i])])
    header = ["filename", "label"] + (["attack_votes", "members"] if votes is not None else []) + ["decision"]
    return write_table(path, header, rows)


def write_model_table(path: Union[str, Path], reports: Dict[ScaleId, EvalReport]) -> Path:
    rows = [[s.label, s.effective_size, repr(r.ccr), repr(r.apcer), repr(r.bpcer)]
            for s, r in reports.items()]
    return write_table(path, ["scale", "effective_size", "ccr", "apcer", "bpcer"], rows)


def write_sweep(path: Union[str, Path], sweep: Dict[int, float], ranked) -> Path:
    rows = [[size, ranked[size - 1].model.scale_id.label, repr(ccr)] for size, ccr in sweep.items()]
    return write_table(path, ["size", "added_scale", "ccr"], rows)


def write_box_stats(path: Union[str, Path], stats: Dict[str, BoxStats], key: str) -> Path:
    rows = [[name, b.count, repr(b.median), repr(b.q1), repr(b.q3), repr(b.iqr),
             repr(b.whisker_low), repr(b.whisker_high), " ".join(repr(v) for v in b.outliers)]
            for name, b in stats.items()]
    header = [key, "count", "median", "q1", "q3", "iqr", "whisker_low", "whisker_high", "outliers"]
    return write_table(path, header, rows)
