"""CSV ingestion/export, stratified splitting and feature standardization."""

import csv
import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from meib.errors import ConfigError, DimensionError, InsufficientSamplesError, ParameterError
from meib.model import MultiViewBatch

FLOAT_FMT = "%.17g"


@dataclass
class CsvViewSpec:
    """One CSV file per view, aligned by row order.

    ``label_column`` is a header name or a 0-based column index; it is read
    from every view file that contains it and must agree across files.
    """

    paths: list
    label_column: str | int = "label"
    delimiter: str = ","
    has_header: bool = True


def _read_rows(path, delimiter):
    with open(path, newline="") as fh:
        return [row for row in csv.reader(fh, delimiter=delimiter) if row]


def _label_index(header, spec, path):
    if isinstance(spec.label_column, int):
        return spec.label_column
    if header is None:
        raise ConfigError(f"{path}: label column {spec.label_column!r} needs a header row")
    return header.index(spec.label_column) if spec.label_column in header else None


def load_multiview_csv(spec: CsvViewSpec) -> MultiViewBatch:
    if not spec.paths:
        raise ConfigError("at least one view file is required")
    views, labels = [], None
    for path in spec.paths:
        rows = _read_rows(path, spec.delimiter)
        if not rows:
            raise InsufficientSamplesError(f"{path}: file is empty")
        header = rows.pop(0) if spec.has_header else None
        if not rows:
            raise InsufficientSamplesError(f"{path}: no data rows")
        li = _label_index(header, spec, path)
        if li is not None and li >= len(rows[0]):
            raise ConfigError(f"{path}: label column {li} out of range")
        feats, raw = [], []
        for r, row in enumerate(rows):
            line = r + 2 if spec.has_header else r + 1
            vals = []
            for c, cell in enumerate(row):
                if c == li:
                    raw.append(cell.strip())
                    continue
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ConfigError(
                        f"{path}: non-numeric cell {cell!r} at line {line}, column {c + 1}"
                    ) from None
            feats.append(vals)
        if len({len(v) for v in feats}) > 1:
            raise DimensionError(f"{path}: rows have differing column counts")
        views.append(np.array(feats, dtype=np.float64))
        if li is not None:
            if labels is None:
                labels = raw
            elif raw != labels:
                raise ConfigError(f"{path}: labels disagree with an earlier view")
    if labels is None:
        raise ConfigError(f"label column {spec.label_column!r} not found in any view")
    n = {v.shape[0] for v in views}
    if len(n) > 1:
        raise DimensionError(f"views have differing row counts: {sorted(n)}")
    codes = {}
    encoded = np.array([codes.setdefault(lab, len(codes)) for lab in labels], dtype=np.int64)
    return MultiViewBatch(views, encoded)


def export_multiview_csv(batch: MultiViewBatch, prefix) -> list:
    """Write ``{prefix}_view{i}.csv`` per view with a trailing ``label`` column."""
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, v in enumerate(batch.views):
        path = prefix.parent / f"{prefix.name}_view{i + 1}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"f{j + 1}" for j in range(v.shape[1])] + ["label"])
            for row, lab in zip(v, batch.labels):
                w.writerow([FLOAT_FMT % x for x in row] + [int(lab)])
        paths.append(path)
    return paths


def stratified_split(batch: MultiViewBatch, fraction: float = 0.8, seed=0):
    """Per-class shuffled split; returns ``(train, test)`` with rows in original order."""
    if not 0.0 < fraction < 1.0:
        raise ParameterError(f"fraction must lie in (0, 1), got {fraction}")
    rng = np.random.default_rng(seed)
    train_idx = []
    for c in np.unique(batch.labels):
        idx = np.flatnonzero(batch.labels == c)
        if len(idx) < 2:
            raise InsufficientSamplesError(f"class {c} has fewer than 2 samples")
        idx = rng.permutation(idx)
        k = min(max(int(round(fraction * len(idx))), 1), len(idx) - 1)
        train_idx.append(idx[:k])
    mask = np.zeros(batch.n, dtype=bool)
    mask[np.concatenate(train_idx)] = True
    return batch.subset(np.flatnonzero(mask)), batch.subset(np.flatnonzero(~mask))


def _digest(views) -> str:
    h = hashlib.sha256()
    for v in views:
        h.update(np.ascontiguousarray(v, dtype=np.float64).tobytes())
    return h.hexdigest()


@dataclass
class Standardizer:
    means: list
    stds: list
    source_digest: str = ""

    STD_FLOOR = 1e-8

    def apply(self, batch: MultiViewBatch) -> MultiViewBatch:
        views = [(v - m) / s for v, m, s in zip(batch.views, self.means, self.stds)]
        return MultiViewBatch(views, batch.labels.copy())

    def inverse(self, batch: MultiViewBatch) -> MultiViewBatch:
        views = [v * s + m for v, m, s in zip(batch.views, self.means, self.stds)]
        return MultiViewBatch(views, batch.labels.copy())


def fit_standardizer(train: MultiViewBatch) -> Standardizer:
    """Per-feature mean and (population) standard deviation of the training views."""
    means = [v.mean(axis=0) for v in train.views]
    stds = [np.maximum(v.std(axis=0), Standardizer.STD_FLOOR) for v in train.views]
    return Standardizer(means, stds, _digest(train.views))
