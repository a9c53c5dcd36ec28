"""CSV readers and writers for datasets and posterior matrices.

Dataset files have a header row, an optional leading ``label`` column of
class names, then feature columns ``f0`` .. ``f{V-1}``.  Probability files
have one column per class, named by the class table.
"""
from __future__ import annotations

import csv
import re
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import Dataset, ProbabilityMatrix, ProbSource
from .errors import DataError

LABEL_COLUMN = "label"


def natural_key(name: str):
    """Sort key that orders embedded integers numerically (``c2`` before ``c10``)."""
    return [int(tok) if tok.isdigit() else tok for tok in re.split(r"(\d+)", name)]


def _fmt(x: float, binary: bool) -> str:
    if binary:
        return "1" if x else "0"
    return repr(float(x))


def write_dataset(path, data: Dataset, include_labels: bool = True) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        labeled = include_labels and data.labeled
        header = ([LABEL_COLUMN] if labeled else []) + [f"f{j}" for j in range(data.n_features)]
        w.writerow(header)
        binary = bool(data.binary_features)
        for i in range(data.n_rows):
            row = [_fmt(x, binary) for x in data.features[i]]
            if labeled:
                row.insert(0, data.class_names[data.labels[i]])
            w.writerow(row)


def _open_rows(path: Path):
    try:
        fh = path.open("r", newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open file: {exc.strerror}", path) from exc
    return fh


def read_dataset(
    path,
    class_names: Optional[Sequence[str]] = None,
    n_features: Optional[int] = None,
) -> Dataset:
    """Parse a dataset CSV.

    Without ``class_names`` the class table is the naturally sorted set of
    label values present.  With it, labels must come from that table.
    ``n_features`` enforces the feature width.
    """
    path = Path(path)
    with _open_rows(path) as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("file is empty", path, 1) from None
        header = [h.strip() for h in header]
        labeled = bool(header) and header[0] == LABEL_COLUMN
        feat_cols = header[1:] if labeled else header
        if not feat_cols:
            raise DataError("no feature columns", path, 1)
        for j, name in enumerate(feat_cols):
            if name != f"f{j}":
                raise DataError(f"expected column 'f{j}'", path, 1, name)
        if n_features is not None and len(feat_cols) != n_features:
            raise DataError(
                f"file has {len(feat_cols)} feature columns, expected {n_features}", path, 1
            )
        width = len(header)
        offset = 1 if labeled else 0
        rows, raw_labels = [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue
            if len(rec) != width:
                raise DataError(f"row has {len(rec)} fields, header has {width}", path, lineno)
            vals = []
            for name, tok in zip(feat_cols, rec[offset:]):
                try:
                    v = float(tok)
                except ValueError:
                    raise DataError(f"not a number: {tok!r}", path, lineno, name) from None
                if not np.isfinite(v):
                    raise DataError(f"non-finite value {tok!r}", path, lineno, name)
                vals.append(v)
            rows.append(vals)
            if labeled:
                lab = rec[0].strip()
                if not lab:
                    raise DataError("empty label", path, lineno, LABEL_COLUMN)
                raw_labels.append((lab, lineno))
    if not rows:
        raise DataError("file has no data rows", path, 2)

    features = np.array(rows, dtype=float)
    if not labeled:
        return Dataset(features, None, tuple(class_names or ()))
    if class_names is None:
        names = tuple(sorted({lab for lab, _ in raw_labels}, key=natural_key))
    else:
        names = tuple(class_names)
    index = {n: k for k, n in enumerate(names)}
    labels = np.empty(len(raw_labels), dtype=np.int64)
    for i, (lab, lineno) in enumerate(raw_labels):
        if lab not in index:
            raise DataError(f"unknown class {lab!r}; known classes {list(names)}", path, lineno, LABEL_COLUMN)
        labels[i] = index[lab]
    return Dataset(features, labels, names)


def write_probs(path, probs: ProbabilityMatrix, class_names: Sequence[str]) -> None:
    path = Path(path)
    if len(class_names) != probs.n_classes:
        raise DataError(f"{len(class_names)} class names for {probs.n_classes} columns", path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(class_names))
        for row in probs.probs:
            w.writerow([repr(float(x)) for x in row])


def read_probs(path, class_names: Sequence[str], source: ProbSource = ProbSource.EXTERNAL) -> ProbabilityMatrix:
    path = Path(path)
    with _open_rows(path) as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError("file is empty", path, 1) from None
        if tuple(header) != tuple(class_names):
            raise DataError(f"header {header} does not match classes {list(class_names)}", path, 1)
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise DataError(f"row has {len(rec)} fields, header has {len(header)}", path, lineno)
            vals = []
            for name, tok in zip(header, rec):
                try:
                    vals.append(float(tok))
                except ValueError:
                    raise DataError(f"not a number: {tok!r}", path, lineno, name) from None
            rows.append(vals)
    if not rows:
        raise DataError("file has no data rows", path, 2)
    try:
        return ProbabilityMatrix(np.array(rows), source)
    except ValueError as exc:
        raise DataError(str(exc), path) from exc
