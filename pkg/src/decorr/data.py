"""Numeric containers, standardization and CSV ingestion."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    ConstantColumn,
    DimensionMismatch,
    InvalidPermutation,
    MissingColumn,
    ParseError,
)

_SD_FLOOR = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Standardized design ``X`` (n x p) with centered response ``Y``.

    ``original_index[k]`` is the 0-based column of the raw input that now sits
    in column ``k``; it is the identity right after :func:`standardize` and is
    carried through every reordering or column subset.
    """

    X: np.ndarray
    Y: np.ndarray
    column_names: tuple[str, ...]
    original_index: np.ndarray

    def __post_init__(self):
        X = _frozen(self.X)
        Y = _frozen(self.Y).ravel()
        idx = np.array(self.original_index, dtype=np.intp, copy=True)
        idx.setflags(write=False)
        if X.ndim != 2:
            raise DimensionMismatch("X must be a 2-d matrix")
        if Y.shape[0] != X.shape[0]:
            raise DimensionMismatch(f"Y has length {Y.shape[0]}, X has {X.shape[0]} rows")
        if len(self.column_names) != X.shape[1] or idx.shape != (X.shape[1],):
            raise DimensionMismatch("column metadata does not match the number of columns")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "column_names", tuple(str(s) for s in self.column_names))
        object.__setattr__(self, "original_index", idx)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class CoefficientVector:
    values: np.ndarray
    support: frozenset = field(init=False)

    def __post_init__(self):
        v = _frozen(self.values).ravel()
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "support", frozenset(np.flatnonzero(v).tolist()))

    def mask(self) -> np.ndarray:
        return self.values != 0


def standardize(raw_X, raw_Y, column_names: Sequence[str] | None = None) -> Dataset:
    """Center and scale every column of ``raw_X`` and center ``raw_Y``.

    Scaling uses the sample standard deviation (divisor ``n - 1``). Done once
    on the full data; subsamples are drawn afterwards from the result.
    """
    X = np.asarray(raw_X, dtype=float)
    Y = np.asarray(raw_Y, dtype=float).ravel()
    if X.ndim == 1:
        X = X[:, None]
    n, p = X.shape
    if Y.shape[0] != n:
        raise DimensionMismatch(f"response has length {Y.shape[0]} but X has {n} rows")
    if n < 2:
        raise DimensionMismatch("need at least two observations")
    Xc = X - X.mean(axis=0)
    sd = Xc.std(axis=0, ddof=1)
    bad = np.flatnonzero(sd < _SD_FLOOR)
    if bad.size:
        raise ConstantColumn(int(bad[0]))
    Xs = Xc / sd
    # A second centering pass removes the rounding residue of the first.
    Xs -= Xs.mean(axis=0)
    Yc = Y - Y.mean()
    Yc -= Yc.mean()
    if column_names is None:
        column_names = [f"X{j + 1}" for j in range(p)]
    return Dataset(Xs, Yc, tuple(column_names), np.arange(p))


def take_columns(d: Dataset, columns) -> Dataset:
    """Return ``d`` restricted to ``columns`` (distinct, in the given order)."""
    cols = np.asarray(columns)
    if cols.ndim != 1 or cols.size == 0 or not np.issubdtype(cols.dtype, np.integer):
        raise InvalidPermutation("column selection must be a non-empty 1-d integer sequence")
    if cols.min() < 0 or cols.max() >= d.p:
        raise InvalidPermutation(f"column indices must lie in [0, {d.p})")
    if np.unique(cols).size != cols.size:
        raise InvalidPermutation("column selection contains duplicates")
    return Dataset(
        d.X[:, cols],
        d.Y,
        tuple(d.column_names[j] for j in cols),
        d.original_index[cols],
    )


def permute_columns(d: Dataset, order) -> Dataset:
    """Reorder all columns of ``d``; ``order`` must be a 0-based permutation."""
    order = np.asarray(order)
    if order.shape != (d.p,):
        raise InvalidPermutation(f"expected a permutation of length {d.p}")
    return take_columns(d, order)


def invert_permutation(order) -> np.ndarray:
    order = np.asarray(order)
    inv = np.empty_like(order)
    inv[order] = np.arange(order.size)
    return inv


def _parse_cell(text: str, row: int, col: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(row, col, text) from None
    if not math.isfinite(value):
        raise ParseError(row, col, text)
    return value


def load_csv(path, response_column: str):
    """Read a numeric CSV with a header row.

    Returns ``(X, y, names)`` where ``X`` holds every column except
    ``response_column`` in file order. Row numbers in :class:`ParseError` are
    1-based data rows (the header is not counted).
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DimensionMismatch(f"{path} is empty") from None
        if response_column not in header:
            raise MissingColumn(response_column, header)
        rows = []
        for i, record in enumerate(reader, start=1):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) != len(header):
                raise DimensionMismatch(
                    f"row {i} has {len(record)} fields, header has {len(header)}"
                )
            rows.append([_parse_cell(c.strip(), i, header[k]) for k, c in enumerate(record)])
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    k = header.index(response_column)
    keep = [j for j in range(len(header)) if j != k]
    names = [header[j] for j in keep]
    return data[:, keep], data[:, k], names


def write_csv(path, X, y, names: Sequence[str], response_column: str = "y") -> None:
    """Write ``X`` and ``y`` in the format :func:`load_csv` reads (round-trip exact)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(names) + [response_column])
        for row, target in zip(X, y):
            w.writerow([repr(float(v)) for v in row] + [repr(float(target))])
