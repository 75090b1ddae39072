"""CSV ingestion."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ColumnNotFound, InvalidInput, ParseError


@dataclass
class DataTable:
    """Numeric observations with column labels and an optional response."""

    X: np.ndarray
    column_names: list
    y: np.ndarray | None = None
    response_name: str | None = None

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def _cell(text, row, col):
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"row {row}, column {col!r}: cannot read {text!r} as a number", row, col) from None
    if not math.isfinite(v):
        raise ParseError(f"row {row}, column {col!r}: non-finite value {text!r}", row, col)
    return v


def load_table(path, response_column: str | None = None, columns=None) -> DataTable:
    """Read a comma-separated file with a header row into a :class:`DataTable`.

    Parameters
    ----------
    path : str or path-like
    response_column : str, optional
        Column moved out of ``X`` into ``y``.
    columns : list of str, optional
        Predictor columns to keep (default: all but the response).

    Raises
    ------
    ParseError
        Empty, non-numeric or non-finite cell, or a ragged row; ``row`` is
        the 1-based data row and ``column`` the header label.
    ColumnNotFound
        A named column is missing from the header.
    """
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InvalidInput(f"{path}: empty file") from None
        rows = []
        for i, rec in enumerate(reader, start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise ParseError(f"row {i} has {len(rec)} fields, header has {len(header)}", i, None)
            rows.append([_cell(c.strip(), i, header[j]) for j, c in enumerate(rec)])
    if not rows:
        raise InvalidInput(f"{path}: no data rows")
    data = np.array(rows, dtype=float)
    names = list(header)
    y = None
    if response_column is not None:
        if response_column not in names:
            raise ColumnNotFound(f"response column {response_column!r} not in {names}")
        j = names.index(response_column)
        y = data[:, j].copy()
        data = np.delete(data, j, axis=1)
        del names[j]
    if columns is not None:
        missing = [c for c in columns if c not in names]
        if missing:
            raise ColumnNotFound(f"columns {missing} not in {names}")
        idx = [names.index(c) for c in columns]
        data = data[:, idx]
        names = list(columns)
    return DataTable(data, names, y, response_column)
