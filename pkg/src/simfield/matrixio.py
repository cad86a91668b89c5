"""CSV serialization for labeled square matrices (P, C, Y exports)."""

from __future__ import annotations

import csv
import io

import numpy as np

from .errors import ShapeMismatch

__all__ = ["matrix_to_csv", "matrix_from_csv"]


def matrix_to_csv(labels, values: np.ndarray, decimals: int = 9) -> str:
    """Square matrix with a label header row and repeated label column.

    Values are printed with a fixed number of decimals (at least six by
    contract); re-parsing and re-emitting is byte-stable.
    """
    values = np.asarray(values, dtype=float)
    n = len(labels)
    if values.shape != (n, n):
        raise ShapeMismatch(f"{n} labels but value array of shape {values.shape}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([""] + list(labels))
    for i, lab in enumerate(labels):
        writer.writerow([lab] + [f"{v:.{decimals}f}" for v in values[i]])
    return buf.getvalue()


def matrix_from_csv(text: str) -> tuple[tuple[str, ...], np.ndarray]:
    """Parse the format written by :func:`matrix_to_csv`."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise ShapeMismatch("empty matrix file")
    header = tuple(rows[0][1:])
    body = rows[1:]
    if len(body) != len(header):
        raise ShapeMismatch(f"{len(header)} header labels but {len(body)} rows")
    values = np.empty((len(header), len(header)))
    for i, row in enumerate(body):
        if row[0] != header[i]:
            raise ShapeMismatch(
                f"row label {row[0]!r} does not match header label {header[i]!r}"
            )
        if len(row) != len(header) + 1:
            raise ShapeMismatch(f"row {row[0]!r} has {len(row) - 1} values")
        values[i] = [float(cell) for cell in row[1:]]
    return header, values
