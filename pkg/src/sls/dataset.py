"""Tabular ingestion and the centering/scaling convention used by the estimator.

Predictors are centered and scaled so that every column satisfies
``sum_i x_ij**2 == n`` (population scaling, not ``n - 1``). The response is
centered only. The intercept is never penalized; it is recovered after the
fit from the stored means.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class RawDataset:
    y: np.ndarray
    X: np.ndarray
    column_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            raise ValidationError("X must be two-dimensional")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise ValidationError(
                f"y has shape {y.shape}, expected ({X.shape[0]},)")
        if X.shape[0] < 2:
            raise ValidationError("n >= 2 required")
        if X.shape[1] < 1:
            raise ValidationError("p >= 1 required")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise ValidationError("non-finite entries in data")
        names = tuple(self.column_names) or tuple(f"x{j + 1}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise ValidationError("column_names length does not match p")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class StandardizedDataset:
    """Centered response and standardized design.

    ``X`` has zero column sums and squared column norms equal to ``n``;
    ``y`` sums to zero. ``col_means``, ``col_scales`` and ``y_mean`` map
    back to the original scale.
    """

    y: np.ndarray
    X: np.ndarray
    col_means: np.ndarray
    col_scales: np.ndarray
    y_mean: float
    column_names: tuple[str, ...] = field(default=())

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def transform(self, X_new: np.ndarray) -> np.ndarray:
        """Apply the stored centering/scaling to new rows."""
        X_new = np.atleast_2d(np.asarray(X_new, dtype=float))
        if X_new.shape[1] != self.p:
            raise ValidationError(f"expected {self.p} columns, got {X_new.shape[1]}")
        return (X_new - self.col_means) / self.col_scales


def _parse_float(cell: str, row: int, col: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise ValidationError(
            f"non-numeric cell {cell!r} at row {row}, column {col}") from None
    if not math.isfinite(value):
        raise ValidationError(f"non-finite value {cell!r} at row {row}, column {col}")
    return value


def load_csv(path, has_header: bool = True, response_column: str | int = 0) -> RawDataset:
    """Read a rectangular numeric CSV; ``response_column`` is a name or 0-based index.

    Row numbers in error messages are 1-based file lines.
    """
    if not os.path.isfile(path):
        raise ValidationError(f"file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if any(c.strip() for c in r)]
    if not rows:
        raise ValidationError(f"{path}: empty file")

    header = None
    start = 0
    if has_header:
        header = [c.strip() for c in rows[0]]
        start = 1
    width = len(rows[0])

    if isinstance(response_column, str) and not response_column.lstrip("-").isdigit():
        if header is None or response_column not in header:
            raise ValidationError(f"response column {response_column!r} not found")
        resp = header.index(response_column)
    else:
        resp = int(response_column)
        if not 0 <= resp < width:
            raise ValidationError(f"response column index {resp} out of range 0..{width - 1}")

    values = []
    for i, row in enumerate(rows[start:], start=start + 1):
        if len(row) != width:
            raise ValidationError(
                f"ragged row {i}: {len(row)} fields, expected {width}")
        values.append([_parse_float(c.strip(), i, j + 1) for j, c in enumerate(row)])
    if len(values) < 2:
        raise ValidationError("n >= 2 required")

    data = np.array(values, dtype=float)
    keep = [j for j in range(width) if j != resp]
    names = [header[j] for j in keep] if header else [f"x{j + 1}" for j in range(len(keep))]
    return RawDataset(y=data[:, resp], X=data[:, keep], column_names=tuple(names))


def standardize(raw: RawDataset) -> StandardizedDataset:
    X = raw.X
    n = X.shape[0]
    means = X.mean(axis=0)
    Xc = X - means
    scales = np.sqrt(np.sum(Xc ** 2, axis=0) / n)
    # relative test so that large-offset constant columns are still caught
    tiny = scales <= 1e-12 * np.maximum(1.0, np.abs(means))
    if np.any(tiny):
        j = int(np.flatnonzero(tiny)[0])
        raise ValidationError(f"column {raw.column_names[j]!r} is constant")
    y_mean = float(raw.y.mean())
    return StandardizedDataset(
        y=raw.y - y_mean,
        X=Xc / scales,
        col_means=means,
        col_scales=scales,
        y_mean=y_mean,
        column_names=raw.column_names,
    )


def standardize_arrays(X: np.ndarray, y: np.ndarray,
                       column_names: Sequence[str] = ()) -> StandardizedDataset:
    return standardize(RawDataset(y=y, X=X, column_names=tuple(column_names)))


def coefficients_to_original_scale(fit_coefs, ds: StandardizedDataset) -> tuple[float, np.ndarray]:
    """Map standardized-scale coefficients to ``(intercept, coefs)`` on the raw scale."""
    b = np.asarray(fit_coefs, dtype=float)
    if b.shape != (ds.p,):
        raise ValidationError(f"coefficient vector has shape {b.shape}, expected ({ds.p},)")
    coefs = b / ds.col_scales
    intercept = ds.y_mean - float(coefs @ ds.col_means)
    return intercept, coefs
