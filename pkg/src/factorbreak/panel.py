"""Observed-series container and CSV ingestion.

A panel holds an ``n x p`` matrix of observations, one time point per row.
Values are always 64-bit: eigen-decompositions of moment-matrix products
lose roughly half the working digits, so narrower input is widened on load.
Missing values are rejected rather than imputed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyPanelError, InvalidParamsError, ParseError


@dataclass(frozen=True)
class TimeSeriesPanel:
    """Immutable ``n x p`` panel; entry ``(t, j)`` is coordinate j of y_t."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise InvalidParamsError(f"panel values must be 2-D, got shape {values.shape}")
        n, p = values.shape
        if n < 2:
            raise EmptyPanelError(f"panel needs at least 2 time points, got {n}")
        if p < 1:
            raise EmptyPanelError("panel needs at least 1 column")
        if not np.all(np.isfinite(values)):
            t, j = np.argwhere(~np.isfinite(values))[0]
            raise InvalidParamsError(f"non-finite entry at row {t + 1}, column {j + 1}")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class FractionGrid:
    """Candidate change fractions ``{1/n, ..., (n-1)/n}`` inside ``(eta1, eta2)``."""

    eta1: float
    eta2: float
    n: int
    split_indices: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not (0.0 < self.eta1 < self.eta2 < 1.0):
            raise InvalidParamsError(
                f"need 0 < eta1 < eta2 < 1, got eta1={self.eta1}, eta2={self.eta2}"
            )
        if self.n < 2:
            raise InvalidParamsError("grid needs n >= 2")
        lo = int(math.floor(self.n * self.eta1 + 1e-9)) + 1
        hi = int(math.ceil(self.n * self.eta2 - 1e-9)) - 1
        idx = np.arange(lo, hi + 1, dtype=np.int64)
        # guard against representation error in eta*n near integers
        frac = idx / self.n
        idx = idx[(frac > self.eta1) & (frac < self.eta2)]
        idx.setflags(write=False)
        object.__setattr__(self, "split_indices", idx)

    @property
    def gammas(self) -> np.ndarray:
        return self.split_indices / self.n


def load_panel(path: str, has_header: bool = False) -> TimeSeriesPanel:
    """Parse a comma-separated panel file, one time point per row.

    Parameters
    ----------
    path : str
        UTF-8 CSV file. No quoting; every row must have the same number of
        numeric fields.
    has_header : bool
        Skip the first line.

    Raises
    ------
    OSError
        Unreadable file.
    ParseError
        Non-numeric cell or ragged row; reports 1-based row and column.
    EmptyPanelError
        Fewer than two data rows.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if has_header and lines:
        lines = lines[1:]
    rows: list[list[float]] = []
    width = None
    for i, line in enumerate(lines, start=1):
        if line.strip() == "":
            continue
        cells = line.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise ParseError(
                f"row {i} has {len(cells)} fields, expected {width}", row=i
            )
        parsed = []
        for j, cell in enumerate(cells, start=1):
            try:
                parsed.append(float(cell))
            except ValueError:
                raise ParseError(
                    f"non-numeric cell at row {i} column {j}: {cell.strip()!r}",
                    row=i,
                    column=j,
                ) from None
        rows.append(parsed)
    if len(rows) < 2:
        raise EmptyPanelError(f"file {path!r} has {len(rows)} data rows, need >= 2")
    return TimeSeriesPanel(np.array(rows, dtype=np.float64))


def save_panel(panel: TimeSeriesPanel, path: str) -> None:
    """Write a panel as CSV with full float64 round-trip precision."""
    np.savetxt(path, panel.values, fmt="%.17g", delimiter=",")


def center_panel(panel: TimeSeriesPanel) -> TimeSeriesPanel:
    """Remove each column's sample mean. Idempotent."""
    return TimeSeriesPanel(panel.values - panel.values.mean(axis=0, keepdims=True))
