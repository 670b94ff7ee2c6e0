"""Return panels: CSV ingestion, validation, standardisation, rolling windows.

A panel is a dated n x d matrix of per-period returns with unique column
labels and an optional label -> category map. All downstream modules consume
either a :class:`ReturnPanel` or its standardised counterpart, which carries
the per-column statistics it was produced under.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._util import fmt
from .errors import (
    DateParseError,
    DuplicateLabelError,
    InsufficientDataError,
    MissingCategoryError,
    NonPositivePriceError,
    PanelError,
    ZeroVarianceError,
)


@dataclass(frozen=True)
class ReturnPanel:
    """Dated matrix of asset or index returns.

    Invariants (enforced at construction): dates strictly increasing and as
    many as rows, labels unique, values finite, and -- when categories are
    present -- every label mapped to exactly one category.
    """

    dates: tuple[dt.date, ...]
    labels: tuple[str, ...]
    values: np.ndarray
    categories: Mapping[str, str] | None = None
    dropped_rows: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "labels", tuple(self.labels))
        if values.ndim != 2:
            raise PanelError("values must be a 2-D matrix")
        n, d = values.shape
        if len(self.dates) != n:
            raise PanelError(f"{len(self.dates)} dates for {n} rows")
        if len(self.labels) != d:
            raise PanelError(f"{len(self.labels)} labels for {d} columns")
        if len(set(self.labels)) != d:
            seen, dups = set(), set()
            for lab in self.labels:
                (dups if lab in seen else seen).add(lab)
            raise DuplicateLabelError(f"duplicate column labels: {sorted(dups)}")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise PanelError("dates must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise PanelError("panel contains non-finite values")
        if self.categories is not None:
            missing = [lab for lab in self.labels if lab not in self.categories]
            if missing:
                raise MissingCategoryError(f"labels without category: {missing}")
            object.__setattr__(
                self, "categories",
                {lab: self.categories[lab] for lab in self.labels})
        values.setflags(write=False)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def select(self, labels: Sequence[str]) -> "ReturnPanel":
        """Sub-panel restricted to ``labels`` (kept in the given order)."""
        idx = [self.labels.index(lab) for lab in labels]
        cats = None
        if self.categories is not None:
            cats = {lab: self.categories[lab] for lab in labels}
        return ReturnPanel(self.dates, tuple(labels),
                           np.array(self.values[:, idx]), cats)

    def rows(self, start: int, stop: int) -> "ReturnPanel":
        return ReturnPanel(self.dates[start:stop], self.labels,
                           np.array(self.values[start:stop]), self.categories)


@dataclass(frozen=True)
class StandardizedPanel:
    """A panel together with the column statistics used to rescale it."""

    base: ReturnPanel
    mean: np.ndarray
    std: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        for name in ("mean", "std", "values"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.std <= 0):
            bad = self.labels[int(np.argmin(self.std))]
            raise ZeroVarianceError(bad)

    @property
    def labels(self) -> tuple[str, ...]:
        return self.base.labels

    @property
    def dates(self) -> tuple[dt.date, ...]:
        return self.base.dates

    @property
    def categories(self):
        return self.base.categories

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def select(self, labels: Sequence[str]) -> "StandardizedPanel":
        idx = [self.labels.index(lab) for lab in labels]
        return StandardizedPanel(self.base.select(labels),
                                 self.mean[idx], self.std[idx],
                                 np.array(self.values[:, idx]))


@dataclass(frozen=True)
class WindowSpec:
    """Rolling-window layout: fixed width with either a stride in rows or
    anchoring at the last available date of each calendar month."""

    width: int
    stride: int = 1
    month_end: bool = False

    def __post_init__(self):
        if self.width < 2:
            raise PanelError("window width must be >= 2")
        if self.stride < 1:
            raise PanelError("window stride must be >= 1")


def _parse_date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError as exc:
        raise DateParseError(f"unparseable date {text!r} (expected YYYY-MM-DD)") from exc


def load_panel(source, *, date_column: str = "date",
               categories: Mapping[str, str] | None = None) -> ReturnPanel:
    """Load a return panel from CSV (first column dates, rest numeric).

    Rows containing any missing or non-numeric cell are dropped; the count of
    dropped rows is recorded on the panel.
    """
    if hasattr(source, "read"):
        reader = csv.reader(source)
    else:
        reader = csv.reader(io.StringIO(Path(source).read_text()))
    rows = [r for r in reader if r]
    if not rows:
        raise PanelError("empty CSV input")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2:
        raise PanelError("need a date column plus at least one numeric column")
    if header[0] != date_column:
        raise PanelError(f"first column must be {date_column!r}, got {header[0]!r}")
    labels = header[1:]
    if len(set(labels)) != len(labels):
        raise DuplicateLabelError(f"duplicate column labels in header: {labels}")

    dates, data, dropped = [], [], 0
    for row in rows[1:]:
        if len(row) != len(header):
            dropped += 1
            continue
        try:
            parsed = [float(cell) for cell in row[1:]]
        except ValueError:
            dropped += 1
            continue
        if any(not math.isfinite(v) for v in parsed):
            dropped += 1
            continue
        dates.append(_parse_date(row[0]))
        data.append(parsed)
    if len(data) < 2:
        raise InsufficientDataError(f"only {len(data)} usable rows after dropping {dropped}")
    return ReturnPanel(tuple(dates), tuple(labels), np.asarray(data),
                       categories, dropped_rows=dropped)


def load_categories(source) -> dict[str, str]:
    """Read a ``label,category`` sidecar file (header line optional)."""
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        lines = Path(source).read_text().splitlines()
    out: dict[str, str] = {}
    for i, line in enumerate(lines):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise PanelError(f"bad category line {i + 1}: {line!r}")
        if i == 0 and parts == ["label", "category"]:
            continue
        if parts[0] in out:
            raise DuplicateLabelError(f"label {parts[0]!r} appears twice in category file")
        out[parts[0]] = parts[1]
    if not out:
        raise PanelError("empty category file")
    return out


def with_categories(panel: ReturnPanel, categories: Mapping[str, str]) -> ReturnPanel:
    return replace(panel, categories=dict(categories))


def write_panel(panel: ReturnPanel, path, comment: str | None = None) -> None:
    """Serialise a panel back to CSV (17 significant digits, exact round-trip)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        if comment is not None:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["date", *panel.labels])
        for date, row in zip(panel.dates, panel.values):
            writer.writerow([date.isoformat(), *[fmt(v) for v in row]])


def to_returns(prices: ReturnPanel, method: str = "log") -> ReturnPanel:
    """Convert a price panel to returns (one fewer row).

    ``log`` computes ln(p_t / p_{t-1}) and requires strictly positive prices;
    ``arithmetic`` computes p_t / p_{t-1} - 1.
    """
    if method not in ("log", "arithmetic"):
        raise PanelError(f"unknown return method {method!r}")
    p = prices.values
    if method == "log":
        if np.any(p <= 0):
            i, j = np.argwhere(p <= 0)[0]
            raise NonPositivePriceError(
                f"non-positive price for {prices.labels[j]!r} on {prices.dates[i]}")
        vals = np.log(p[1:] / p[:-1])
    else:
        vals = p[1:] / p[:-1] - 1.0
    return ReturnPanel(prices.dates[1:], prices.labels, vals, prices.categories)


def standardize(panel: ReturnPanel,
                stats: tuple[np.ndarray, np.ndarray] | None = None) -> StandardizedPanel:
    """Standardise each column to zero mean and unit standard deviation.

    Statistics come from the panel itself by default (sample sd, n-1
    convention) or from an externally supplied ``(mean, sd)`` pair, e.g. to
    apply in-sample statistics out of window.
    """
    if stats is None:
        mean = panel.values.mean(axis=0)
        std = panel.values.std(axis=0, ddof=1)
    else:
        mean = np.asarray(stats[0], dtype=np.float64)
        std = np.asarray(stats[1], dtype=np.float64)
        if mean.shape != (panel.d,) or std.shape != (panel.d,):
            raise PanelError("external stats must have one entry per column")
    for j in range(panel.d):
        if not std[j] > 0:
            raise ZeroVarianceError(panel.labels[j])
    return StandardizedPanel(panel, mean, std, (panel.values - mean) / std)


def month_end_indices(dates: Sequence[dt.date]) -> list[int]:
    """Row indices of the last available date within each calendar month."""
    out = []
    for i, date in enumerate(dates):
        if i + 1 == len(dates) or (dates[i + 1].year, dates[i + 1].month) != (date.year, date.month):
            out.append(i)
    return out


def rolling_windows(panel: ReturnPanel,
                    spec: WindowSpec) -> list[tuple[dt.date, ReturnPanel]]:
    """All full-width windows, as ``(window end date, sub-panel)`` pairs.

    With a stride, window k covers rows [k*stride, k*stride + width). With
    month-end anchoring, one window per calendar month whose last available
    date has at least ``width`` history rows.
    """
    if panel.n < spec.width:
        raise InsufficientDataError(
            f"panel has {panel.n} rows, shorter than window width {spec.width}")
    ends: Iterable[int]
    if spec.month_end:
        ends = [i for i in month_end_indices(panel.dates) if i + 1 >= spec.width]
    else:
        ends = range(spec.width - 1, panel.n, spec.stride)
    out = []
    for end in ends:
        window = panel.rows(end + 1 - spec.width, end + 1)
        out.append((panel.dates[end], window))
    return out
