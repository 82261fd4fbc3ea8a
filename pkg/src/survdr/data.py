"""Survival data container, validation, standardization, and CSV ingestion."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SurvivalDataset",
    "RiskSetOrder",
    "CsvFormatError",
    "load_csv",
    "to_csv",
    "standardize",
    "risk_set_order",
]


class CsvFormatError(ValueError):
    """Raised when a CSV file cannot be parsed into a survival dataset."""


def _validated_arrays(x, y, delta):
    x = np.array(x, dtype=float, copy=True)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError(f"x must be a 2-d array, got ndim={x.ndim}")
    y = np.array(y, dtype=float, copy=True).ravel()
    delta = np.asarray(delta)
    if not np.isin(delta, (0, 1)).all():
        bad = int(np.flatnonzero(~np.isin(delta, (0, 1)))[0])
        raise ValueError(
            f"delta must contain only 0 or 1, found {delta.ravel()[bad]!r} at index {bad}"
        )
    delta = np.array(delta, dtype=np.int64, copy=True).ravel()

    n, p = x.shape
    if n < 2:
        raise ValueError(f"need at least 2 observations, got n={n}")
    if p < 1:
        raise ValueError("need at least one covariate column")
    if y.shape[0] != n or delta.shape[0] != n:
        raise ValueError(
            f"length mismatch: x has {n} rows, y has {y.shape[0]}, delta has {delta.shape[0]}"
        )
    if not np.isfinite(x).all():
        i, j = map(int, np.argwhere(~np.isfinite(x))[0])
        raise ValueError(f"non-finite covariate x[{i}, {j}] = {x[i, j]}")
    if not np.isfinite(y).all():
        i = int(np.flatnonzero(~np.isfinite(y))[0])
        raise ValueError(f"non-finite observed time y[{i}] = {y[i]}")
    if (y <= 0).any():
        i = int(np.flatnonzero(y <= 0)[0])
        raise ValueError(f"observed times must be strictly positive, found y[{i}] = {y[i]}")
    if delta.sum() == 0:
        raise ValueError("dataset has no observed failures (all delta = 0)")
    return x, y, delta


@dataclass(frozen=True)
class SurvivalDataset:
    """Right-censored survival sample.

    Holds ``n`` observations of the triple (covariates, observed time,
    event indicator), where the observed time is the minimum of the
    failure and censoring times and the indicator is 1 when the failure
    was observed.  Arrays are validated and frozen at construction so a
    dataset can be shared freely across threads and processes.

    Attributes
    ----------
    x : ndarray of shape (n, p)
        Covariate matrix.
    y : ndarray of shape (n,)
        Observed times, strictly positive.
    delta : ndarray of shape (n,)
        Event indicators in {0, 1}, at least one 1.
    names : tuple of str, optional
        Covariate labels, one per column of ``x``.
    """

    x: np.ndarray
    y: np.ndarray
    delta: np.ndarray
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        x, y, delta = _validated_arrays(self.x, self.y, self.delta)
        if self.names is not None:
            names = tuple(str(s) for s in self.names)
            if len(names) != x.shape[1]:
                raise ValueError(
                    f"{len(names)} covariate names given for {x.shape[1]} columns"
                )
            object.__setattr__(self, "names", names)
        for arr in (x, y, delta):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "delta", delta)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def n_events(self) -> int:
        return int(self.delta.sum())

    def subset(self, idx) -> "SurvivalDataset":
        """Dataset restricted to (or resampled at) the given row indices."""
        idx = np.asarray(idx)
        return SurvivalDataset(self.x[idx], self.y[idx], self.delta[idx], self.names)


def load_csv(path, time: str, status: str, covariates: list[str] | None = None) -> SurvivalDataset:
    """Read a survival dataset from an RFC-4180 style CSV file.

    The file must have a header row naming every column, UTF-8 text and
    '.' as the decimal separator.  Rows with a missing or unparseable
    field are rejected with an error locating the offending row and
    column; nothing is dropped silently.

    Parameters
    ----------
    path : str or Path
        File to read.
    time : str
        Name of the observed-time column.
    status : str
        Name of the event-indicator column, coded 0/1.
    covariates : list of str, optional
        Covariate columns, in order.  Defaults to every column other
        than `time` and `status`, in header order.

    Returns
    -------
    SurvivalDataset
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        col_index = {name: i for i, name in enumerate(header)}
        for required in (time, status):
            if required not in col_index:
                raise CsvFormatError(f"{path}: column {required!r} not found in header {header}")
        if covariates is None:
            covariates = [h for h in header if h not in (time, status)]
        if not covariates:
            raise CsvFormatError(f"{path}: no covariate columns")
        for name in covariates:
            if name not in col_index:
                raise CsvFormatError(f"{path}: covariate column {name!r} not found in header")

        wanted = [time, status, *covariates]
        rows_y, rows_d, rows_x = [], [], []
        for r, record in enumerate(reader, start=1):
            if len(record) != len(header):
                raise CsvFormatError(
                    f"{path}: row {r} has {len(record)} fields, header has {len(header)}"
                )
            values = {}
            for name in wanted:
                raw = record[col_index[name]].strip()
                if raw == "":
                    raise CsvFormatError(f"{path}: missing value in row {r}, column {name!r}")
                try:
                    values[name] = float(raw)
                except ValueError:
                    raise CsvFormatError(
                        f"{path}: cannot parse {raw!r} in row {r}, column {name!r}"
                    ) from None
            d = values[status]
            if d not in (0.0, 1.0):
                raise CsvFormatError(
                    f"{path}: status column {status!r} has value {record[col_index[status]].strip()!r}"
                    f" in row {r}, expected 0 or 1"
                )
            if not math.isfinite(values[time]) or values[time] <= 0:
                raise CsvFormatError(
                    f"{path}: time column {time!r} must be positive and finite,"
                    f" got {values[time]} in row {r}"
                )
            rows_y.append(values[time])
            rows_d.append(int(d))
            rows_x.append([values[name] for name in covariates])

    if not rows_y:
        raise CsvFormatError(f"{path}: no data rows")
    return SurvivalDataset(
        np.asarray(rows_x, dtype=float),
        np.asarray(rows_y, dtype=float),
        np.asarray(rows_d, dtype=np.int64),
        names=tuple(covariates),
    )


def to_csv(ds: SurvivalDataset, path, time: str = "time", status: str = "status") -> None:
    """Write a dataset in the format read back by :func:`load_csv`."""
    names = list(ds.names) if ds.names is not None else [f"x{j + 1}" for j in range(ds.p)]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([time, status, *names])
        for i in range(ds.n):
            writer.writerow(
                [repr(float(ds.y[i])), int(ds.delta[i]), *(repr(float(v)) for v in ds.x[i])]
            )


def standardize(ds: SurvivalDataset):
    """Rescale each covariate column to sample mean 0 and sample sd 1.

    Uses the sample standard deviation (ddof=1).  Times and event
    indicators are unchanged.

    Returns
    -------
    (SurvivalDataset, ndarray, ndarray)
        The standardized dataset plus the per-column means and sds, so
        fitted directions can be mapped back to the original scale.
    """
    means = ds.x.mean(axis=0)
    sds = ds.x.std(axis=0, ddof=1)
    if (sds <= 0).any():
        j = int(np.flatnonzero(sds <= 0)[0])
        label = ds.names[j] if ds.names is not None else f"column {j}"
        raise ValueError(f"cannot standardize constant covariate {label}")
    out = SurvivalDataset((ds.x - means) / sds, ds.y, ds.delta, ds.names)
    return out, means, sds


@dataclass(frozen=True)
class RiskSetOrder:
    """Sorting of a dataset by observed time.

    ``order`` maps sorted positions to original indices; ties in time
    put events before censorings and break remaining ties by original
    index.  ``event_positions`` lists the sorted positions carrying an
    event, in time order.  Suffix sums over the sorted arrays evaluate
    every risk-set sum of the form sum_j I(Y_j >= u) w_j.
    """

    order: np.ndarray
    event_positions: np.ndarray

    def __post_init__(self):
        for arr in (self.order, self.event_positions):
            arr.setflags(write=False)


def risk_set_order(ds: SurvivalDataset) -> RiskSetOrder:
    """Sort by ascending time, events first at ties, then original index."""
    n = ds.n
    order = np.lexsort((np.arange(n), 1 - ds.delta, ds.y))
    event_positions = np.flatnonzero(ds.delta[order] == 1)
    return RiskSetOrder(order, event_positions)
