"""Daily market series: normalization, weekend fill, smoothing, correlation.

Bitcoin trades continuously while stock indices pause on weekends, so the
two series are only comparable after the closed market's Friday row is
carried over Saturday and Sunday. Values are then rescaled to a common
0..100 band (min -> 0, max -> 100) and smoothed with a trailing moving
average before Pearson correlation over the shared dates.
"""

import csv
import datetime as dt
import math
import warnings
from dataclasses import dataclass, field
from typing import IO, Iterable, NamedTuple

from .errors import (
    BadWindow,
    ConstantSeries,
    DuplicateDate,
    InsufficientOverlap,
    MalformedRow,
    MissingFridayWarning,
    WeekendAlreadyPresent,
)

SATURDAY = 5


class MarketDay(NamedTuple):
    date: dt.date
    volume: float  # trades that day
    value: float   # closing quote (index level or unit price)


@dataclass
class MarketSeries:
    label: str
    rows: list[MarketDay] = field(default_factory=list)

    def dates(self) -> list[dt.date]:
        return [r.date for r in self.rows]

    def column(self, name: str) -> list[float]:
        if name not in ("volume", "value"):
            raise ValueError(f"unknown column {name!r}")
        return [getattr(r, name) for r in self.rows]

    def has_weekend_rows(self) -> bool:
        return any(r.date.weekday() >= SATURDAY for r in self.rows)


@dataclass
class NormalizedSeries:
    label: str
    points: list[tuple[dt.date, float]]
    constant_input: bool = False  # all-zero output came from a flat series

    def values(self) -> list[float]:
        return [v for _, v in self.points]


def load_market_csv(source: IO[str], label: str = "") -> MarketSeries:
    """Parse `date,volume,value` rows; sorted by date, duplicates rejected."""
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRow("empty file, expected a date,volume,value header") from None
    if [h.strip().lower() for h in header] != ["date", "volume", "value"]:
        raise MalformedRow(f"expected header date,volume,value, got {','.join(header)}")
    rows = []
    seen: set[dt.date] = set()
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise MalformedRow(f"line {lineno}: expected 3 fields, got {len(row)}")
        try:
            day = dt.date.fromisoformat(row[0].strip())
            volume = float(row[1])
            value = float(row[2])
        except ValueError as exc:
            raise MalformedRow(f"line {lineno}: {exc}") from None
        if day in seen:
            raise DuplicateDate(f"line {lineno}: {day} appears twice")
        seen.add(day)
        rows.append(MarketDay(day, volume, value))
    rows.sort(key=lambda r: r.date)
    return MarketSeries(label, rows)


def normalize(xs: list[float]) -> list[float]:
    """Rescale so the minimum maps to 0 and the maximum to 100.

    A constant list rescales to all zeros instead of dividing by zero;
    callers that care should check min == max themselves (see
    NormalizedSeries.constant_input).

    >>> normalize([0, 5, 10])
    [0.0, 50.0, 100.0]
    """
    if not xs:
        raise ValueError("cannot normalize an empty list")
    lo, hi = min(xs), max(xs)
    if hi == lo:
        return [0.0] * len(xs)
    span = hi - lo
    return [(x - lo) / span * 100.0 for x in xs]


def normalize_series(series: MarketSeries, column: str = "volume") -> NormalizedSeries:
    xs = series.column(column)
    scaled = normalize(xs)
    return NormalizedSeries(
        series.label,
        list(zip(series.dates(), scaled)),
        constant_input=bool(xs) and min(xs) == max(xs),
    )


def extrapolate_weekends(series: MarketSeries) -> MarketSeries:
    """Fill Saturday/Sunday with the preceding Friday's volume and value.

    Input must contain no weekend rows (it represents a closed market).
    Existing rows are copied untouched; a weekend inside the range whose
    Friday row is missing is skipped with a MissingFridayWarning.
    """
    weekend = [r for r in series.rows if r.date.weekday() >= SATURDAY]
    if weekend:
        raise WeekendAlreadyPresent(f"{series.label or 'series'} already has {weekend[0].date}")
    by_date = {r.date: r for r in series.rows}
    out = list(series.rows)
    for row in series.rows:
        if row.date.weekday() == 4:  # Friday
            out.append(MarketDay(row.date + dt.timedelta(days=1), row.volume, row.value))
            out.append(MarketDay(row.date + dt.timedelta(days=2), row.volume, row.value))
    if series.rows:
        first, last = series.rows[0].date, series.rows[-1].date
        day = first
        while day <= last:
            if day.weekday() == SATURDAY and day - dt.timedelta(days=1) not in by_date:
                warnings.warn(
                    f"weekend of {day} has no preceding Friday row, left empty",
                    MissingFridayWarning,
                )
            day += dt.timedelta(days=1)
    out.sort(key=lambda r: r.date)
    return MarketSeries(series.label, out)


def moving_average(xs: list[float], window: int) -> list[float]:
    """Trailing mean over the last ``window`` points, same length as input.

    The first window-1 outputs average the shorter available prefix, so no
    output ever looks ahead and alignment with the input dates is exact.

    >>> moving_average([1, 2, 3, 4], 2)
    [1.0, 1.5, 2.5, 3.5]
    """
    if window < 1:
        raise BadWindow(f"window must be >= 1, got {window}")
    out = []
    for i in range(len(xs)):
        lo = max(0, i - window + 1)
        out.append(math.fsum(xs[lo : i + 1]) / (i + 1 - lo))
    return out


def align_and_correlate(a: NormalizedSeries, b: NormalizedSeries) -> tuple[float, int]:
    """Pearson correlation over the dates both series cover.

    Returns (r, joined count). Undefined for fewer than 3 shared points or
    when either joined side is constant.
    """
    b_by_date = dict(b.points)
    pairs = [(va, b_by_date[d]) for d, va in a.points if d in b_by_date]
    n = len(pairs)
    if n < 3:
        raise InsufficientOverlap(f"only {n} shared dates between {a.label!r} and {b.label!r}")
    xs = [p[0] for p in pairs]
    ys = [p[1] for p in pairs]
    mean_x = math.fsum(xs) / n
    mean_y = math.fsum(ys) / n
    var_x = math.fsum((x - mean_x) ** 2 for x in xs)
    var_y = math.fsum((y - mean_y) ** 2 for y in ys)
    if var_x == 0.0 or var_y == 0.0:
        which = a.label if var_x == 0.0 else b.label
        raise ConstantSeries(f"{which!r} is constant over the joined range")
    cov = math.fsum((x - mean_x) * (y - mean_y) for x, y in pairs)
    return cov / math.sqrt(var_x * var_y), n


# -- CSV interfaces ---------------------------------------------------------------

class ComparisonRow(NamedTuple):
    date: dt.date
    a_norm: float
    b_norm: float
    a_ma: float
    b_ma: float


def write_comparison(rows: Iterable[ComparisonRow], sink: IO[str]) -> None:
    w = csv.writer(sink)
    w.writerow(["date", "a_norm", "b_norm", "a_ma", "b_ma"])
    for r in rows:
        w.writerow([r.date.isoformat(), repr(r.a_norm), repr(r.b_norm), repr(r.a_ma), repr(r.b_ma)])


def load_comparison(source: IO[str]) -> list[ComparisonRow]:
    rows = list(csv.reader(source))
    return [
        ComparisonRow(dt.date.fromisoformat(d), float(an), float(bn), float(am), float(bm))
        for d, an, bn, am, bm in rows[1:]
    ]
