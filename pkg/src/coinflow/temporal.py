"""Day-of-week and hour-of-day activity aggregation.

Timestamps are converted with a fixed UTC offset (default -4, the New York
summer offset) rather than a DST-aware zone: the aggregation is meant to
line up with stock-exchange hours, and a single fixed offset keeps every
bucket boundary deterministic. Transaction counts are distinct
transactions, not transfer rows; coin volume sums only the positive
(receiving) side so coins moved are not double-counted.
"""

import csv
import datetime as dt
from dataclasses import dataclass
from typing import IO, Iterable, Iterator

from .errors import OverlappingPeriods
from .ledger import Transfer

DEFAULT_TZ_OFFSET_HOURS = -4

DAY_NAMES = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday")
HOUR_BUCKETS = 12  # 2-hour buckets: [0,2), [2,4), ... [22,24)


def to_local(ts: int, offset_hours: int = DEFAULT_TZ_OFFSET_HOURS) -> dt.datetime:
    """Naive local datetime under a fixed UTC offset (proleptic Gregorian)."""
    return dt.datetime.fromtimestamp(
        ts + offset_hours * 3600, tz=dt.timezone.utc
    ).replace(tzinfo=None)


@dataclass(frozen=True)
class AnalysisPeriod:
    """Inclusive date range spanning whole weeks."""

    start: dt.date
    end: dt.date

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError(f"period start {self.start} after end {self.end}")
        if (self.end - self.start).days % 7 != 6:
            raise ValueError(
                f"period {self.start}..{self.end} does not span whole weeks"
            )

    def contains(self, day: dt.date) -> bool:
        return self.start <= day <= self.end


# The three 2017 stretches with consistently fast block confirmation, in
# which a block timestamp is a faithful transaction time (27 weeks total).
DEFAULT_PERIODS = (
    AnalysisPeriod(dt.date(2017, 1, 2), dt.date(2017, 4, 23)),
    AnalysisPeriod(dt.date(2017, 7, 3), dt.date(2017, 8, 13)),
    AnalysisPeriod(dt.date(2017, 9, 4), dt.date(2017, 10, 8)),
)


def _check_disjoint(periods: Iterable[AnalysisPeriod]) -> list[AnalysisPeriod]:
    ordered = sorted(periods, key=lambda p: p.start)
    for a, b in zip(ordered, ordered[1:]):
        if b.start <= a.end:
            raise OverlappingPeriods(f"{a.start}..{a.end} overlaps {b.start}..{b.end}")
    return ordered


def filter_periods(
    transfers: Iterable[Transfer],
    periods: Iterable[AnalysisPeriod],
    offset_hours: int = DEFAULT_TZ_OFFSET_HOURS,
) -> Iterator[Transfer]:
    """Keep transfers whose local date falls inside any period (inclusive)."""
    ordered = _check_disjoint(periods)
    for t in transfers:
        day = to_local(t.timestamp, offset_hours).date()
        if any(p.contains(day) for p in ordered):
            yield t


@dataclass
class DailyAggregate:
    tx_counts: list[int]     # index 0 = Monday
    coin_volumes: list[int]  # satoshis received, index 0 = Monday

    @property
    def total_txs(self) -> int:
        return sum(self.tx_counts)

    @property
    def total_volume(self) -> int:
        return sum(self.coin_volumes)


@dataclass
class HourlyAggregate:
    tx_counts: list[int]     # index i = local hours [2i, 2i+2)
    coin_volumes: list[int]

    @property
    def total_txs(self) -> int:
        return sum(self.tx_counts)

    @property
    def total_volume(self) -> int:
        return sum(self.coin_volumes)


def day_of_week_aggregate(
    transfers: Iterable[Transfer], offset_hours: int = DEFAULT_TZ_OFFSET_HOURS
) -> DailyAggregate:
    tx_sets: list[set[int]] = [set() for _ in range(7)]
    volumes = [0] * 7
    for t in transfers:
        day = to_local(t.timestamp, offset_hours).weekday()
        tx_sets[day].add(t.tx)
        if t.value > 0:
            volumes[day] += t.value
    return DailyAggregate([len(s) for s in tx_sets], volumes)


def hour_of_day_aggregate(
    transfers: Iterable[Transfer], offset_hours: int = DEFAULT_TZ_OFFSET_HOURS
) -> HourlyAggregate:
    tx_sets: list[set[int]] = [set() for _ in range(HOUR_BUCKETS)]
    volumes = [0] * HOUR_BUCKETS
    for t in transfers:
        bucket = to_local(t.timestamp, offset_hours).hour // 2
        tx_sets[bucket].add(t.tx)
        if t.value > 0:
            volumes[bucket] += t.value
    return HourlyAggregate([len(s) for s in tx_sets], volumes)


# -- config and CSV interfaces ---------------------------------------------------

def load_periods(source: IO[str]) -> list[AnalysisPeriod]:
    """Parse the period config: one `start,end` ISO date pair per line."""
    periods = []
    for line in source:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        start_s, end_s = (part.strip() for part in line.split(","))
        periods.append(AnalysisPeriod(dt.date.fromisoformat(start_s), dt.date.fromisoformat(end_s)))
    return periods


def write_day_csv(agg: DailyAggregate, sink: IO[str]) -> None:
    w = csv.writer(sink)
    w.writerow(["day", "tx_count", "coin_volume_satoshis"])
    for name, txs, vol in zip(DAY_NAMES, agg.tx_counts, agg.coin_volumes):
        w.writerow([name, txs, vol])


def load_day_csv(source: IO[str]) -> DailyAggregate:
    rows = list(csv.reader(source))[1:]
    by_name = {name: (int(t), int(v)) for name, t, v in rows}
    return DailyAggregate(
        [by_name[name][0] for name in DAY_NAMES],
        [by_name[name][1] for name in DAY_NAMES],
    )


def write_hour_csv(agg: HourlyAggregate, sink: IO[str]) -> None:
    w = csv.writer(sink)
    w.writerow(["bucket_start_hour", "tx_count", "coin_volume_satoshis"])
    for i in range(HOUR_BUCKETS):
        w.writerow([2 * i, agg.tx_counts[i], agg.coin_volumes[i]])


def load_hour_csv(source: IO[str]) -> HourlyAggregate:
    rows = list(csv.reader(source))[1:]
    by_start = {int(h): (int(t), int(v)) for h, t, v in rows}
    return HourlyAggregate(
        [by_start[2 * i][0] for i in range(HOUR_BUCKETS)],
        [by_start[2 * i][1] for i in range(HOUR_BUCKETS)],
    )
