"""Address-reuse statistics and investor classification.

An address counts as an investor when, from one of its incoming transfers
onward, a full holding window (30 days by default) passes without a single
outgoing transfer. The qualifying amount is the sum of everything received
inside the earliest such window. Addresses that appear in exactly two
transfer rows (one receipt, one spend) are the single-use pattern that
wallet software produces when change goes to a fresh address, so the
two-row fraction doubles as a privacy-hygiene measure.
"""

import bisect
import csv
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import IO, Iterable, NamedTuple

from .blocks import COIN
from .errors import BadBuckets, UnsortedInput
from .ledger import Transfer

THIRTY_DAYS = 30 * 86400
DEFAULT_BUCKET_EDGES_COINS = (0.1, 1.0, 10.0, 100.0, 1_000.0, 10_000.0)


@dataclass
class UsageHistogram:
    """appearance count -> number of addresses appearing that many times."""

    bins: dict[int, int]
    two_transfer_fraction: float

    @property
    def total_addresses(self) -> int:
        return sum(self.bins.values())


class InvestorRecord(NamedTuple):
    address: int
    window_start: int    # timestamp of the receipt anchoring the clean window
    total_received: int  # satoshis received inside [window_start, window_start + window)
    first_seen: int      # first considered transfer of this address


class Bucket(NamedTuple):
    low_coins: float
    high_coins: float
    count: int


def address_usage_histogram(transfers: Iterable[Transfer]) -> UsageHistogram:
    """Cluster addresses by how many transfer rows they occur in."""
    per_address: Counter[int] = Counter()
    for t in transfers:
        per_address[t.address] += 1
    bins: Counter[int] = Counter(per_address.values())
    total = sum(bins.values())
    fraction = bins.get(2, 0) / total if total else 0.0
    return UsageHistogram(dict(bins), fraction)


def classify_investors(
    transfers: Iterable[Transfer],
    start: int,
    window: int = THIRTY_DAYS,
) -> list[InvestorRecord]:
    """Find receive-only addresses over a holding window.

    ``transfers`` must be sorted by timestamp. Only transfers at or after
    ``start`` are considered at all. An address qualifies if some window
    ``[w, w + window)`` anchored at one of its receipts contains no spend;
    the earliest qualifying window is reported.
    """
    incoming: dict[int, list[tuple[int, int]]] = defaultdict(list)  # addr -> [(ts, value)]
    outgoing: dict[int, list[int]] = defaultdict(list)              # addr -> [ts]
    first_seen: dict[int, int] = {}
    prev_ts = None
    for t in transfers:
        if prev_ts is not None and t.timestamp < prev_ts:
            raise UnsortedInput(
                f"transfer at {t.timestamp} after one at {prev_ts}; sort by timestamp first"
            )
        prev_ts = t.timestamp
        if t.timestamp < start:
            continue
        first_seen.setdefault(t.address, t.timestamp)
        if t.value > 0:
            incoming[t.address].append((t.timestamp, t.value))
        else:
            outgoing[t.address].append(t.timestamp)

    investors = []
    for address, receipts in incoming.items():
        spends = outgoing.get(address, ())
        for anchor, _ in receipts:
            lo = bisect.bisect_left(spends, anchor)
            if lo < len(spends) and spends[lo] < anchor + window:
                continue  # a spend falls inside this window
            total = sum(v for ts, v in receipts if anchor <= ts < anchor + window)
            investors.append(InvestorRecord(address, anchor, total, first_seen[address]))
            break
    investors.sort(key=lambda r: r.address)
    return investors


def investment_distribution(
    investors: Iterable[InvestorRecord],
    bucket_edges_coins: Iterable[float] = DEFAULT_BUCKET_EDGES_COINS,
) -> list[Bucket]:
    """Count investors per half-open [low, high) total-received bucket.

    Edges are in coins; an underflow bucket below the first edge and an
    overflow bucket at/above the last are added automatically.
    """
    edges = list(bucket_edges_coins)
    if not edges or any(b <= a for a, b in zip(edges, edges[1:])):
        raise BadBuckets(f"edges must be strictly increasing, got {edges}")
    edges_sat = [round(e * COIN) for e in edges]
    bounds = [0] + edges_sat  # bucket i covers [bounds[i], bounds[i+1])
    counts = [0] * (len(edges_sat) + 1)
    for record in investors:
        counts[bisect.bisect_right(edges_sat, record.total_received)] += 1
    buckets = []
    for i, count in enumerate(counts):
        low = bounds[i] / COIN
        high = edges[i] if i < len(edges) else float("inf")
        buckets.append(Bucket(low, high, count))
    return buckets


# -- CSV interfaces -------------------------------------------------------------

def write_usage_histogram(histogram: UsageHistogram, sink: IO[str]) -> None:
    w = csv.writer(sink)
    w.writerow(["appearances", "count"])
    for appearances in sorted(histogram.bins):
        w.writerow([appearances, histogram.bins[appearances]])


def load_usage_histogram(source: IO[str]) -> UsageHistogram:
    rows = list(csv.reader(source))
    bins = {int(a): int(c) for a, c in rows[1:]}
    total = sum(bins.values())
    return UsageHistogram(bins, bins.get(2, 0) / total if total else 0.0)


def write_investors(investors: Iterable[InvestorRecord], sink: IO[str]) -> None:
    w = csv.writer(sink)
    w.writerow(["address_id", "window_start", "total_received_satoshis"])
    for r in investors:
        w.writerow([r.address, r.window_start, r.total_received])


def load_investors(source: IO[str]) -> list[tuple[int, int, int]]:
    """Rows as (address_id, window_start, total_received_satoshis)."""
    rows = list(csv.reader(source))
    return [(int(a), int(w), int(v)) for a, w, v in rows[1:]]


def write_investment_hist(buckets: Iterable[Bucket], sink: IO[str]) -> None:
    w = csv.writer(sink)
    w.writerow(["bucket_low_coins", "bucket_high_coins", "count"])
    for b in buckets:
        w.writerow([b.low_coins, b.high_coins, b.count])


def load_investment_hist(source: IO[str]) -> list[Bucket]:
    rows = list(csv.reader(source))
    return [Bucket(float(lo), float(hi), int(c)) for lo, hi, c in rows[1:]]
