"""Command-line pipeline: parse -> analyze -> compare.

Progress and counters go to stderr; results go to files under --out (and
nowhere else), so the subcommands compose in shell pipelines. Exit codes:
0 success, 1 usage error, 2 data error.
"""

import argparse
import datetime as dt
import sys
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Iterator, TypeVar

from . import blocks, investors, ledger, market, temporal
from .errors import DataError

USAGE_ERROR = 1
DATA_ERROR = 2

T = TypeVar("T")
U = TypeVar("U")

MAGICS = {"mainnet": blocks.MAINNET_MAGIC, "regtest": blocks.REGTEST_MAGIC}


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; this tool reserves 2 for data errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _magic(text: str) -> bytes:
    if text.lower() in MAGICS:
        return MAGICS[text.lower()]
    try:
        raw = bytes.fromhex(text)
    except ValueError:
        raw = b""
    if len(raw) != 4:
        raise argparse.ArgumentTypeError(
            f"magic must be 'mainnet', 'regtest' or 8 hex digits, got {text!r}"
        )
    return raw


def _date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an ISO date, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coinflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", parser_class=_Parser, help="decode block files into transfers.bin")
    p.add_argument("--block-dir", type=Path, required=True, help="directory of *.dat / *.hex block files")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--magic", type=_magic, default=blocks.MAINNET_MAGIC,
                   help="network magic: mainnet, regtest or 8 hex digits (default mainnet)")
    p.add_argument("--threads", type=int, default=1, help="parallel block decoders (default 1)")
    p.add_argument("--no-prune", action="store_true",
                   help="keep spent outpoints in memory (audit mode, exact double-spend reports)")

    a = sub.add_parser("analyze", parser_class=_Parser, help="derive CSV analytics from transfers.bin")
    a.add_argument("--out", type=Path, required=True, help="directory holding transfers.bin; CSVs land here")
    a.add_argument("--tz-offset", type=int, default=temporal.DEFAULT_TZ_OFFSET_HOURS,
                   help="fixed UTC offset in hours for calendar bucketing (default -4)")
    a.add_argument("--investor-window", type=int, default=30, help="holding window in days (default 30)")
    a.add_argument("--investor-start", type=_date, default=dt.date(2013, 1, 1),
                   help="ignore transfers before this date when classifying investors")
    a.add_argument("--periods", type=Path, default=None,
                   help="period config file (start,end ISO dates per line); default: three 2017 stretches")

    c = sub.add_parser("compare", parser_class=_Parser, help="compare two daily market CSVs")
    c.add_argument("btc_csv", type=Path, help="date,volume,value CSV for the always-open market")
    c.add_argument("market_csv", type=Path, help="date,volume,value CSV for the weekday market")
    c.add_argument("--out", type=Path, required=True, help="output directory")
    c.add_argument("--ma-window", type=int, default=7, help="moving-average window in days (default 7)")
    c.add_argument("--column", choices=("volume", "value"), default="volume",
                   help="which column to compare (default volume)")
    c.add_argument("--smooth-first", action="store_true",
                   help="apply the moving average before rescaling instead of after")
    return parser


def _bounded_parallel_map(fn: Callable[[T], U], items: Iterable[T], workers: int) -> Iterator[U]:
    """Order-preserving map with a bounded in-flight window."""
    if workers <= 1:
        yield from map(fn, items)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        in_flight: deque = deque()
        for item in items:
            in_flight.append(pool.submit(fn, item))
            if len(in_flight) >= workers * 4:
                yield in_flight.popleft().result()
        while in_flight:
            yield in_flight.popleft().result()


def _block_files(block_dir: Path) -> list[Path]:
    return sorted(p for p in block_dir.iterdir() if p.suffix in (".dat", ".hex"))


def cmd_parse(args) -> int:
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    pipeline = ledger.TransferPipeline(prune_spent=not args.no_prune)
    transfer_count = 0
    with open(out / "transfers.bin", "wb") as sink:
        for path in _block_files(args.block_dir):
            try:
                if path.suffix == ".hex":
                    with open(path, "r") as f:
                        parsed = blocks.iterate_hex_blocks(f)
                        for header, txs in parsed:
                            transfer_count += ledger.write_transfers(
                                pipeline.add_block(header, txs), sink)
                else:
                    with open(path, "rb") as f:
                        raw_iter = blocks.iterate_raw_blocks(f, args.magic)
                        for header, txs in _bounded_parallel_map(
                                blocks.parse_block, raw_iter, args.threads):
                            transfer_count += ledger.write_transfers(
                                pipeline.add_block(header, txs), sink)
            except DataError as exc:
                raise DataError(f"{path}: {exc}") from exc
        pipeline.finish()
    with open(out / "txids.dict", "wb") as f:
        ledger.write_txid_dict(pipeline.ledger.txids, f)
    with open(out / "addrs.dict", "wb") as f:
        ledger.write_address_dict(pipeline.ledger.addresses, f)
    print(
        f"blocks {pipeline.block_count}  transactions {pipeline.tx_count}  "
        f"transfers {transfer_count}  addresses {len(pipeline.ledger.addresses)}",
        file=sys.stderr,
    )
    return 0


def _epoch(day: dt.date) -> int:
    return int(dt.datetime(day.year, day.month, day.day, tzinfo=dt.timezone.utc).timestamp())


def cmd_analyze(args) -> int:
    out: Path = args.out
    transfers_path = out / "transfers.bin"
    if not transfers_path.exists():
        raise DataError(f"{transfers_path} not found; run `coinflow parse` first")
    with open(transfers_path, "rb") as f:
        transfers = list(ledger.read_transfers(f))
    transfers.sort(key=lambda t: t.timestamp)

    histogram = investors.address_usage_histogram(transfers)
    with open(out / "usage_histogram.csv", "w", newline="") as f:
        investors.write_usage_histogram(histogram, f)

    found = investors.classify_investors(
        transfers, start=_epoch(args.investor_start), window=args.investor_window * 86400
    )
    with open(out / "investors.csv", "w", newline="") as f:
        investors.write_investors(found, f)
    with open(out / "investment_hist.csv", "w", newline="") as f:
        investors.write_investment_hist(investors.investment_distribution(found), f)

    if args.periods is not None:
        with open(args.periods) as f:
            periods = temporal.load_periods(f)
    else:
        periods = list(temporal.DEFAULT_PERIODS)
    in_period = list(temporal.filter_periods(transfers, periods, args.tz_offset))
    with open(out / "per_day.csv", "w", newline="") as f:
        temporal.write_day_csv(temporal.day_of_week_aggregate(in_period, args.tz_offset), f)
    with open(out / "per_hour.csv", "w", newline="") as f:
        temporal.write_hour_csv(temporal.hour_of_day_aggregate(in_period, args.tz_offset), f)

    print(
        f"transfers {len(transfers)}  addresses {histogram.total_addresses}  "
        f"investors {len(found)}  in-period transfers {len(in_period)}",
        file=sys.stderr,
    )
    return 0


def cmd_compare(args) -> int:
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    series = []
    for path in (args.btc_csv, args.market_csv):
        with open(path, newline="") as f:
            s = market.load_market_csv(f, label=path.stem)
        if not s.has_weekend_rows():
            s = market.extrapolate_weekends(s)
        series.append(s)
    a_raw, b_raw = series

    def pipeline(s: market.MarketSeries) -> tuple[market.NormalizedSeries, market.NormalizedSeries]:
        if args.smooth_first:
            smoothed = market.moving_average(s.column(args.column), args.ma_window)
            pre = market.MarketSeries(s.label, [
                market.MarketDay(r.date, v, v) for r, v in zip(s.rows, smoothed)])
            norm = market.normalize_series(s, args.column)
            final = market.normalize_series(pre, args.column)
        else:
            norm = market.normalize_series(s, args.column)
            final = market.NormalizedSeries(
                s.label,
                list(zip(s.dates(), market.moving_average(norm.values(), args.ma_window))),
                norm.constant_input,
            )
        return norm, final

    a_norm, a_final = pipeline(a_raw)
    b_norm, b_final = pipeline(b_raw)

    b_norm_by_date = dict(b_norm.points)
    b_final_by_date = dict(b_final.points)
    rows = [
        market.ComparisonRow(d, an, b_norm_by_date[d], af, b_final_by_date[d])
        for (d, an), (_, af) in zip(a_norm.points, a_final.points)
        if d in b_norm_by_date
    ]
    with open(out / "comparison.csv", "w", newline="") as f:
        market.write_comparison(rows, f)

    r, n = market.align_and_correlate(a_final, b_final)
    with open(out / "correlation.txt", "w") as f:
        f.write(f"r = {r!r}\n")
        f.write(f"n = {n}\n")
        f.write(f"window = {args.ma_window}\n")
        f.write(f"column = {args.column}\n")
        f.write(f"order = {'smooth,normalize' if args.smooth_first else 'normalize,smooth'}\n")
        f.write(f"a = {a_final.label}{' (constant)' if a_final.constant_input else ''}\n")
        f.write(f"b = {b_final.label}{' (constant)' if b_final.constant_input else ''}\n")
    print(f"r={r:.6f} over {n} shared days", file=sys.stderr)
    return 0


COMMANDS = {"parse": cmd_parse, "analyze": cmd_analyze, "compare": cmd_compare}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except DataError as exc:
        print(f"coinflow {args.command}: {exc}", file=sys.stderr)
        return DATA_ERROR
    except OSError as exc:
        print(f"coinflow {args.command}: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
