"""Bitcoin block-file parsing, transfer extraction, and market analytics."""

from .blocks import (
    COIN,
    MAINNET_MAGIC,
    REGTEST_MAGIC,
    BlockHeader,
    Transaction,
    TxInput,
    TxOutput,
    compute_txid,
    double_sha256,
    hash_display,
    iterate_block_file,
    iterate_hex_blocks,
    parse_block,
    parse_block_header,
    parse_transaction,
    read_varint,
    serialize_block,
    serialize_transaction,
    write_block_file,
    write_varint,
)
from .ledger import (
    Transfer,
    TransferLedger,
    TransferPipeline,
    extract_transfers,
    read_transfers,
    write_transfers,
)
from .scripts import AddressDescriptor, ScriptKind, extract_address
from .investors import (
    InvestorRecord,
    UsageHistogram,
    address_usage_histogram,
    classify_investors,
    investment_distribution,
)
from .temporal import (
    AnalysisPeriod,
    DailyAggregate,
    HourlyAggregate,
    day_of_week_aggregate,
    filter_periods,
    hour_of_day_aggregate,
    to_local,
)
from .market import (
    MarketDay,
    MarketSeries,
    NormalizedSeries,
    align_and_correlate,
    extrapolate_weekends,
    load_market_csv,
    moving_average,
    normalize,
    normalize_series,
)

__version__ = "0.1.0"
