"""Exception hierarchy shared by all coinflow stages.

Everything raised on bad *data* derives from DataError so the CLI can map
it to a single exit code; programming errors (bad arguments, violated
preconditions) stay ValueError/TypeError as usual.
"""


class DataError(Exception):
    """Base class for malformed or inconsistent input data."""


# -- wire / block-file decoding ---------------------------------------------

class TruncatedInput(DataError):
    """Fewer bytes available than the encoding demands."""


class MalformedTransaction(DataError):
    """Transaction bytes violate the wire format (bad flag, zero inputs, ...)."""


class MalformedBlock(DataError):
    """Block entry has trailing bytes or an inconsistent transaction list."""


class BadMagic(DataError):
    """Unexpected bytes where a network magic was required."""

    def __init__(self, offset: int, found: bytes):
        super().__init__(f"bad network magic {found.hex()} at offset {offset}")
        self.offset = offset
        self.found = found


# -- transfer ledger ----------------------------------------------------------

class DataCarrierAddress(DataError):
    """Data-carrier scripts have no address identity and cannot be interned."""


class DuplicateTxId(DataError):
    """The same transaction hash was indexed twice."""


class UnknownOutpoint(DataError):
    """An input spends an output that was never indexed."""


class AlreadySpent(DataError):
    """An input spends an output that a previous input already consumed."""


class NegativeFee(DataError):
    """Outputs exceed resolved inputs; the ingested data is inconsistent."""


# -- analytics ----------------------------------------------------------------

class UnsortedInput(DataError):
    """A transfer stream required to be timestamp-sorted was not."""


class BadBuckets(DataError):
    """Histogram bucket edges are empty or not strictly increasing."""


class OverlappingPeriods(DataError):
    """Analysis periods overlap; aggregation would double-count."""


# -- market series ------------------------------------------------------------

class MalformedRow(DataError):
    """A market CSV row does not match the date,volume,value schema."""


class DuplicateDate(DataError):
    """A market series contains the same date twice."""


class WeekendAlreadyPresent(DataError):
    """Weekend extrapolation requires a series without Saturday/Sunday rows."""


class BadWindow(DataError):
    """Moving-average window must be at least 1."""


class InsufficientOverlap(DataError):
    """Fewer than 3 shared dates; correlation is undefined."""


class ConstantSeries(DataError):
    """A constant series has zero variance; correlation is undefined."""


class MissingFridayWarning(UserWarning):
    """A weekend inside the series range had no preceding Friday row."""
