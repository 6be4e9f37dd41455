"""Input-output linking and transfer-quadruple extraction.

Every transaction is flattened into signed transfer records: one negative
row per spent input, one positive row per output that pays an address.
Addresses and transaction hashes are interned to dense integer ids in
first-seen order, which keeps the persistent dataset compact and makes
two ingestion runs over the same input byte-identical.

Record layout (little-endian, 28 bytes, no file header):

    bytes  0-7   tx id        u64
    bytes  8-15  address id   u64
    bytes 16-23  value        i64 satoshis (negative = spent)
    bytes 24-27  timestamp    u32 (containing block's header timestamp)

Sidecar dictionaries map the dense ids back to raw identities:
``txids.dict`` is the raw concatenation of 32-byte hashes in id order;
``addrs.dict`` holds one ``kind-tag byte + varint payload length +
payload`` entry per address id.
"""

import struct
from typing import BinaryIO, Iterable, Iterator, NamedTuple

from .blocks import BlockHeader, Transaction, TxInput, compute_txid, hash_display, read_varint, write_varint
from .errors import (
    AlreadySpent,
    DataCarrierAddress,
    DuplicateTxId,
    NegativeFee,
    TruncatedInput,
    UnknownOutpoint,
)
from .scripts import KIND_TAGS, TAG_KINDS, AddressDescriptor, ScriptKind, extract_address

TRANSFER_STRUCT = struct.Struct("<QQqI")
TRANSFER_RECORD_SIZE = TRANSFER_STRUCT.size  # 28


class Transfer(NamedTuple):
    tx: int         # dense transaction id
    address: int    # dense address id
    value: int      # satoshis; negative when the address is the spender
    timestamp: int  # block header timestamp of the containing transaction


class TransferLedger:
    """Interning tables plus the outpoint index that links inputs to outputs.

    With ``prune_spent=True`` resolved outpoints are evicted (UTXO-style,
    bounds memory on long chains) and a double spend surfaces as
    UnknownOutpoint; with the default audit mode entries are kept and a
    double spend raises AlreadySpent.
    """

    def __init__(self, prune_spent: bool = False):
        self.prune_spent = prune_spent
        self._addr_ids: dict[AddressDescriptor, int] = {}
        self._addr_by_id: list[AddressDescriptor] = []
        self._tx_ids: dict[bytes, int] = {}
        self._tx_by_id: list[bytes] = []
        self._indexed: set[bytes] = set()
        # outpoint -> [address id, value, spent]
        self._outpoints: dict[tuple[bytes, int], list] = {}

    # -- interning ---------------------------------------------------------

    def intern_address(self, descriptor: AddressDescriptor) -> int:
        """Dense id for a descriptor, allocating in first-seen order."""
        if descriptor.kind is ScriptKind.DATA_CARRIER:
            raise DataCarrierAddress("data-carrier outputs have no address identity")
        existing = self._addr_ids.get(descriptor)
        if existing is not None:
            return existing
        new_id = len(self._addr_by_id)
        self._addr_ids[descriptor] = new_id
        self._addr_by_id.append(descriptor)
        return new_id

    def intern_txid(self, txhash: bytes) -> int:
        existing = self._tx_ids.get(txhash)
        if existing is not None:
            return existing
        new_id = len(self._tx_by_id)
        self._tx_ids[txhash] = new_id
        self._tx_by_id.append(txhash)
        return new_id

    @property
    def addresses(self) -> list[AddressDescriptor]:
        return self._addr_by_id

    @property
    def txids(self) -> list[bytes]:
        return self._tx_by_id

    # -- outpoint index ------------------------------------------------------

    def index_outputs(self, tx: Transaction, txhash: bytes | None = None) -> None:
        """Register every address-bearing output of ``tx`` as spendable.

        Data-carrier outputs are skipped: they pay nobody and are never
        spendable. Zero-value outputs are still indexed (they can be spent)
        even though they never produce a transfer row.
        """
        if txhash is None:
            txhash = compute_txid(tx)
        if txhash in self._indexed:
            raise DuplicateTxId(f"transaction {hash_display(txhash)} indexed twice")
        self._indexed.add(txhash)
        self.intern_txid(txhash)
        for vout, output in enumerate(tx.outputs):
            descriptor = extract_address(output.script_pubkey)
            if descriptor.kind is ScriptKind.DATA_CARRIER:
                continue
            addr_id = self.intern_address(descriptor)
            self._outpoints[(txhash, vout)] = [addr_id, output.value, False]

    def is_resolvable(self, txin: TxInput) -> bool:
        entry = self._outpoints.get((txin.prev_txid, txin.prev_vout))
        return entry is not None and not entry[2]

    def resolve_input(self, txin: TxInput) -> tuple[int, int]:
        """Return (address id, value) of the spent output and mark it spent."""
        if txin.is_coinbase():
            raise ValueError("coinbase inputs reference no previous output")
        key = (txin.prev_txid, txin.prev_vout)
        entry = self._outpoints.get(key)
        if entry is None:
            raise UnknownOutpoint(
                f"spend of unindexed outpoint {hash_display(txin.prev_txid)}:{txin.prev_vout}"
            )
        if entry[2]:
            raise AlreadySpent(
                f"outpoint {hash_display(txin.prev_txid)}:{txin.prev_vout} spent twice"
            )
        entry[2] = True
        if self.prune_spent:
            del self._outpoints[key]
        return entry[0], entry[1]

    def fee_of(self, tx: Transaction) -> int:
        """Resolved input total minus output total; read-only lookup.

        Call before demuxing when pruning is enabled, otherwise the spent
        entries are already gone.
        """
        if tx.is_coinbase():
            raise ValueError("coinbase transactions have no fee")
        in_total = 0
        for txin in tx.inputs:
            entry = self._outpoints.get((txin.prev_txid, txin.prev_vout))
            if entry is None:
                raise UnknownOutpoint(
                    f"fee lookup of unindexed outpoint "
                    f"{hash_display(txin.prev_txid)}:{txin.prev_vout}"
                )
            in_total += entry[1]
        out_total = sum(output.value for output in tx.outputs)
        fee = in_total - out_total
        if fee < 0:
            raise NegativeFee(f"outputs exceed inputs by {-fee} satoshis")
        return fee

    def demux_transaction(
        self, tx: Transaction, block_ts: int, txhash: bytes | None = None
    ) -> list[Transfer]:
        """Flatten one transaction into signed transfer rows.

        One negative row per resolved input, one positive row per
        address-bearing output; coinbase transactions mint and emit output
        rows only. Zero-value rows are suppressed (nothing moved). Raises
        before mutating anything, so a failed call can be retried once the
        missing outpoints arrive.
        """
        if txhash is None:
            txhash = compute_txid(tx)
        coinbase = tx.is_coinbase()
        if not coinbase:
            for txin in tx.inputs:
                entry = self._outpoints.get((txin.prev_txid, txin.prev_vout))
                if entry is None:
                    raise UnknownOutpoint(
                        f"spend of unindexed outpoint "
                        f"{hash_display(txin.prev_txid)}:{txin.prev_vout}"
                    )
                if entry[2]:
                    raise AlreadySpent(
                        f"outpoint {hash_display(txin.prev_txid)}:{txin.prev_vout} spent twice"
                    )
        tx_id = self.intern_txid(txhash)
        transfers = []
        if not coinbase:
            for txin in tx.inputs:
                addr_id, value = self.resolve_input(txin)
                if value != 0:
                    transfers.append(Transfer(tx_id, addr_id, -value, block_ts))
        for output in tx.outputs:
            descriptor = extract_address(output.script_pubkey)
            if descriptor.kind is ScriptKind.DATA_CARRIER or output.value == 0:
                continue
            addr_id = self.intern_address(descriptor)
            transfers.append(Transfer(tx_id, addr_id, output.value, block_ts))
        return transfers


class TransferPipeline:
    """Single-pass block-stream ingestion.

    Per block: outputs of every transaction are indexed first, then inputs
    are resolved and the transactions demuxed, so intra-block spends always
    resolve. Blocks arriving out of height order are handled by buffering
    transactions whose source outpoints have not appeared yet and retrying
    them as later blocks land; an unresolved spend is only an error once
    :meth:`finish` is called. Duplicate blocks (same header hash) are
    skipped so forked block files do not double-count.
    """

    def __init__(self, prune_spent: bool = False):
        self.ledger = TransferLedger(prune_spent=prune_spent)
        self._seen_blocks: set[bytes] = set()
        self._pending: list[tuple[Transaction, bytes, int]] = []
        self.block_count = 0
        self.tx_count = 0

    def add_block(self, header: BlockHeader, txs: Iterable[Transaction]) -> list[Transfer]:
        """Ingest one block; returns the transfers it unblocked, in order."""
        block_hash = header.block_hash()
        if block_hash in self._seen_blocks:
            return []
        self._seen_blocks.add(block_hash)
        self.block_count += 1

        txs = list(txs)
        hashes = [compute_txid(tx) for tx in txs]
        for tx, txhash in zip(txs, hashes):
            self.ledger.index_outputs(tx, txhash)
        self.tx_count += len(txs)

        transfers: list[Transfer] = []
        ts = header.timestamp
        for tx, txhash in zip(txs, hashes):
            if self._demuxable(tx):
                transfers.extend(self.ledger.demux_transaction(tx, ts, txhash))
            else:
                self._pending.append((tx, txhash, ts))

        # Newly indexed outputs may unblock earlier buffered transactions.
        if self._pending:
            still_pending = []
            for tx, txhash, pending_ts in self._pending:
                if self._demuxable(tx):
                    transfers.extend(self.ledger.demux_transaction(tx, pending_ts, txhash))
                else:
                    still_pending.append((tx, txhash, pending_ts))
            self._pending = still_pending
        return transfers

    def _demuxable(self, tx: Transaction) -> bool:
        return tx.is_coinbase() or all(self.ledger.is_resolvable(i) for i in tx.inputs)

    @property
    def pending_count(self) -> int:
        return len(self._pending)

    def finish(self) -> None:
        """Declare end of ingestion; unresolved buffered spends are terminal."""
        if self._pending:
            tx, txhash, _ = self._pending[0]
            missing = next(i for i in tx.inputs if not self.ledger.is_resolvable(i))
            raise UnknownOutpoint(
                f"{len(self._pending)} transactions still unresolved at end of input; "
                f"first: tx {hash_display(txhash)} spends "
                f"{hash_display(missing.prev_txid)}:{missing.prev_vout}"
            )


def extract_transfers(
    blocks: Iterable[tuple[BlockHeader, list[Transaction]]],
    pipeline: TransferPipeline | None = None,
) -> Iterator[Transfer]:
    """Convenience wrapper: stream transfers from an iterable of blocks."""
    pipeline = pipeline or TransferPipeline()
    for header, txs in blocks:
        yield from pipeline.add_block(header, txs)
    pipeline.finish()


# -- persistence ---------------------------------------------------------------

def write_transfers(transfers: Iterable[Transfer], sink: BinaryIO) -> int:
    """Append fixed-width records; returns the number written."""
    count = 0
    for t in transfers:
        sink.write(TRANSFER_STRUCT.pack(t.tx, t.address, t.value, t.timestamp))
        count += 1
    return count


def read_transfers(source: BinaryIO) -> Iterator[Transfer]:
    while True:
        record = source.read(TRANSFER_RECORD_SIZE)
        if not record:
            return
        if len(record) != TRANSFER_RECORD_SIZE:
            raise TruncatedInput(f"trailing partial transfer record of {len(record)} bytes")
        yield Transfer(*TRANSFER_STRUCT.unpack(record))


def write_txid_dict(txids: Iterable[bytes], sink: BinaryIO) -> int:
    count = 0
    for h in txids:
        sink.write(h)
        count += 1
    return count


def read_txid_dict(source: BinaryIO) -> list[bytes]:
    data = source.read()
    if len(data) % 32:
        raise TruncatedInput(f"txid dictionary has {len(data) % 32} trailing bytes")
    return [data[i : i + 32] for i in range(0, len(data), 32)]


def write_address_dict(addresses: Iterable[AddressDescriptor], sink: BinaryIO) -> int:
    count = 0
    for d in addresses:
        sink.write(bytes([KIND_TAGS[d.kind]]))
        sink.write(write_varint(len(d.payload)))
        sink.write(d.payload)
        count += 1
    return count


def read_address_dict(source: BinaryIO) -> list[AddressDescriptor]:
    data = source.read()
    out = []
    offset = 0
    while offset < len(data):
        kind = TAG_KINDS[data[offset]]
        length, consumed = read_varint(data, offset + 1)
        start = offset + 1 + consumed
        payload = data[start : start + length]
        if len(payload) != length:
            raise TruncatedInput("address dictionary ends inside an entry")
        out.append(AddressDescriptor(kind, payload))
        offset = start + length
    return out
