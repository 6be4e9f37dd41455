"""Raw Bitcoin block decoding and re-encoding.

Wire layout references:

- https://en.bitcoin.it/wiki/Protocol_documentation#block
- https://en.bitcoin.it/wiki/Protocol_documentation#tx
- BIP-144 for the segregated-witness transaction encoding

All 32-byte hashes are kept in internal (on-wire) byte order throughout;
use :func:`hash_display` only when printing. Every ``parse_*`` has a
matching ``serialize_*`` and the pair round-trips byte-exactly on
well-formed input, witness bytes included.
"""

import hashlib
import struct
from typing import BinaryIO, Iterable, Iterator, NamedTuple, TextIO

from .errors import BadMagic, MalformedBlock, MalformedTransaction, TruncatedInput

MAINNET_MAGIC = bytes.fromhex("f9beb4d9")  # byte order as on disk
REGTEST_MAGIC = bytes.fromhex("fabfb5da")

COIN = 100_000_000  # satoshis per bitcoin
MAX_MONEY = 21_000_000 * COIN

HEADER_SIZE = 80
COINBASE_PREV_TXID = b"\x00" * 32
COINBASE_PREV_VOUT = 0xFFFFFFFF

_HEADER_STRUCT = struct.Struct("<i32s32sIII")
_OUTPOINT_STRUCT = struct.Struct("<32sI")

# Minimum on-wire sizes, used to reject absurd varint counts before looping.
_MIN_INPUT_SIZE = 32 + 4 + 1 + 4
_MIN_OUTPUT_SIZE = 8 + 1


def double_sha256(data: bytes) -> bytes:
    """Double SHA-256, the hash used for block and transaction ids."""
    return hashlib.sha256(hashlib.sha256(data).digest()).digest()


def hash_display(h: bytes) -> str:
    """Render an internal-order hash the way explorers print it."""
    return h[::-1].hex()


def read_varint(data: bytes, offset: int = 0) -> tuple[int, int]:
    """Decode a Bitcoin variable-length integer at ``offset``.

    Returns ``(value, consumed)`` where consumed is 1, 3, 5 or 9.

    >>> read_varint(bytes([0x2a]))
    (42, 1)
    >>> read_varint(bytes([0xfd, 0x00, 0x01]))
    (256, 3)
    """
    if offset >= len(data):
        raise TruncatedInput("varint: no bytes available")
    first = data[offset]
    if first < 0xFD:
        return first, 1
    width = {0xFD: 2, 0xFE: 4, 0xFF: 8}[first]
    end = offset + 1 + width
    if end > len(data):
        raise TruncatedInput(f"varint: prefix {first:#x} needs {width} more bytes")
    return int.from_bytes(data[offset + 1 : end], "little"), 1 + width


def write_varint(value: int) -> bytes:
    """Encode an integer in canonical varint form (inverse of read_varint)."""
    if value < 0 or value > 0xFFFF_FFFF_FFFF_FFFF:
        raise ValueError(f"varint out of range: {value}")
    if value < 0xFD:
        return value.to_bytes(1, "little")
    if value <= 0xFFFF:
        return b"\xfd" + value.to_bytes(2, "little")
    if value <= 0xFFFF_FFFF:
        return b"\xfe" + value.to_bytes(4, "little")
    return b"\xff" + value.to_bytes(8, "little")


class BlockHeader(NamedTuple):
    version: int
    prev_block_hash: bytes  # 32 bytes, internal order
    merkle_root: bytes      # 32 bytes, internal order
    timestamp: int          # seconds since epoch, from the miner's clock
    bits: int
    nonce: int

    def block_hash(self) -> bytes:
        return double_sha256(serialize_block_header(self))


class TxInput(NamedTuple):
    prev_txid: bytes  # 32 bytes, internal order
    prev_vout: int
    script_sig: bytes
    sequence: int

    def is_coinbase(self) -> bool:
        return self.prev_txid == COINBASE_PREV_TXID and self.prev_vout == COINBASE_PREV_VOUT


class TxOutput(NamedTuple):
    value: int  # satoshis
    script_pubkey: bytes


class Transaction(NamedTuple):
    version: int
    inputs: tuple[TxInput, ...]
    outputs: tuple[TxOutput, ...]
    has_witness: bool
    witness: tuple[tuple[bytes, ...], ...]  # one stack per input iff has_witness
    locktime: int

    def is_coinbase(self) -> bool:
        return len(self.inputs) == 1 and self.inputs[0].is_coinbase()

    @property
    def txid(self) -> bytes:
        return compute_txid(self)


def parse_block_header(data: bytes) -> BlockHeader:
    """Decode the fixed 80-byte header; little-endian integer fields."""
    if len(data) < HEADER_SIZE:
        raise TruncatedInput(f"block header needs {HEADER_SIZE} bytes, got {len(data)}")
    version, prev_hash, merkle, ts, bits, nonce = _HEADER_STRUCT.unpack_from(data)
    return BlockHeader(version, prev_hash, merkle, ts, bits, nonce)


def serialize_block_header(header: BlockHeader) -> bytes:
    return _HEADER_STRUCT.pack(
        header.version,
        header.prev_block_hash,
        header.merkle_root,
        header.timestamp,
        header.bits,
        header.nonce,
    )


def _read_exact(data: bytes, offset: int, n: int, what: str) -> bytes:
    if offset + n > len(data):
        raise TruncatedInput(f"{what}: need {n} bytes at offset {offset}, have {len(data) - offset}")
    return data[offset : offset + n]


def _read_count(data: bytes, offset: int, min_item_size: int, what: str) -> tuple[int, int]:
    count, consumed = read_varint(data, offset)
    if count * min_item_size > len(data) - offset - consumed:
        raise MalformedTransaction(f"{what} count {count} exceeds remaining bytes")
    return count, consumed


def parse_transaction(data: bytes, offset: int = 0) -> tuple[Transaction, int]:
    """Decode one transaction starting at ``offset``.

    Handles both the legacy encoding and the witness encoding (marker 0x00,
    flag 0x01). Returns the transaction and the exact number of bytes it
    occupied, so the caller can resume parsing at ``offset + consumed``.
    """
    start = offset
    version = int.from_bytes(_read_exact(data, offset, 4, "tx version"), "little", signed=True)
    offset += 4

    in_count, consumed = read_varint(data, offset)
    has_witness = False
    if in_count == 0:
        # Marker byte: the next byte is the witness flag, then the real count.
        flag = _read_exact(data, offset + consumed, 1, "witness flag")[0]
        if flag != 0x01:
            raise MalformedTransaction(f"witness marker with unsupported flag {flag:#04x}")
        has_witness = True
        offset += consumed + 1
        in_count, consumed = _read_count(data, offset, _MIN_INPUT_SIZE, "input")
    else:
        in_count, consumed = _read_count(data, offset, _MIN_INPUT_SIZE, "input")
    offset += consumed
    if in_count == 0:
        raise MalformedTransaction("transaction with zero inputs")

    inputs = []
    for _ in range(in_count):
        prev_txid, prev_vout = _OUTPOINT_STRUCT.unpack_from(_read_exact(data, offset, 36, "outpoint"))
        offset += 36
        script_len, consumed = read_varint(data, offset)
        offset += consumed
        script_sig = _read_exact(data, offset, script_len, "scriptSig")
        offset += script_len
        sequence = int.from_bytes(_read_exact(data, offset, 4, "sequence"), "little")
        offset += 4
        inputs.append(TxInput(prev_txid, prev_vout, script_sig, sequence))

    out_count, consumed = _read_count(data, offset, _MIN_OUTPUT_SIZE, "output")
    offset += consumed
    if out_count == 0:
        raise MalformedTransaction("transaction with zero outputs")

    outputs = []
    for _ in range(out_count):
        value = int.from_bytes(_read_exact(data, offset, 8, "output value"), "little")
        offset += 8
        script_len, consumed = read_varint(data, offset)
        offset += consumed
        script_pubkey = _read_exact(data, offset, script_len, "scriptPubKey")
        offset += script_len
        outputs.append(TxOutput(value, script_pubkey))

    witness: list[tuple[bytes, ...]] = []
    if has_witness:
        for _ in range(in_count):
            item_count, consumed = _read_count(data, offset, 1, "witness item")
            offset += consumed
            items = []
            for _ in range(item_count):
                item_len, consumed = read_varint(data, offset)
                offset += consumed
                items.append(_read_exact(data, offset, item_len, "witness item"))
                offset += item_len
            witness.append(tuple(items))

    locktime = int.from_bytes(_read_exact(data, offset, 4, "locktime"), "little")
    offset += 4

    tx = Transaction(version, tuple(inputs), tuple(outputs), has_witness, tuple(witness), locktime)
    return tx, offset - start


def serialize_transaction(tx: Transaction, include_witness: bool = True) -> bytes:
    """Re-encode a transaction; inverse of parse_transaction.

    With ``include_witness=False`` the legacy encoding is produced even for
    witness transactions, which is the preimage of the txid.
    """
    with_witness = include_witness and tx.has_witness
    if with_witness and len(tx.witness) != len(tx.inputs):
        raise ValueError("witness transaction needs one stack per input")
    parts = [tx.version.to_bytes(4, "little", signed=True)]
    if with_witness:
        parts.append(b"\x00\x01")
    parts.append(write_varint(len(tx.inputs)))
    for txin in tx.inputs:
        parts.append(_OUTPOINT_STRUCT.pack(txin.prev_txid, txin.prev_vout))
        parts.append(write_varint(len(txin.script_sig)))
        parts.append(txin.script_sig)
        parts.append(txin.sequence.to_bytes(4, "little"))
    parts.append(write_varint(len(tx.outputs)))
    for txout in tx.outputs:
        parts.append(txout.value.to_bytes(8, "little"))
        parts.append(write_varint(len(txout.script_pubkey)))
        parts.append(txout.script_pubkey)
    if with_witness:
        for stack in tx.witness:
            parts.append(write_varint(len(stack)))
            for item in stack:
                parts.append(write_varint(len(item)))
                parts.append(item)
    parts.append(tx.locktime.to_bytes(4, "little"))
    return b"".join(parts)


def compute_txid(tx: Transaction) -> bytes:
    """Double SHA-256 of the witness-stripped serialization (internal order)."""
    return double_sha256(serialize_transaction(tx, include_witness=False))


def parse_block(data: bytes) -> tuple[BlockHeader, list[Transaction]]:
    """Decode a full block: 80-byte header, tx count, transactions."""
    header = parse_block_header(data)
    offset = HEADER_SIZE
    tx_count, consumed = read_varint(data, offset)
    offset += consumed
    txs = []
    for _ in range(tx_count):
        tx, consumed = parse_transaction(data, offset)
        txs.append(tx)
        offset += consumed
    if offset != len(data):
        raise MalformedBlock(f"{len(data) - offset} trailing bytes after last transaction")
    return header, txs


def serialize_block(header: BlockHeader, txs: Iterable[Transaction]) -> bytes:
    txs = list(txs)
    parts = [serialize_block_header(header), write_varint(len(txs))]
    parts.extend(serialize_transaction(tx) for tx in txs)
    return b"".join(parts)


class _ChunkReader:
    """Buffered reader tracking the absolute offset of the next unread byte."""

    def __init__(self, stream: BinaryIO):
        self._stream = stream
        self._buf = b""
        self.offset = 0

    def read(self, n: int) -> bytes:
        while len(self._buf) < n:
            chunk = self._stream.read(max(4096, n - len(self._buf)))
            if not chunk:
                break
            self._buf += chunk
        out, self._buf = self._buf[:n], self._buf[n:]
        self.offset += len(out)
        return out

    def skip_zeros(self) -> bool:
        """Consume a run of zero bytes; False once the stream is exhausted."""
        while True:
            if not self._buf:
                self._buf = self._stream.read(4096)
                if not self._buf:
                    return False
            stripped = self._buf.lstrip(b"\x00")
            self.offset += len(self._buf) - len(stripped)
            self._buf = stripped
            if stripped:
                return True


def iterate_raw_blocks(stream: BinaryIO, magic: bytes = MAINNET_MAGIC) -> Iterator[bytes]:
    """Yield raw block payloads from the on-disk file layout.

    Layout: repeated ``[4-byte magic][4-byte LE length][block bytes]``,
    with runs of zero padding permitted between entries (block files are
    preallocated). Holds one block in memory at a time.
    """
    reader = _ChunkReader(stream)
    while True:
        if not reader.skip_zeros():
            return
        entry_offset = reader.offset
        word = reader.read(4)
        if len(word) < 4:
            raise TruncatedInput(f"block file ends inside magic at offset {entry_offset}")
        if word != magic:
            raise BadMagic(entry_offset, word)
        length_bytes = reader.read(4)
        if len(length_bytes) < 4:
            raise TruncatedInput(f"block file ends inside length at offset {reader.offset}")
        length = int.from_bytes(length_bytes, "little")
        raw = reader.read(length)
        if len(raw) < length:
            raise TruncatedInput(
                f"block at offset {entry_offset} declares {length} bytes, only {len(raw)} available"
            )
        yield raw


def iterate_block_file(
    stream: BinaryIO, magic: bytes = MAINNET_MAGIC
) -> Iterator[tuple[BlockHeader, list[Transaction]]]:
    """Parsed variant of :func:`iterate_raw_blocks`."""
    for raw in iterate_raw_blocks(stream, magic):
        yield parse_block(raw)


def write_block_file(
    blocks: Iterable[tuple[BlockHeader, Iterable[Transaction]]],
    stream: BinaryIO,
    magic: bytes = MAINNET_MAGIC,
) -> int:
    """Write blocks in the on-disk layout; returns blocks written."""
    count = 0
    for header, txs in blocks:
        raw = serialize_block(header, txs)
        stream.write(magic)
        stream.write(len(raw).to_bytes(4, "little"))
        stream.write(raw)
        count += 1
    return count


def iterate_hex_blocks(stream: TextIO) -> Iterator[tuple[BlockHeader, list[Transaction]]]:
    """Yield blocks from the text fixture format: one hex-encoded block per line."""
    for line in stream:
        line = line.strip()
        if not line:
            continue
        yield parse_block(bytes.fromhex(line))
