import io
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coinflow import chaingen
from coinflow.blocks import (
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
    MAINNET_MAGIC,
    REGTEST_MAGIC,
)
from coinflow.errors import BadMagic, MalformedBlock, MalformedTransaction, TruncatedInput

from conftest import GENESIS_COINBASE_HEX, GENESIS_HEADER_HEX, GENESIS_TIMESTAMP, GENESIS_TXID_DISPLAY


# -- varint ---------------------------------------------------------------------

def test_varint_single_byte():
    assert read_varint(bytes([0x2A])) == (42, 1)


def test_varint_two_byte_prefix():
    assert read_varint(bytes([0xFD, 0x00, 0x01])) == (256, 3)


@pytest.mark.parametrize("data", [b"", bytes([0xFD]), bytes([0xFE, 1, 2]), bytes([0xFF] * 5)])
def test_varint_truncated(data):
    with pytest.raises(TruncatedInput):
        read_varint(data)


@given(st.integers(min_value=0, max_value=2**64 - 1))
def test_varint_round_trip(value):
    encoded = write_varint(value)
    assert read_varint(encoded) == (value, len(encoded))


def test_varint_rejects_out_of_range():
    with pytest.raises(ValueError):
        write_varint(-1)
    with pytest.raises(ValueError):
        write_varint(2**64)


# -- block header -----------------------------------------------------------------

def test_header_all_zero():
    header = parse_block_header(b"\x00" * 80)
    assert header == BlockHeader(0, b"\x00" * 32, b"\x00" * 32, 0, 0, 0)


def test_header_genesis_timestamp():
    header = parse_block_header(bytes.fromhex(GENESIS_HEADER_HEX))
    assert header.timestamp == GENESIS_TIMESTAMP
    assert header.version == 1
    assert header.prev_block_hash == b"\x00" * 32


def test_header_too_short():
    with pytest.raises(TruncatedInput):
        parse_block_header(b"\x00" * 79)


def test_header_round_trip():
    raw = bytes.fromhex(GENESIS_HEADER_HEX)
    from coinflow.blocks import serialize_block_header

    assert serialize_block_header(parse_block_header(raw)) == raw


# -- transactions -----------------------------------------------------------------

MINIMAL_LEGACY_TX = Transaction(
    version=1,
    inputs=(TxInput(b"\x11" * 32, 0, b"", 0xFFFFFFFF),),
    outputs=(TxOutput(1, b""),),
    has_witness=False,
    witness=(),
    locktime=0,
)


def test_parse_genesis_coinbase():
    raw = bytes.fromhex(GENESIS_COINBASE_HEX)
    tx, consumed = parse_transaction(raw)
    assert consumed == len(raw)
    assert len(tx.inputs) == 1 and tx.inputs[0].is_coinbase()
    assert len(tx.outputs) == 1
    assert tx.outputs[0].value == 5_000_000_000
    assert not tx.has_witness


def test_minimal_legacy_round_trip():
    raw = serialize_transaction(MINIMAL_LEGACY_TX)
    tx, consumed = parse_transaction(raw)
    assert consumed == len(raw)
    assert serialize_transaction(tx) == raw
    assert tx == MINIMAL_LEGACY_TX


def test_witness_marker_with_zero_flag_rejected():
    raw = bytearray(serialize_transaction(MINIMAL_LEGACY_TX._replace(has_witness=True, witness=((),))))
    assert raw[4:6] == b"\x00\x01"
    raw[5] = 0x00
    with pytest.raises(MalformedTransaction):
        parse_transaction(bytes(raw))


def test_zero_inputs_rejected():
    # version | varint 0 inputs | flag byte that is not a witness flag
    raw = (1).to_bytes(4, "little") + b"\x00" + b"\x02"
    with pytest.raises(MalformedTransaction):
        parse_transaction(raw)


def test_witness_round_trip():
    tx = MINIMAL_LEGACY_TX._replace(has_witness=True, witness=((b"\xab" * 20, b""),))
    raw = serialize_transaction(tx)
    parsed, consumed = parse_transaction(raw)
    assert consumed == len(raw)
    assert parsed == tx
    assert serialize_transaction(parsed) == raw


def test_absurd_count_rejected():
    raw = (1).to_bytes(4, "little") + write_varint(2**40)
    with pytest.raises(MalformedTransaction):
        parse_transaction(raw)


def test_consumed_is_exact_in_multi_tx_block(rng):
    header, txs = chaingen.random_block(rng, max_txs=6)
    raw = serialize_block(header, txs)
    offset = 81 if len(txs) < 0xFD else 83
    for expected in txs:
        tx, consumed = parse_transaction(raw, offset)
        assert tx == expected
        offset += consumed
    assert offset == len(raw)


# -- txid ---------------------------------------------------------------------------

def test_genesis_txid_matches_independent_oracle():
    raw = bytes.fromhex(GENESIS_COINBASE_HEX)
    tx, _ = parse_transaction(raw)
    assert compute_txid(tx) == double_sha256(raw)
    assert hash_display(compute_txid(tx)) == GENESIS_TXID_DISPLAY


def test_txid_deterministic():
    a, _ = parse_transaction(serialize_transaction(MINIMAL_LEGACY_TX))
    b, _ = parse_transaction(serialize_transaction(MINIMAL_LEGACY_TX))
    assert compute_txid(a) == compute_txid(b)


def test_txid_ignores_empty_witness_stacks():
    witness_tx = MINIMAL_LEGACY_TX._replace(has_witness=True, witness=((),))
    assert compute_txid(witness_tx) == compute_txid(MINIMAL_LEGACY_TX)


@given(st.lists(st.lists(st.binary(max_size=40), max_size=3), min_size=1, max_size=1))
def test_txid_invariant_under_witness_attachment(stacks):
    tx = MINIMAL_LEGACY_TX._replace(has_witness=True, witness=tuple(map(tuple, stacks)))
    assert compute_txid(tx) == compute_txid(MINIMAL_LEGACY_TX)


# -- whole blocks -------------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_random_block_round_trip(seed):
    header, txs = chaingen.random_block(random.Random(seed))
    raw = serialize_block(header, txs)
    parsed_header, parsed_txs = parse_block(raw)
    assert serialize_block(parsed_header, parsed_txs) == raw


def test_block_trailing_bytes_rejected(genesis_block_bytes):
    with pytest.raises(MalformedBlock):
        parse_block(genesis_block_bytes + b"\x00")


# -- block files ---------------------------------------------------------------------

def test_empty_stream_yields_nothing():
    assert list(iterate_block_file(io.BytesIO(b""))) == []


def test_all_padding_yields_nothing():
    assert list(iterate_block_file(io.BytesIO(b"\x00" * 10_000))) == []


def test_own_serializer_round_trips(rng):
    header, txs = chaingen.random_block(rng)
    stream = io.BytesIO()
    write_block_file([(header, txs)], stream, REGTEST_MAGIC)
    stream.seek(0)
    [(parsed_header, parsed_txs)] = list(iterate_block_file(stream, REGTEST_MAGIC))
    assert parsed_header == header
    assert parsed_txs == txs


def test_padding_between_entries(rng):
    blk = chaingen.random_block(rng)
    raw = serialize_block(*blk)
    stream = io.BytesIO(
        b"\x00" * 7
        + MAINNET_MAGIC + len(raw).to_bytes(4, "little") + raw
        + b"\x00" * 5000
        + MAINNET_MAGIC + len(raw).to_bytes(4, "little") + raw
        + b"\x00" * 3
    )
    assert len(list(iterate_block_file(stream))) == 2


def test_declared_length_longer_than_data():
    stream = io.BytesIO(MAINNET_MAGIC + (100).to_bytes(4, "little") + b"\xab" * 50)
    with pytest.raises(TruncatedInput):
        list(iterate_block_file(stream))


def test_bad_magic_reports_offset():
    stream = io.BytesIO(b"\x00" * 9 + b"\xde\xad\xbe\xef" + b"\x00" * 100)
    with pytest.raises(BadMagic) as excinfo:
        list(iterate_block_file(stream))
    assert excinfo.value.offset == 9
    assert "deadbeef" in str(excinfo.value)


def test_hex_fixture_lines(genesis_block_bytes):
    text = io.StringIO(genesis_block_bytes.hex() + "\n\n" + genesis_block_bytes.hex() + "\n")
    parsed = list(iterate_hex_blocks(text))
    assert len(parsed) == 2
    assert parsed[0][0].timestamp == GENESIS_TIMESTAMP
