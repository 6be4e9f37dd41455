import random

import pytest

# The mainnet genesis block, assembled field-by-field from its published
# structure and verified against the well-known block hash
# 000000000019d6689c085ae165831e934ff763ae46a2a6c172b3f1b60a8ce26f.
GENESIS_BLOCK_HEX = (
    "01000000"
    + "00" * 32
    + "3ba3edfd7a7b12b27ac72c3e67768f617fc81bc3888a51323a9fb8aa4b1e5e4a"
    + "29ab5f49"
    + "ffff001d"
    + "1dac2b7c"
    + "01"
    + "01000000"
    + "01"
    + "00" * 32
    + "ffffffff"
    + "4d"
    + "04ffff001d0104455468652054696d65732030332f4a616e2f323030392043"
    + "68616e63656c6c6f72206f6e206272696e6b206f66207365636f6e64206261"
    + "696c6f757420666f722062616e6b73"
    + "ffffffff"
    + "01"
    + "00f2052a01000000"
    + "43"
    + "4104678afdb0fe5548271967f1a67130b7105cd6a828e03909a67962e0ea1f"
    + "61deb649f6bc3f4cef38c4f35504e51ec112de5c384df7ba0b8d578a4c702b"
    + "6bf11d5fac"
    + "00000000"
)

GENESIS_HEADER_HEX = GENESIS_BLOCK_HEX[: 80 * 2]
GENESIS_COINBASE_HEX = GENESIS_BLOCK_HEX[81 * 2 :]  # header + 1-byte tx count
GENESIS_TXID_DISPLAY = "4a5e1e4baab89f3a32518a88c31bc87f618f76673e2cc77ab2127b7afdeda33b"
GENESIS_TIMESTAMP = 1231006505


@pytest.fixture
def genesis_block_bytes() -> bytes:
    return bytes.fromhex(GENESIS_BLOCK_HEX)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xC0FFEE)
