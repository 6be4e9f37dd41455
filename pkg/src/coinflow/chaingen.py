"""Deterministic synthetic chains for tests and demos.

Everything derives from a caller-supplied ``random.Random``, so a seed
pins the whole chain byte-for-byte. Generated blocks are wire-well-formed
(real merkle roots, chained header hashes, canonical varints) but carry no
proof of work; the parser never checks difficulty, so none is needed.
"""

import random
from dataclasses import dataclass, field

from .blocks import (
    COIN,
    COINBASE_PREV_TXID,
    COINBASE_PREV_VOUT,
    BlockHeader,
    Transaction,
    TxInput,
    TxOutput,
    compute_txid,
    double_sha256,
)

GENESIS_PREV_HASH = b"\x00" * 32
DEFAULT_START_TIME = 1356998400  # 2013-01-01T00:00Z
DEFAULT_BLOCK_INTERVAL = 600


def merkle_root(txids: list[bytes]) -> bytes:
    """Pairwise double-SHA-256 tree with the odd-leaf duplication rule."""
    level = list(txids)
    if not level:
        return b"\x00" * 32
    while len(level) > 1:
        if len(level) % 2:
            level.append(level[-1])
        level = [double_sha256(level[i] + level[i + 1]) for i in range(0, len(level), 2)]
    return level[0]


def _random_payload(rng: random.Random, n: int) -> bytes:
    return bytes(rng.randrange(256) for _ in range(n))


def random_standard_script(rng: random.Random) -> bytes:
    """A random address-bearing script drawn from the recognised templates."""
    choice = rng.randrange(6)
    if choice == 0:  # P2PKH
        return b"\x76\xa9\x14" + _random_payload(rng, 20) + b"\x88\xac"
    if choice == 1:  # P2SH
        return b"\xa9\x14" + _random_payload(rng, 20) + b"\x87"
    if choice == 2:  # P2WPKH
        return b"\x00\x14" + _random_payload(rng, 20)
    if choice == 3:  # P2WSH
        return b"\x00\x20" + _random_payload(rng, 32)
    if choice == 4:  # raw pubkey
        key = b"\x02" + _random_payload(rng, 32) if rng.random() < 0.5 else b"\x04" + _random_payload(rng, 64)
        return bytes([len(key)]) + key + b"\xac"
    # 1-of-2 bare multisig
    keys = [b"\x03" + _random_payload(rng, 32) for _ in range(2)]
    return b"\x51" + b"".join(bytes([len(k)]) + k for k in keys) + b"\x52\xae"


def random_witness(rng: random.Random, n_inputs: int) -> tuple[tuple[bytes, ...], ...]:
    return tuple(
        tuple(_random_payload(rng, rng.randrange(1, 73)) for _ in range(rng.randrange(0, 3)))
        for _ in range(n_inputs)
    )


def random_block(rng: random.Random, max_txs: int = 8) -> tuple[BlockHeader, list[Transaction]]:
    """A standalone wire-well-formed block with arbitrary (unlinked) spends.

    For serializer round-trip exercises only: inputs reference made-up
    outpoints, so these blocks cannot feed the transfer pipeline.
    """
    txs = []
    for _ in range(rng.randrange(1, max_txs + 1)):
        n_in = rng.randrange(1, 4)
        n_out = rng.randrange(1, 4)
        inputs = tuple(
            TxInput(_random_payload(rng, 32), rng.randrange(5), _random_payload(rng, rng.randrange(0, 30)), 0xFFFFFFFF)
            for _ in range(n_in)
        )
        outputs = tuple(
            TxOutput(rng.randrange(0, 10 * COIN), random_standard_script(rng))
            for _ in range(n_out)
        )
        has_witness = rng.random() < 0.5
        witness = random_witness(rng, n_in) if has_witness else ()
        txs.append(Transaction(rng.choice((1, 2)), inputs, outputs, has_witness, witness, rng.randrange(0, 500)))
    header = BlockHeader(
        version=rng.choice((1, 2, 0x20000000)),
        prev_block_hash=_random_payload(rng, 32),
        merkle_root=merkle_root([compute_txid(tx) for tx in txs]),
        timestamp=rng.randrange(1, 2**32),
        bits=0x207FFFFF,
        nonce=rng.randrange(2**32),
    )
    return header, txs


@dataclass
class ChainBuilder:
    """Grow a consistent chain: every spend references an existing output.

    Later transactions may spend outputs created earlier in the same block;
    no transaction ever references a later one, so the emitted stream obeys
    normal chain order. ``tx_fees`` records the ground-truth fee of every
    non-coinbase transaction for conservation checks.
    """

    rng: random.Random
    subsidy: int = 50 * COIN
    start_time: int = DEFAULT_START_TIME
    block_interval: int = DEFAULT_BLOCK_INTERVAL
    witness_rate: float = 0.3

    height: int = 0
    tip_hash: bytes = GENESIS_PREV_HASH
    spendable: list[tuple[bytes, int, int]] = field(default_factory=list)  # (txid, vout, value)
    tx_fees: dict[bytes, int] = field(default_factory=dict)

    def _outputs_totalling(self, total: int) -> tuple[TxOutput, ...]:
        n = self.rng.randint(1, min(4, total))
        cuts = sorted(self.rng.sample(range(1, total), n - 1)) if n > 1 else []
        amounts = [b - a for a, b in zip([0] + cuts, cuts + [total])]
        outputs = [TxOutput(v, random_standard_script(self.rng)) for v in amounts]
        if self.rng.random() < 0.15:  # occasional zero-value data carrier
            outputs.append(TxOutput(0, b"\x6a" + bytes([4]) + _random_payload(self.rng, 4)))
        self.rng.shuffle(outputs)
        return tuple(outputs)

    def _spend_tx(self, pool: list[tuple[bytes, int, int]]) -> tuple[Transaction, int] | None:
        if not pool:
            return None
        n_in = self.rng.randint(1, min(3, len(pool)))
        picks = sorted(self.rng.sample(range(len(pool)), n_in), reverse=True)
        chosen = [pool.pop(i) for i in picks]
        total_in = sum(value for _, _, value in chosen)
        if total_in < 2:
            return None  # dust, abandon (stays unspent in the index)
        fee = self.rng.randrange(0, max(2, total_in // 5))
        inputs = tuple(
            TxInput(txid, vout, _random_payload(self.rng, self.rng.randrange(0, 20)), 0xFFFFFFFF)
            for txid, vout, _ in chosen
        )
        has_witness = self.rng.random() < self.witness_rate
        witness = random_witness(self.rng, n_in) if has_witness else ()
        tx = Transaction(
            self.rng.choice((1, 2)),
            inputs,
            self._outputs_totalling(total_in - fee),
            has_witness,
            witness,
            0,
        )
        return tx, fee

    def next_block(self, n_txs: int, timestamp: int | None = None) -> tuple[BlockHeader, list[Transaction]]:
        """One block: a coinbase claiming subsidy plus fees, then spends."""
        if timestamp is None:
            timestamp = self.start_time + self.height * self.block_interval
        pool = list(self.spendable)
        spends = []
        fees = 0
        for _ in range(n_txs):
            result = self._spend_tx(pool)
            if result is None:
                break
            tx, fee = result
            txid = compute_txid(tx)
            self.tx_fees[txid] = fee
            fees += fee
            spends.append(tx)
            for vout, output in enumerate(tx.outputs):
                if output.script_pubkey[:1] != b"\x6a":
                    pool.append((txid, vout, output.value))

        coinbase_sig = self.height.to_bytes(4, "little") + _random_payload(self.rng, 8)
        coinbase = Transaction(
            1,
            (TxInput(COINBASE_PREV_TXID, COINBASE_PREV_VOUT, coinbase_sig, 0xFFFFFFFF),),
            self._outputs_totalling(self.subsidy + fees),
            False,
            (),
            0,
        )
        txs = [coinbase] + spends
        header = BlockHeader(
            version=0x20000000,
            prev_block_hash=self.tip_hash,
            merkle_root=merkle_root([compute_txid(tx) for tx in txs]),
            timestamp=timestamp,
            bits=0x207FFFFF,
            nonce=self.rng.randrange(2**32),
        )
        self.tip_hash = header.block_hash()
        self.height += 1
        self.spendable = pool
        cb_txid = compute_txid(coinbase)
        for vout, output in enumerate(coinbase.outputs):
            if output.script_pubkey[:1] != b"\x6a":
                self.spendable.append((cb_txid, vout, output.value))
        return header, txs
