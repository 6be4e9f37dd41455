"""scriptPubKey template classification.

Maps every output script to exactly one AddressDescriptor. Recognised
templates (checked in this order): P2PKH, P2SH, P2WPKH, P2WSH, raw public
key, bare multisig, OP_RETURN data carrier. Anything else is NonStandard
and gets the double SHA-256 of the whole script as a synthetic payload,
so unusual outputs still resolve to a stable identity instead of being
dropped. No script execution, only byte-template matching.
"""

import enum
from typing import NamedTuple

from .blocks import double_sha256

OP_0 = 0x00
OP_RETURN = 0x6A
OP_DUP = 0x76
OP_EQUAL = 0x87
OP_EQUALVERIFY = 0x88
OP_HASH160 = 0xA9
OP_CHECKSIG = 0xAC
OP_CHECKMULTISIG = 0xAE
OP_1 = 0x51
OP_16 = 0x60

PUBKEY_LENGTHS = (33, 65)  # compressed, uncompressed


class ScriptKind(enum.Enum):
    PUBKEY_HASH = "pubkey_hash"
    SCRIPT_HASH = "script_hash"
    RAW_PUBKEY = "raw_pubkey"
    WITNESS_V0_KEYHASH = "witness_v0_keyhash"
    WITNESS_V0_SCRIPTHASH = "witness_v0_scripthash"
    BARE_MULTISIG = "bare_multisig"
    DATA_CARRIER = "data_carrier"
    NONSTANDARD = "nonstandard"


# Stable single-byte tags for the on-disk address dictionary.
KIND_TAGS = {kind: tag for tag, kind in enumerate(ScriptKind)}
TAG_KINDS = dict(enumerate(ScriptKind))


class AddressDescriptor(NamedTuple):
    kind: ScriptKind
    payload: bytes

    def display(self) -> str:
        return f"{self.kind.value}:{self.payload.hex()}"


def _match_multisig(script: bytes) -> bool:
    # OP_m <push key>... OP_n OP_CHECKMULTISIG with m <= n and n matching pushes
    if len(script) < 3 or script[-1] != OP_CHECKMULTISIG:
        return False
    if not (OP_1 <= script[0] <= OP_16 and OP_1 <= script[-2] <= OP_16):
        return False
    m = script[0] - OP_1 + 1
    n = script[-2] - OP_1 + 1
    if m > n:
        return False
    offset, keys = 1, 0
    while offset < len(script) - 2:
        push = script[offset]
        if push not in PUBKEY_LENGTHS:
            return False
        offset += 1 + push
        keys += 1
    return offset == len(script) - 2 and keys == n


def extract_address(script_pubkey: bytes) -> AddressDescriptor:
    """Classify an output script; total and deterministic.

    >>> extract_address(bytes.fromhex('76a914dd6cce9f255a8cc17bda8ba0373df8e861cb866e88ac')).kind
    <ScriptKind.PUBKEY_HASH: 'pubkey_hash'>
    """
    s = script_pubkey
    n = len(s)
    if n == 25 and s[0] == OP_DUP and s[1] == OP_HASH160 and s[2] == 20 \
            and s[23] == OP_EQUALVERIFY and s[24] == OP_CHECKSIG:
        return AddressDescriptor(ScriptKind.PUBKEY_HASH, s[3:23])
    if n == 23 and s[0] == OP_HASH160 and s[1] == 20 and s[22] == OP_EQUAL:
        return AddressDescriptor(ScriptKind.SCRIPT_HASH, s[2:22])
    if n == 22 and s[0] == OP_0 and s[1] == 20:
        return AddressDescriptor(ScriptKind.WITNESS_V0_KEYHASH, s[2:22])
    if n == 34 and s[0] == OP_0 and s[1] == 32:
        return AddressDescriptor(ScriptKind.WITNESS_V0_SCRIPTHASH, s[2:34])
    if n in (35, 67) and s[0] in PUBKEY_LENGTHS and s[0] == n - 2 and s[-1] == OP_CHECKSIG:
        return AddressDescriptor(ScriptKind.RAW_PUBKEY, s[1:-1])
    if _match_multisig(s):
        return AddressDescriptor(ScriptKind.BARE_MULTISIG, double_sha256(s))
    if n >= 1 and s[0] == OP_RETURN:
        return AddressDescriptor(ScriptKind.DATA_CARRIER, b"")
    return AddressDescriptor(ScriptKind.NONSTANDARD, double_sha256(s))
