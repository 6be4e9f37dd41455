"""Independent brute-force reference implementations.

These deliberately avoid the library's indexing and windowing code paths:
the transfer oracle scans every input against every previously seen output
(quadratic), and the investor oracle rescans the full transfer list for
every candidate window. Slow, obviously correct, used to pin the fast
implementations down.
"""

from collections import Counter

from coinflow.blocks import compute_txid
from coinflow.scripts import ScriptKind, extract_address


def quadratic_transfer_multiset(chain):
    """Multiset of (txhash, descriptor, value, timestamp) rows.

    ``chain`` is a list of (header, [tx]) in stream order. Each input is
    matched by scanning the flat list of all prior outputs.
    """
    rows = Counter()
    prior = []  # (txhash, vout, descriptor, value) in stream order
    for header, txs in chain:
        ts = header.timestamp
        for tx in txs:
            txhash = compute_txid(tx)
            if not tx.is_coinbase():
                for txin in tx.inputs:
                    for cand_hash, cand_vout, descriptor, value in prior:
                        if cand_hash == txin.prev_txid and cand_vout == txin.prev_vout:
                            if value != 0:
                                rows[(txhash, descriptor, -value, ts)] += 1
                            break
                    else:
                        raise AssertionError("oracle: input matches no prior output")
            for vout, output in enumerate(tx.outputs):
                descriptor = extract_address(output.script_pubkey)
                if descriptor.kind is ScriptKind.DATA_CARRIER:
                    continue
                prior.append((txhash, vout, descriptor, output.value))
                if output.value != 0:
                    rows[(txhash, descriptor, output.value, ts)] += 1
    return rows


def pipeline_transfer_multiset(transfers, ledger):
    """Map dense-id transfers back to raw identities for comparison."""
    return Counter(
        (ledger.txids[t.tx], ledger.addresses[t.address], t.value, t.timestamp)
        for t in transfers
    )


def investor_window_scan(transfers, start, window):
    """Exhaustive investor search: every address, every candidate window.

    Returns {address: (window_start, total_received, first_seen)} for the
    earliest clean window of each qualifying address.
    """
    considered = [t for t in transfers if t.timestamp >= start]
    result = {}
    for address in {t.address for t in considered}:
        rows = [t for t in considered if t.address == address]
        anchors = sorted(t.timestamp for t in rows if t.value > 0)
        for anchor in anchors:
            spend_inside = any(
                r.value < 0 and anchor <= r.timestamp < anchor + window for r in rows
            )
            if spend_inside:
                continue
            total = sum(
                r.value for r in rows if r.value > 0 and anchor <= r.timestamp < anchor + window
            )
            result[address] = (anchor, total, min(r.timestamp for r in rows))
            break
    return result
