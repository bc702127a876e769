"""Classical broadcast baseline: flood the payload over every port."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from weldroute.distsim import CLASSICAL, RoundLedger, account_round
from weldroute.weldedgraph import PortGraph


@dataclass
class FloodResult:
    bits_sent: int
    success: bool
    rounds: int
    messages: int
    ledger: RoundLedger


def run_flooding_baseline(inst: PortGraph, b: int) -> FloodResult:
    """Synchronous flood of a ``b``-bit payload from ``source``.

    A vertex forwards once, in the round after it first hears the payload, on
    every port it did not receive the payload on in that round.  Later copies
    are dropped.  ``target`` keeps forwarding too, since it cannot know that
    nobody else needs the data.
    """
    if b < 1:
        raise ValueError("payload needs at least one bit")
    V = inst.num_vertices
    informed = np.zeros(V, dtype=bool)
    informed[inst.source] = True
    # arcs whose tail forwards this round
    sending = np.arange(inst.offsets[inst.source], inst.offsets[inst.source + 1])
    ledger = RoundLedger(CLASSICAL)
    tails = inst.tails
    heads = inst.heads
    rev = inst.rev
    messages = 0
    while sending.size:
        ledger.record(account_round([[b] * int(sending.size)], CLASSICAL))
        messages += int(sending.size)
        recv = heads[sending]
        fresh = np.unique(recv[~informed[recv]])
        if not fresh.size:
            break
        informed[fresh] = True
        # exclude ports the payload just arrived on
        arrived = np.zeros(inst.num_arcs, dtype=bool)
        arrived[rev[sending]] = True
        is_fresh = np.zeros(V, dtype=bool)
        is_fresh[fresh] = True
        sending = np.flatnonzero(is_fresh[tails] & ~arrived)
    return FloodResult(
        bits_sent=ledger.total,
        success=bool(informed[inst.target]),
        rounds=ledger.rounds,
        messages=messages,
        ledger=ledger,
    )
