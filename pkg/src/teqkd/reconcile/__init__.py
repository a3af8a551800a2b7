"""One-way syndrome reconciliation, in process and over TCP."""

from .protocol import (
    ReconciliationResult,
    SyndromeMessage,
    alice_emit,
    bob_reconcile_algebraic,
    bob_reconcile_soft,
    key_rate,
    leakage_bits,
    raw_word,
    reconcile_block,
)
from .transport import AliceReport, BobServer, run_alice

__all__ = [
    "AliceReport", "BobServer", "ReconciliationResult", "SyndromeMessage", "alice_emit",
    "bob_reconcile_algebraic", "bob_reconcile_soft", "key_rate", "leakage_bits", "raw_word",
    "reconcile_block", "run_alice",
]
