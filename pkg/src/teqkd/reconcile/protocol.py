"""One-way syndrome reconciliation: Alice discloses a syndrome, Bob decodes.

Raw words are built from valid-frame bins: RS symbols concatenate the Gray
labels of ``symbol_bits / m`` consecutive photons; binary codes use the Gray
bits of each photon in order.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from ..channel import ChannelParams, quantize, sample_valid_observations
from ..codes.algebraic import BCHCode, RSCode
from ..codes.bitapp import AppSource, LLRTable, bit_llrs
from ..codes.gray import gray_encode, gray_label
from ..codes.ldpc import MAX_ITER, LDPCCode, bp_decode_batch
from ..errors import DecodeFailure


@dataclass(frozen=True)
class SyndromeMessage:
    code_id: str
    field_width: int
    syndrome: np.ndarray
    frame_count: int
    session_nonce: bytes = b"\x00" * 8
    block_index: int = 0

    def __post_init__(self):
        if len(self.session_nonce) != 8:
            raise ValueError("session nonce must be 8 bytes")

    @property
    def bits_disclosed(self) -> int:
        return int(self.syndrome.size) * self.field_width


@dataclass(frozen=True)
class ReconciliationResult:
    recovered_word: np.ndarray
    success: bool
    residual_bit_errors: int | None = None
    iterations_used: int = 0


def bits_per_photon(n_bins: int) -> int:
    m = int(round(math.log2(n_bins)))
    if 1 << m != n_bins:
        raise ValueError("N must be a power of two")
    return m


def photons_per_block(code, m: int) -> int:
    total = code.n * code.symbol_bits
    if total % m:
        raise ValueError(f"code carries {total} bits, not a multiple of {m} bits per photon")
    return total // m


def raw_word(bins, code, m: int) -> np.ndarray:
    """Code-alphabet word(s) from bin indices; batched over leading axes."""
    bins = np.asarray(bins, dtype=np.int64)
    if isinstance(code, RSCode):
        ell = code.symbol_bits // m
        g = gray_encode(bins).reshape(bins.shape[:-1] + (code.n, ell))
        return (g << (m * np.arange(ell - 1, -1, -1))).sum(axis=-1)
    return gray_label(bins, m).reshape(bins.shape[:-1] + (code.n,))


def word_bits(word, code) -> np.ndarray:
    """Flatten a word to bits (MSB-first within each symbol)."""
    w = np.asarray(word, dtype=np.int64)
    width = code.symbol_bits
    if width == 1:
        return w.astype(np.uint8)
    return ((w[..., None] >> np.arange(width - 1, -1, -1)) & 1).reshape(w.shape[:-1] + (-1,)).astype(np.uint8)


def leakage_bits(code) -> int:
    """Bits disclosed per block: syndrome symbols times symbol width."""
    return code.syndrome_length * code.symbol_bits


def key_rate(code, m: int) -> float:
    """Retained bits per photon: (n * width - disclosed) / photons."""
    return (code.n * code.symbol_bits - leakage_bits(code)) / photons_per_block(code, m)


def new_nonce() -> bytes:
    return os.urandom(8)


def alice_emit(raw, code, m: int, session_nonce: bytes = b"\x00" * 8, block_index: int = 0) -> SyndromeMessage:
    """Syndrome message for Alice's raw word; never carries the word itself."""
    s = np.asarray(code.syndrome(raw))
    return SyndromeMessage(
        code_id=code.code_id,
        field_width=code.symbol_bits,
        syndrome=s,
        frame_count=photons_per_block(code, m),
        session_nonce=session_nonce,
        block_index=block_index,
    )


def _residual(recovered, truth, code) -> int | None:
    if truth is None:
        return None
    return int(np.count_nonzero(word_bits(recovered, code) != word_bits(truth, code)))


def bob_reconcile_algebraic(bob_word, msg: SyndromeMessage, code: RSCode | BCHCode,
                            alice_word=None) -> ReconciliationResult:
    """Decode syndrome(bob) - syndrome(alice) to the discrepancy and remove it."""
    if msg.code_id != code.code_id:
        raise ValueError(f"message for {msg.code_id!r}, decoder holds {code.code_id!r}")
    bob_word = np.asarray(bob_word)
    diff = np.asarray(code.syndrome(bob_word)) ^ msg.syndrome
    try:
        err = code.decode_syndrome(diff)
    except DecodeFailure:
        return ReconciliationResult(bob_word.copy(), False, _residual(bob_word, alice_word, code))
    rec = bob_word ^ err
    return ReconciliationResult(rec, True, _residual(rec, alice_word, code))


def bob_reconcile_soft(bob_positions, msg: SyndromeMessage, code: LDPCCode, params: ChannelParams,
                       app_mode="exact", alice_bits=None, table: LLRTable | None = None,
                       max_iter: int = MAX_ITER) -> ReconciliationResult:
    """Belief propagation towards Alice's syndrome from Bob's positions (or bins in hard mode)."""
    if msg.code_id != code.code_id:
        raise ValueError(f"message for {msg.code_id!r}, decoder holds {code.code_id!r}")
    pos = np.asarray([o.bob_position for o in bob_positions] if len(bob_positions) and hasattr(
        bob_positions[0], "bob_position") else bob_positions, dtype=float)
    m = bits_per_photon(params.n_bins)
    if pos.size * m != code.n:
        raise ValueError(f"{pos.size} observations do not fill a length-{code.n} word")
    llr = bit_llrs(params, pos, AppSource(app_mode), table).reshape(1, code.n)
    words, ok, iters = bp_decode_batch(llr, msg.syndrome[None, :], code, max_iter)
    return ReconciliationResult(words[0], bool(ok[0]), _residual(words[0], alice_bits, code), int(iters[0]))


# ---------------------------------------------------------------- aligned block source


def block_rng(seed: int, block_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, block_index]))


def block_observations(params: ChannelParams, seed: int, block_index: int, photons: int):
    """Both parties' view of one block of valid frames, reproducible from (seed, index).

    Stands in for the physical stream: both sides regenerate the same draws
    from a seed shared out of band, so frames are aligned by construction.
    """
    return sample_valid_observations(params, block_rng(seed, block_index), photons)


@dataclass
class BlockOutcome:
    block_index: int
    success: bool
    recovered_word: np.ndarray
    residual_bit_errors: int | None = None
    iterations_used: int = 0


def reconcile_block(params: ChannelParams, code, seed: int, block_index: int,
                    app_mode: str = "exact", table: LLRTable | None = None) -> BlockOutcome:
    """In-process reconciliation of one aligned block (reference for the transport)."""
    m = bits_per_photon(params.n_bins)
    a_bins, y = block_observations(params, seed, block_index, photons_per_block(code, m))
    alice = raw_word(a_bins, code, m)
    msg = alice_emit(alice, code, m, block_index=block_index)
    if isinstance(code, LDPCCode):
        res = bob_reconcile_soft(y, msg, code, params, app_mode, alice_bits=alice, table=table)
    else:
        res = bob_reconcile_algebraic(raw_word(quantize(y, params.n_bins), code, m), msg, code, alice)
    return BlockOutcome(block_index, res.success,
                        res.recovered_word, res.residual_bit_errors, res.iterations_used)
