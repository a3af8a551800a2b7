"""Monte Carlo of the full reconciliation chain: channel draws, syndrome,
Bob-side decoding, residual bit errors against Alice's raw bits."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, quantize, sample_valid_observations
from .codes.algebraic import BCHCode, RSCode
from .codes.bitapp import AppSource, LLRTable, bit_llrs
from .codes.gray import gray_encode, gray_label
from .codes.ldpc import MAX_ITER, LDPCCode, bp_decode_batch
from .errors import DecodeFailure


@dataclass(frozen=True)
class SimulationPoint:
    snr_db: float
    blocks: int
    block_errors: int
    bit_errors: int
    bits: int
    decode_failures: int

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else float("nan")

    @property
    def ber_std_err(self) -> float:
        # residual errors arrive in per-block clusters, so scale by block events
        if self.block_errors == 0:
            return float("nan")
        return self.ber / math.sqrt(self.block_errors)

    @property
    def block_error_rate(self) -> float:
        return self.block_errors / self.blocks if self.blocks else float("nan")


def _bits_per_photon(params: ChannelParams) -> int:
    m = int(round(math.log2(params.n_bins)))
    if 1 << m != params.n_bins:
        raise ValueError("N must be a power of two")
    return m


def _pack_symbols(bins: np.ndarray, m: int, ell: int) -> np.ndarray:
    """Gray labels of ``ell`` consecutive photons concatenated into one symbol."""
    g = gray_encode(bins).reshape(bins.shape[:-1] + (-1, ell))
    shifts = m * np.arange(ell - 1, -1, -1)
    return (g << shifts).sum(axis=-1)


def _popcount(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    out = np.zeros_like(x)
    while np.any(x):
        out += x & 1
        x = x >> 1
    return out


def simulate_algebraic(
    params: ChannelParams,
    code: RSCode | BCHCode,
    rng: np.random.Generator,
    target_events: int = 200,
    max_blocks: int = 10**6,
    batch: int = 512,
    snr_db: float | None = None,
) -> SimulationPoint:
    """Hard-output syndrome reconciliation with RS or binary BCH.

    A failed decode leaves Bob with his own word; its bit differences from
    Alice's word count as residual errors.
    """
    m = _bits_per_photon(params)
    if isinstance(code, RSCode):
        if code.symbol_bits % m:
            raise ValueError("symbol width must be a multiple of bits per photon")
        ell = code.symbol_bits // m
        photons = code.n * ell
    else:
        if code.n % m:
            raise ValueError("code length must be a multiple of bits per photon")
        ell = None
        photons = code.n // m
    blocks = block_err = bit_err = failures = 0
    bits_per_block = code.n * code.symbol_bits
    while block_err < target_events and blocks < max_blocks:
        b = min(batch, max_blocks - blocks)
        a_bins, y = sample_valid_observations(params, rng, b * photons)
        a_bins = a_bins.reshape(b, photons)
        b_bins = quantize(y, params.n_bins).reshape(b, photons)
        if ell is not None:
            wa = _pack_symbols(a_bins, m, ell)
            wb = _pack_symbols(b_bins, m, ell)
        else:
            wa = gray_label(a_bins, m).reshape(b, code.n)
            wb = gray_label(b_bins, m).reshape(b, code.n)
        diff = code.syndrome(wb) ^ code.syndrome(wa)
        for r in range(b):
            if not diff[r].any():
                final = wb[r]
            else:
                try:
                    final = wb[r] ^ code.decode_syndrome(diff[r])
                except DecodeFailure:
                    failures += 1
                    final = wb[r]
            e = int(_popcount(final ^ wa[r]).sum())
            if e:
                block_err += 1
                bit_err += e
        blocks += b
    return SimulationPoint(
        params.snr_db if snr_db is None else snr_db,
        blocks, block_err, bit_err, blocks * bits_per_block, failures,
    )


def simulate_ldpc(
    params: ChannelParams,
    code: LDPCCode,
    mode: str,
    rng: np.random.Generator,
    target_events: int = 200,
    max_blocks: int = 10**6,
    batch: int | None = None,
    max_iter: int = MAX_ITER,
    snr_db: float | None = None,
) -> SimulationPoint:
    """Soft (exact or simplified APP) or hard-output LDPC syndrome reconciliation."""
    m = _bits_per_photon(params)
    if code.n % m:
        raise ValueError("code length must be a multiple of bits per photon")
    photons = code.n // m
    if batch is None:
        batch = max(1, 2**17 // code.n)
    table = None if AppSource(mode) is AppSource.HARD else LLRTable.build(params, mode)
    blocks = block_err = bit_err = failures = 0
    while block_err < target_events and blocks < max_blocks:
        b = min(batch, max_blocks - blocks)
        a_bins, y = sample_valid_observations(params, rng, b * photons)
        alice = gray_label(a_bins, m).reshape(b, code.n)
        llr = bit_llrs(params, y, mode, table).reshape(b, code.n)
        words, ok, _ = bp_decode_batch(llr, code.syndrome(alice), code, max_iter)
        e = np.count_nonzero(words != alice, axis=1)
        failures += int(np.count_nonzero(~ok))
        block_err += int(np.count_nonzero(e))
        bit_err += int(e.sum())
        blocks += b
    return SimulationPoint(
        params.snr_db if snr_db is None else snr_db,
        blocks, block_err, bit_err, blocks * code.n, failures,
    )
