"""Bit-level a posteriori probabilities of Gray-labelled bins.

Each mode returns a :class:`BitAPP` holding ``p_one`` and the log-ratio
``llr = log P(bit=0) / P(bit=1)``. The log-ratio is formed from the two
marginal sums directly rather than from ``1 - p_one``, which would lose all
precision once a bit is nearly certain.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ..channel import ChannelParams, quantize
from ..rates import bin_kernels, transition_highsnr, transition_matrix
from .gray import label_table

SIMPLIFIED_FLOOR = 1e-12
_TINY = 1e-300


class AppSource(enum.Enum):
    EXACT = "exact"
    SIMPLIFIED = "simplified"
    HARD = "hard"


@dataclass(frozen=True)
class BitAPP:
    p_one: np.ndarray
    llr: np.ndarray
    source: AppSource

    def __post_init__(self):
        if np.any((self.p_one < 0.0) | (self.p_one > 1.0)):
            raise ValueError("bit probabilities must lie in [0, 1]")

    @property
    def hard_bits(self) -> np.ndarray:
        return (self.llr < 0).astype(np.uint8)


def _bits_per_bin(params: ChannelParams, m: int | None) -> int:
    mm = int(round(math.log2(params.n_bins)))
    if 1 << mm != params.n_bins:
        raise ValueError("bit APPs need N = 2^m bins")
    if m is not None and m != mm:
        raise ValueError(f"m={m} does not match N={params.n_bins}")
    return mm


def marginalize(scores: np.ndarray, m: int, source: AppSource) -> BitAPP:
    """Gray-marginalize unnormalized bin scores (..., N) into bit APPs (..., m)."""
    table = label_table(m).astype(float)
    s1 = scores @ table
    s0 = scores @ (1.0 - table)
    tot = s0 + s1
    p_one = np.clip(s1 / tot, 0.0, 1.0)
    llr = np.log(np.maximum(s0, _TINY)) - np.log(np.maximum(s1, _TINY))
    return BitAPP(p_one, llr, source)


def bit_app_exact(params: ChannelParams, y, m: int | None = None) -> BitAPP:
    """Marginal bit APPs of the exact bin posterior given Bob's position."""
    m = _bits_per_bin(params, m)
    return marginalize(bin_kernels(params, y), m, AppSource.EXACT)


def simplified_bin_scores(params: ChannelParams, y, floor: float = SIMPLIFIED_FLOOR) -> np.ndarray:
    """Bin scores with Q(x) replaced by exp(-x^2/2)/2 on each side of the observed bin."""
    y = np.asarray(y, dtype=float)[..., None]
    s = params.sigma
    i = np.arange(params.n_bins, dtype=float)
    j = quantize(y, params.n_bins).astype(float)
    e_lo = 0.5 * np.exp(-((y - i) ** 2) / (2.0 * s * s))
    e_hi = 0.5 * np.exp(-((y - i - 1.0) ** 2) / (2.0 * s * s))
    same = 1.0 - e_lo - e_hi
    other = np.sign(j - i) * (e_hi - e_lo)
    return np.maximum(np.where(i == j, same, other), floor)


def bit_app_simplified(params: ChannelParams, y, m: int | None = None,
                       floor: float = SIMPLIFIED_FLOOR) -> BitAPP:
    m = _bits_per_bin(params, m)
    return marginalize(simplified_bin_scores(params, y, floor), m, AppSource.SIMPLIFIED)


def bit_app_hard(params: ChannelParams, observed_bin, m: int | None = None,
                 closed_form: bool = False) -> BitAPP:
    """Bit APPs when Bob only knows his bin: scores prior_i * p[i, j]."""
    m = _bits_per_bin(params, m)
    if closed_form:
        prior, p = transition_highsnr(params)
    else:
        tm = transition_matrix(params)
        prior, p = tm.prior.probs, tm.p
    joint = prior[:, None] * p  # (i, j)
    j = np.asarray(observed_bin, dtype=np.int64)
    if np.any((j < 0) | (j >= params.n_bins)):
        raise ValueError("observed bin out of range")
    return marginalize(joint.T[j], m, AppSource.HARD)


def bit_apps(params: ChannelParams, bob_positions, mode: str | AppSource) -> BitAPP:
    """Dispatch on mode; hard mode quantizes the positions first."""
    mode = AppSource(mode) if not isinstance(mode, AppSource) else mode
    if mode is AppSource.EXACT:
        return bit_app_exact(params, bob_positions)
    if mode is AppSource.SIMPLIFIED:
        return bit_app_simplified(params, bob_positions)
    return bit_app_hard(params, quantize(np.asarray(bob_positions), params.n_bins))


@dataclass(frozen=True)
class LLRTable:
    """Bit LLRs tabulated on a uniform position grid and linearly interpolated.

    Values are clamped to +/- ``clamp`` before tabulation (the decoder clamps
    there anyway), which keeps the interpolated curve smooth.
    """

    params: ChannelParams
    source: AppSource
    grid: np.ndarray
    values: np.ndarray  # (len(grid), m)
    step: float

    @classmethod
    def build(cls, params: ChannelParams, mode, points_per_sigma: int = 64,
              clamp: float = 30.0) -> "LLRTable":
        mode = AppSource(mode) if not isinstance(mode, AppSource) else mode
        if mode is AppSource.HARD:
            raise ValueError("hard-output LLRs depend on the bin only; no table needed")
        n = params.n_bins
        count = int(math.ceil(n * points_per_sigma / params.sigma)) + 1
        grid = np.linspace(0.0, float(n), count)
        # the frame end is open: evaluate just inside it
        pts = grid.copy()
        pts[-1] = np.nextafter(float(n), 0.0)
        vals = np.clip(bit_apps(params, pts, mode).llr, -clamp, clamp)
        return cls(params, mode, grid, vals, grid[1] - grid[0])

    def lookup(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        pos = np.clip(y / self.step, 0.0, self.grid.size - 1.000001)
        k = np.floor(pos).astype(np.int64)
        w = (pos - k)[..., None]
        return (1.0 - w) * self.values[k] + w * self.values[k + 1]


def bit_llrs(params: ChannelParams, bob_positions, mode, table: LLRTable | None = None) -> np.ndarray:
    """Bit LLRs for decoding; soft modes use ``table`` when one is given."""
    mode = AppSource(mode) if not isinstance(mode, AppSource) else mode
    if table is not None and mode is not AppSource.HARD:
        if table.source is not mode or table.params != params:
            raise ValueError("LLR table built for different parameters")
        return table.lookup(bob_positions)
    return bit_apps(params, bob_positions, mode).llr
