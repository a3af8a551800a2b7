"""Union bounds for bounded-distance decoding on the binned channel.

Binomial tails are summed in log space so terms down to 1e-300 and lengths
up to 1e4 neither overflow nor vanish prematurely.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln, logsumexp

from ..channel import ChannelParams, error_rate_closed_form
from ..errors import DomainError
from .algebraic import BCHCode, RSCode


def _log_binom_pmf(n: int, i: np.ndarray, p: float) -> np.ndarray:
    return (
        gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1)
        + i * math.log(p) + (n - i) * math.log1p(-p)
    )


def weighted_binomial_tail(n: int, t: int, p: float, scale: int | None = None) -> float:
    """sum_{i=t+1}^{n} (i/scale) C(n, i) p^i (1-p)^(n-i); ``scale`` defaults to n."""
    if not 0.0 <= p <= 1.0:
        raise DomainError("probability outside [0, 1]")
    if t >= n or p == 0.0:
        return 0.0
    scale = n if scale is None else scale
    if p == 1.0:
        return n / scale
    i = np.arange(t + 1, n + 1, dtype=float)
    return float(np.exp(logsumexp(np.log(i / scale) + _log_binom_pmf(n, i, p))))


def uncoded_bit_error(params: ChannelParams) -> float:
    """Per-bit error of Gray-labelled bins, one bit per bin slip."""
    return error_rate_closed_form(params) / math.log2(params.n_bins)


def union_bound_rs(params: ChannelParams, code: RSCode, ell: int | None = None) -> float:
    """Post-decoding bit error bound of an RS code carrying ``ell`` photons per symbol."""
    m = int(round(math.log2(params.n_bins)))
    if 1 << m != params.n_bins:
        raise DomainError("N must be a power of two")
    if ell is None:
        if code.symbol_bits % m:
            raise DomainError("symbol width is not a multiple of the bits per photon")
        ell = code.symbol_bits // m
    pe = min(error_rate_closed_form(params), 1.0)
    p_in = -math.expm1(ell * math.log1p(-pe)) if pe < 1.0 else 1.0
    p_rs = weighted_binomial_tail(code.n, code.t, p_in)
    p_out = -math.expm1(math.log1p(-p_rs) / ell) if p_rs < 1.0 else 1.0
    return p_out / m


def union_bound_bch(
    params: ChannelParams,
    code: BCHCode,
    errors_per_block: int = 1,
    two_slip_fraction: float | None = None,
) -> float:
    """Post-decoding bit error bound of a binary BCH code.

    With ``errors_per_block=1`` each block of m = log2 N coded bits holds at
    most one bit error (a one-bin slip under Gray labelling). The variant
    ``errors_per_block=2`` lets a fraction ``two_slip_fraction`` of bin
    errors be two-bin slips, which flip exactly two Gray bits; by default the
    fraction comes from the exact transition matrix.
    """
    m = int(round(math.log2(params.n_bins)))
    if 1 << m != params.n_bins or code.n % m:
        raise DomainError("need N = 2^m with m dividing the code length")
    blocks = code.n // m
    pe = min(error_rate_closed_form(params), 1.0)
    if errors_per_block == 1:
        return weighted_binomial_tail(blocks, code.t, pe, scale=code.n)
    if errors_per_block != 2:
        raise ValueError("errors_per_block must be 1 or 2")
    if two_slip_fraction is None:
        two_slip_fraction = _two_slip_fraction(params)
    q = float(two_slip_fraction)
    p1, p2 = pe * (1.0 - q), pe * q
    p0 = 1.0 - pe
    terms = []
    with np.errstate(divide="ignore"):
        lp0, lp1, lp2 = (math.log(v) if v > 0 else -np.inf for v in (p0, p1, p2))
    for k2 in range(blocks + 1):
        k1 = np.arange(0, blocks - k2 + 1, dtype=float)
        i = k1 + 2 * k2
        keep = i > code.t
        if not keep.any():
            continue
        k1, i = k1[keep], i[keep]
        k0 = blocks - k1 - k2
        with np.errstate(invalid="ignore"):
            lw = (
                gammaln(blocks + 1) - gammaln(k0 + 1) - gammaln(k1 + 1) - gammaln(k2 + 1)
                + np.where(k0 > 0, k0 * lp0, 0.0)
                + np.where(k1 > 0, k1 * lp1, 0.0)
                + (k2 * lp2 if k2 > 0 else 0.0)
                + np.log(i / code.n)
            )
        terms.append(lw)
    if not terms:
        return 0.0
    return float(np.exp(logsumexp(np.concatenate(terms))))


def _two_slip_fraction(params: ChannelParams) -> float:
    from ..rates import transition_matrix

    tm = transition_matrix(params)
    i, j = np.indices(tm.p.shape)
    pi = tm.prior.probs
    far = float(np.dot(pi, np.where(np.abs(i - j) >= 2, tm.p, 0.0).sum(axis=1)))
    total = tm.error_probability
    return far / total if total > 0 else 0.0


def snr_at_error_rate(bound, target: float, lo_db: float = 10.0, hi_db: float = 300.0) -> float:
    """SNR (dB) at which a decreasing bound function of snr_db equals ``target``."""
    from scipy.optimize import brentq

    def gap(db):
        return math.log(max(bound(db), 1e-320)) - math.log(target)

    if gap(lo_db) < 0 or gap(hi_db) > 0:
        raise DomainError(f"target {target:g} not bracketed in [{lo_db}, {hi_db}] dB")
    return float(brentq(gap, lo_db, hi_db, xtol=1e-6))
