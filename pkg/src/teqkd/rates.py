"""Exact densities, transition laws and information rates of the binned channel.

Notation used throughout:

* ``window(u)``  = P(u + Z in [0, N))            -- frame acceptance given u
* ``bin_i(u)``   = P(u + Z in [i, i + 1))         -- bin occupancy given u
* ``kernel_i(y)`` = int_0^N phi_sigma(y - u) bin_i(u) du

Every rate below is a ratio of integrals of products of these. One-dimensional
integrals over ``u`` go through :func:`teqkd.numerics.integrate`; the
convolution ``kernel_i(y)`` is evaluated with a fixed Gauss-Legendre rule in
coordinates centred on ``y`` and scaled by ``sigma``, where the integrand
varies on a unit scale whatever the jitter is.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .channel import ChannelParams, frame_breakpoints
from .curves import RateCurve
from .errors import DomainError, NoBracket
from .numerics import (
    DEFAULT_SPEC,
    QuadratureSpec,
    antiderivative_Q,
    antiderivative_Q2,
    entropy,
    entropy_binary,
    entropy_ternary,
    gauss_legendre_panels,
    gaussian_tail,
    integrate,
    normal_pdf,
    q_diff,
    xlog2x,
)

#: (1 + sqrt 2) / (2 sqrt pi): edge-bin loss coefficient in the high-SNR forms
BETA = (1.0 + math.sqrt(2.0)) / (2.0 * math.sqrt(math.pi))

# Local Gauss-Legendre rule for the Gaussian convolution: |s| <= 10 keeps the
# truncated mass below 1e-23.
_KERNEL_HALF_WIDTH = 10.0
_KERNEL_PANELS = 20
_KERNEL_ORDER = 10
# Bins farther than this many sigma (beyond the window) carry < Q(10) mass.
_BAND_SIGMAS = _KERNEL_HALF_WIDTH + 10.0
# Working-set cap (elements) for chunked kernel evaluation.
_CHUNK_ELEMS = 1 << 22

# Outer tolerance for the nested (y then u) integrals.
NESTED_SPEC = QuadratureSpec(abs_tol=1e-8, rel_tol=1e-10, max_subdivisions=2**16)


class PriorKind(enum.Enum):
    ALICE_VALID = "alice_valid"
    BOTH_VALID = "both_valid"


@dataclass(frozen=True)
class PriorVector:
    probs: np.ndarray
    kind: PriorKind

    def __post_init__(self):
        p = self.probs
        p.flags.writeable = False
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
            raise ValueError("prior must be a probability vector")
        if np.max(np.abs(p - p[::-1])) > 1e-10:
            raise ValueError("prior must be mirror-symmetric")

    @property
    def entropy(self) -> float:
        return entropy(self.probs)


@dataclass(frozen=True)
class TransitionMatrix:
    """Hard-channel law p[i, j] = P(bob_bin = j | alice_bin = i) with its prior."""

    p: np.ndarray
    params: ChannelParams
    prior: PriorVector

    def __post_init__(self):
        self.p.flags.writeable = False
        if np.max(np.abs(self.p.sum(axis=1) - 1.0)) > 1e-9:
            raise ValueError("transition rows must sum to 1")

    @property
    def error_probability(self) -> float:
        return float(np.dot(self.prior.probs, 1.0 - np.diag(self.p)))


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def window(params: ChannelParams, u):
    n, s = params.n_bins, params.sigma
    u = np.asarray(u, dtype=float)
    return q_diff(-u / s, (n - u) / s)


def bin_windows(params: ChannelParams, u) -> np.ndarray:
    """bin_i(u) for all bins: shape ``u.shape + (N,)``."""
    s = params.sigma
    u = np.asarray(u, dtype=float)[..., None]
    i = np.arange(params.n_bins, dtype=float)
    return q_diff((i - u) / s, (i + 1.0 - u) / s)


# ---------------------------------------------------------------- priors


@lru_cache(maxsize=256)
def _alice_prior(params: ChannelParams, spec: QuadratureSpec) -> np.ndarray:
    n = params.n_bins

    def integrand(x):
        onehot = np.zeros((x.size, n))
        idx = np.minimum(np.floor(x).astype(int), n - 1)
        onehot[np.arange(x.size), idx] = window(params, x)
        return onehot

    mass = integrate(integrand, 0.0, float(n), spec, points=frame_breakpoints(params))
    mass = 0.5 * (mass + mass[::-1])
    return _frozen(mass / mass.sum())


def prior_alice_valid(params: ChannelParams, spec: QuadratureSpec = DEFAULT_SPEC) -> PriorVector:
    """P(alice_bin = i) given only Alice's frame is valid."""
    return PriorVector(_alice_prior(params, spec), PriorKind.ALICE_VALID)


@lru_cache(maxsize=256)
def _overlap(params: ChannelParams, spec: QuadratureSpec) -> np.ndarray:
    """overlap[i, j] = int_0^N bin_i(u) bin_j(u) du (symmetric)."""

    def integrand(u):
        b = bin_windows(params, u)
        return b[:, :, None] * b[:, None, :]

    m = integrate(integrand, 0.0, float(params.n_bins), spec, points=frame_breakpoints(params))
    m = np.clip(m, 0.0, None)
    # exact model symmetries: transpose and centre reflection
    m = 0.5 * (m + m.T)
    m = 0.5 * (m + m[::-1, ::-1])
    return _frozen(m)


def prior_both_valid(params: ChannelParams, spec: QuadratureSpec = DEFAULT_SPEC) -> PriorVector:
    """P(alice_bin = i) given both frames are valid."""
    d = _overlap(params, spec).sum(axis=1)
    return PriorVector(d / d.sum(), PriorKind.BOTH_VALID)


def transition_matrix(params: ChannelParams, spec: QuadratureSpec = DEFAULT_SPEC) -> TransitionMatrix:
    m = _overlap(params, spec)
    d = m.sum(axis=1)
    return TransitionMatrix(m / d[:, None], params, PriorVector(d / d.sum(), PriorKind.BOTH_VALID))


def conditional_u_density(
    params: ChannelParams,
    i: int,
    both_valid: bool = True,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> Callable[[np.ndarray], np.ndarray]:
    """Density of the emission time given Alice's bin (optionally also Bob valid)."""
    n = params.n_bins
    if not 0 <= i < n:
        raise DomainError(f"bin {i} outside 0..{n - 1}")
    pts = frame_breakpoints(params)

    if both_valid:
        def raw(u):
            return bin_windows(params, u)[..., i] * window(params, u)
    else:
        def raw(u):
            return bin_windows(params, u)[..., i]

    norm = integrate(raw, 0.0, float(n), spec, points=pts)

    def density(u):
        u = np.asarray(u, dtype=float)
        inside = (u >= 0.0) & (u < n)
        return np.where(inside, raw(u) / norm, 0.0)

    return density


# ---------------------------------------------------------------- kernels


def bin_kernels(params: ChannelParams, y) -> np.ndarray:
    """kernel_i(y) = int_0^N phi_sigma(y - u) bin_i(u) du, shape ``y.shape + (N,)``.

    Substituting ``u = y + sigma * s`` makes both factors vary on a unit
    scale in ``s``, so one composite Gauss-Legendre rule on
    ``|s| <= 10`` (clipped to the frame) is accurate at any jitter.
    Bins more than ~20 sigma from ``y`` are left at exactly zero.
    """
    n, s = params.n_bins, params.sigma
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    flat = y_arr.ravel()
    out = np.zeros((flat.size, n))

    band = int(math.ceil(_BAND_SIGMAS * s)) + 1
    if 2 * band + 1 >= n:
        offsets = None
        width = n
    else:
        offsets = np.arange(-band, band + 1)
        width = offsets.size
    per_row = _KERNEL_PANELS * _KERNEL_ORDER * width
    step = max(1, _CHUNK_ELEMS // per_row)

    for start in range(0, flat.size, step):
        yc = flat[start:start + step]
        lo = np.maximum(-_KERNEL_HALF_WIDTH, -yc / s)
        hi = np.minimum(_KERNEL_HALF_WIDTH, (n - yc) / s)
        hi = np.maximum(hi, lo)
        nodes, weights = gauss_legendre_panels(lo, hi, _KERNEL_PANELS, _KERNEL_ORDER)
        wphi = weights * normal_pdf(nodes)  # (m, K)
        if offsets is None:
            bins = np.broadcast_to(np.arange(n, dtype=float), (yc.size, n))
        else:
            j0 = np.minimum(np.floor(yc).astype(int), n - 1)
            bins = np.clip(j0[:, None] + offsets[None, :], 0, n - 1).astype(float)
        # bin_i(y + s*t) = Q((i - y)/s - t) - Q((i + 1 - y)/s - t)
        d_lo = (bins - yc[:, None]) / s  # (m, W)
        d_hi = (bins + 1.0 - yc[:, None]) / s
        vals = q_diff(d_lo[:, :, None] - nodes[:, None, :], d_hi[:, :, None] - nodes[:, None, :])
        k = np.einsum("mwk,mk->mw", vals, wphi)
        if offsets is None:
            out[start:start + step] = k
        else:
            rows = np.repeat(np.arange(yc.size), width)
            out[start + rows, bins.astype(int).ravel()] = k.ravel()
    return out.reshape(y_arr.shape + (n,)) if np.ndim(y) else out[0]


def likelihood(params: ChannelParams, i: int, y, spec: QuadratureSpec = DEFAULT_SPEC):
    """p(y | alice_bin = i), both frames valid."""
    n = params.n_bins
    if not 0 <= i < n:
        raise DomainError(f"bin {i} outside 0..{n - 1}")
    norm = _overlap(params, spec).sum(axis=1)[i]
    val = bin_kernels(params, y)[..., i] / norm
    return val if np.ndim(val) else float(val)


def output_density(params: ChannelParams, y, spec: QuadratureSpec = DEFAULT_SPEC):
    """Density of Bob's in-frame position given both frames are valid."""
    z = _overlap(params, spec).sum()
    val = bin_kernels(params, y).sum(axis=-1) / z
    return val if np.ndim(val) else float(val)


def app_bins(params: ChannelParams, y) -> np.ndarray:
    """P(alice_bin = i | bob_position = y) for every bin; rows sum to 1."""
    k = bin_kernels(params, y)
    return k / k.sum(axis=-1, keepdims=True)


# ---------------------------------------------------------------- hard-output rates


def mutual_info_hard(params: ChannelParams, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """I(alice_bin; bob_bin) in bits."""
    tm = transition_matrix(params, spec)
    pi = tm.prior.probs
    return float(entropy(pi) + np.dot(pi, xlog2x(tm.p).sum(axis=1)))


def mutual_info_hard_truncated(params: ChannelParams, D: int, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Uniform-prior approximation keeping only |i - j| <= D transitions."""
    if D < 0:
        raise DomainError("D must be non-negative")
    n = params.n_bins
    p = transition_matrix(params, spec).p
    i, j = np.indices(p.shape)
    band = np.abs(i - j) <= D
    return float(math.log2(n) + xlog2x(p[band]).sum() / n)


def mutual_info_hard_highsnr(params: ChannelParams) -> float:
    """Closed-form small-jitter mutual information (edge bins via H2, inner via H3)."""
    n, s = params.n_bins, params.sigma
    sbar = s / n
    k = n * (1.0 - 2.0 * BETA * sbar)
    edge = 1.0 - BETA * s
    p_side = s / math.sqrt(math.pi)
    if k <= 0 or edge <= 0 or p_side / edge > 1.0 or p_side > 0.5:
        raise DomainError(f"high-SNR closed form undefined at sigma={s:g}")
    return (
        (n - 2.0 * BETA * s) / k * math.log2(k)
        - 2.0 * edge / k * math.log2(edge)
        - 2.0 * edge / k * entropy_binary(p_side / edge)
        - (n - 2.0) / k * entropy_ternary(p_side)
    )


def circular_neighbour_probs(sigma: float, spec: QuadratureSpec = DEFAULT_SPEC) -> tuple[float, float, float]:
    """(p00, p01, p02) of the circular approximation from the I1, I2, I3 integrals."""
    a = 1.0 / sigma
    i1 = antiderivative_Q(a, 1.0) - antiderivative_Q(a, 0.0)
    i2 = antiderivative_Q2(a, 1.0) - antiderivative_Q2(a, 0.0)
    pts = [8.0 * sigma, 1.0 - 8.0 * sigma] if 8.0 * sigma < 0.5 else None
    i3 = integrate(lambda v: gaussian_tail(v / sigma) * gaussian_tail((1.0 - v) / sigma), 0.0, 1.0, spec, points=pts)
    p01 = 2.0 * (i1 - i2 - i3)
    p02 = 2.0 * i3
    return 1.0 - 2.0 * p01 - 2.0 * p02, p01, p02


def mutual_info_hard_circular(params: ChannelParams, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    p00, p01, p02 = circular_neighbour_probs(params.sigma, spec)
    return float(math.log2(params.n_bins) + xlog2x(p00) + 2.0 * xlog2x(p01) + 2.0 * xlog2x(p02))


def transition_highsnr(params: ChannelParams) -> tuple[np.ndarray, np.ndarray]:
    """Small-jitter closed forms for (prior, transition matrix); |i-j| >= 2 forced to 0."""
    n, s = params.n_bins, params.sigma
    k = n * (1.0 - 2.0 * BETA * s / n)
    prior = np.full(n, 1.0 / k)
    prior[0] = prior[-1] = (1.0 - BETA * s) / k
    side = s / math.sqrt(math.pi)
    p = np.zeros((n, n))
    idx = np.arange(1, n - 1)
    p[idx, idx - 1] = side
    p[idx, idx + 1] = side
    p[idx, idx] = 1.0 - 2.0 * side
    p01 = side / (1.0 - BETA * s)
    p[0, 0] = p[-1, -1] = 1.0 - p01
    p[0, 1] = p[-1, -2] = p01
    return prior, p


# ---------------------------------------------------------------- soft-output rates


def mutual_info_soft(params: ChannelParams, spec: QuadratureSpec = NESTED_SPEC) -> float:
    """I(alice_bin; bob_position) in bits.

    Uses pi_i p(y|i) = kernel_i(y) / Z and APP_i(y) = kernel_i(y) / sum_k kernel_k(y),
    so the integrand is (1/Z) sum_i kernel_i log2(kernel_i / kernel).
    """
    n = params.n_bins
    m = _overlap(params, DEFAULT_SPEC)
    z = m.sum()
    prior = m.sum(axis=1) / z

    def integrand(y):
        k = bin_kernels(params, y)
        tot = k.sum(axis=1)
        return (xlog2x(k).sum(axis=1) - xlog2x(tot)) / z

    cond = integrate(integrand, 0.0, float(n), spec, points=frame_breakpoints(params))
    return float(entropy(prior) + cond)


def _unit_window(x, sigma):
    x = np.asarray(x, dtype=float)
    return q_diff(-x / sigma, (1.0 - x) / sigma)


def _unit_kernel(x, sigma):
    """int_0^1 phi_sigma(x - u) window_1(u) du for a unit frame."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    lo = np.maximum(-_KERNEL_HALF_WIDTH, -x / sigma)
    hi = np.minimum(_KERNEL_HALF_WIDTH, (1.0 - x) / sigma)
    hi = np.maximum(hi, lo)
    nodes, weights = gauss_legendre_panels(lo, hi, _KERNEL_PANELS, _KERNEL_ORDER)
    vals = q_diff(-x[:, None] / sigma - nodes, (1.0 - x[:, None]) / sigma - nodes)
    return np.sum(weights * normal_pdf(nodes) * vals, axis=1)


def _unit_breakpoints(sigma):
    if 8.0 * sigma < 0.5:
        return [8.0 * sigma, 0.5, 1.0 - 8.0 * sigma]
    return [0.5]


def secrecy_density_x(sigma_unit_frame: float, x, spec: QuadratureSpec = DEFAULT_SPEC):
    """p(x) on a unit frame, both frames valid."""
    s = sigma_unit_frame
    z = integrate(lambda t: _unit_window(t, s) ** 2, 0.0, 1.0, spec, points=_unit_breakpoints(s))
    val = _unit_kernel(x, s) / z
    return val if np.ndim(x) else float(val[0])


def secrecy_conditional_density(sigma_unit_frame: float, y, x):
    """p(y | x) on a unit frame (continuous input, continuous output)."""
    s = sigma_unit_frame
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mid = 0.5 * (x + y)
    sh = s / math.sqrt(2.0)
    num = normal_pdf((y - x) / (s * math.sqrt(2.0))) / (s * math.sqrt(2.0)) * q_diff(-mid / sh, (1.0 - mid) / sh)
    inside = (x >= 0) & (x <= 1) & (y >= 0) & (y <= 1)
    val = np.where(inside, num / _unit_kernel(np.atleast_1d(x), s).reshape(x.shape), 0.0)
    return val if np.ndim(val) else float(val)


def secrecy_capacity(sigma_unit_frame: float, spec: QuadratureSpec = NESTED_SPEC) -> float:
    """I(X; Y) in bits for continuous positions on a unit-length frame.

    Written as int_0^1 p(x) [ int p(y|x) log2 p(y|x) dy - log2 p(x) ] dx; the
    inner integral runs in t = (y - x) / (sigma sqrt 2), clipped to the frame.
    """
    s = sigma_unit_frame
    if not s > 0:
        raise DomainError("sigma must be positive")
    pts = _unit_breakpoints(s)
    z = integrate(lambda t: _unit_window(t, s) ** 2, 0.0, 1.0, DEFAULT_SPEC, points=pts)
    s2 = s * math.sqrt(2.0)
    sh = s / math.sqrt(2.0)

    def integrand(x):
        i6 = _unit_kernel(x, s)
        px = i6 / z
        lo = np.maximum(-_KERNEL_HALF_WIDTH, -x / s2)
        hi = np.minimum(_KERNEL_HALF_WIDTH, (1.0 - x) / s2)
        hi = np.maximum(hi, lo)
        t, w = gauss_legendre_panels(lo, hi, _KERNEL_PANELS, _KERNEL_ORDER)
        mid_scaled = math.sqrt(2.0) * x[:, None] / s + t  # (x + y)/2 over sh
        f = q_diff(-mid_scaled, 1.0 / sh - mid_scaled)
        ratio = f / i6[:, None]
        phi = normal_pdf(t)
        dens = phi * ratio / s2  # p(y|x)
        inner = np.sum(w * phi * ratio * np.log2(np.where(dens > 0, dens, 1.0)), axis=1)
        return px * (inner - np.log2(px))

    return float(integrate(integrand, 0.0, 1.0, spec, points=pts))


def secrecy_capacity_highsnr(gamma_bar: float) -> float:
    """Gaussian differential-entropy limit: 0.5 log2(gamma_bar / (4 pi e))."""
    return 0.5 * math.log2(gamma_bar / (4.0 * math.pi * math.e))


def backoff_snr_db(bits_backoff: float) -> float:
    """Per-bin SNR where the log formula sits ``bits_backoff`` below log2(N).

    Independent of N because gamma_bar = N^2 gamma.
    """
    return 10.0 * math.log10(4.0 * math.pi * math.e / 2.0 ** (2.0 * bits_backoff))


# ---------------------------------------------------------------- limits

LIMIT_BRACKET_DB = (-10.0, 60.0)
_SWEEP_STEP_DB = 5.0


def _mi(mode: str):
    if mode == "hard":
        return mutual_info_hard
    if mode == "soft":
        return mutual_info_soft
    raise ValueError(f"mode must be 'hard' or 'soft', not {mode!r}")


@lru_cache(maxsize=64)
def _coarse_sweep(n_bins: int, mode: str) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = LIMIT_BRACKET_DB
    grid = np.arange(lo, hi + 1e-9, _SWEEP_STEP_DB)
    fn = _mi(mode)
    vals = np.array([fn(ChannelParams.from_snr_db(n_bins, g)) for g in grid])
    # isotonic post-check: quadrature noise may not reverse the trend
    drops = np.diff(vals)
    if np.any(drops < -1e-6):
        raise RuntimeError(f"{mode} mutual information sweep not monotone for N={n_bins}")
    return grid, np.maximum.accumulate(vals)


def shannon_limit_snr(n_bins: int, code_rate, mode: str = "soft", tol_db: float = 0.01) -> float:
    """Per-bin SNR (dB) at which the mutual information equals rate * log2(N)."""
    rate = float(Fraction(code_rate)) if not isinstance(code_rate, float) else code_rate
    if not 0.0 < rate < 1.0:
        raise DomainError("code rate must lie in (0, 1)")
    target = rate * math.log2(n_bins)
    grid, vals = _coarse_sweep(n_bins, mode)
    if not (vals[0] <= target <= vals[-1]):
        raise NoBracket(
            f"{mode} mutual information for N={n_bins} never reaches {target:.4f} bits in {LIMIT_BRACKET_DB} dB"
        )
    k = int(np.searchsorted(vals, target))
    k = min(max(k, 1), len(grid) - 1)
    lo, hi = grid[k - 1], grid[k]
    fn = _mi(mode)

    def gap(db):
        return fn(ChannelParams.from_snr_db(n_bins, db)) - target

    return float(brentq(gap, lo, hi, xtol=tol_db / 10.0))


LIMIT_ROWS = (
    (8, Fraction(2, 3)),
    (16, Fraction(3, 4)),
    (32, Fraction(3, 5)),
    (32, Fraction(4, 5)),
    (64, Fraction(2, 3)),
    (64, Fraction(5, 6)),
)


def sigma_over_n(n_bins: int, snr_db: float) -> float:
    """Frame-normalized jitter 1/sqrt(gamma_bar) at a per-bin SNR."""
    return 10.0 ** (-snr_db / 20.0) / n_bins


def mi_curve(n_bins: int, mode: str, snr_db) -> RateCurve:
    fn = _mi(mode)
    vals = [fn(ChannelParams.from_snr_db(n_bins, g)) for g in snr_db]
    return RateCurve.from_arrays(snr_db, vals, label=f"I_{mode}(N={n_bins})")
