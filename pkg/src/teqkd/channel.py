"""Jittered time-bin channel: sampling and uncoded error rates.

Both detectors see the same uniform emission time ``u`` in a frame of
``n_bins`` unit-width bins, each blurred by independent Gaussian jitter of
standard deviation ``sigma``. A frame only counts when both jittered
positions land inside ``[0, n_bins)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .curves import RateCurve
from .errors import BudgetExceeded, DomainError, DomainWarning, InsufficientData
from .numerics import DEFAULT_SPEC, QuadratureSpec, integrate, q_diff


@dataclass(frozen=True)
class ChannelParams:
    n_bins: int
    sigma: float

    def __post_init__(self):
        if int(self.n_bins) != self.n_bins or self.n_bins < 2:
            raise DomainError("n_bins must be an integer >= 2")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DomainError("sigma must be positive and finite")

    @classmethod
    def from_snr_db(cls, n_bins: int, snr_db: float) -> "ChannelParams":
        return cls(n_bins, 10.0 ** (-snr_db / 20.0))

    @classmethod
    def from_normalized_snr_db(cls, n_bins: int, snr_bar_db: float) -> "ChannelParams":
        return cls.from_snr_db(n_bins, snr_bar_db - 20.0 * math.log10(n_bins))

    @property
    def gamma(self) -> float:
        return 1.0 / (self.sigma * self.sigma)

    @property
    def gamma_bar(self) -> float:
        return self.n_bins**2 * self.gamma

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.gamma)

    @property
    def snr_bar_db(self) -> float:
        return 10.0 * math.log10(self.gamma_bar)

    @property
    def bits_per_photon(self) -> float:
        return math.log2(self.n_bins)


@dataclass(frozen=True)
class PhotonPairSample:
    u: float
    x_tilde: float
    y_tilde: float
    alice_valid: bool
    bob_valid: bool


@dataclass(frozen=True)
class SoftObservation:
    alice_bin: int
    bob_position: float

    @property
    def bob_bin(self) -> int:
        return int(math.floor(self.bob_position))


def quantize(position, n_bins: int):
    """Bin index of a position in [0, n_bins]; the measure-zero x == n_bins maps to n_bins-1."""
    return np.minimum(np.floor(position).astype(np.int64), n_bins - 1)


def sample_pairs(params: ChannelParams, rng: np.random.Generator, size: int):
    """Vectorized draw of ``size`` photon pairs: returns (u, x_tilde, y_tilde)."""
    n = params.n_bins
    u = rng.uniform(0.0, n, size)
    z = rng.standard_normal((2, size)) * params.sigma
    return u, u + z[0], u + z[1]


def sample_pair(params: ChannelParams, rng: np.random.Generator) -> PhotonPairSample:
    u, xt, yt = sample_pairs(params, rng, 1)
    n = params.n_bins
    return PhotonPairSample(
        float(u[0]), float(xt[0]), float(yt[0]),
        bool(0.0 <= xt[0] < n), bool(0.0 <= yt[0] < n),
    )


def sample_valid_observations(params: ChannelParams, rng: np.random.Generator, count: int):
    """Rejection-sample ``count`` valid frames.

    Returns ``(alice_bins, bob_positions)`` as arrays. Frames where either
    jittered position leaves the frame are dropped, as the physical protocol
    does.
    """
    n = params.n_bins
    alice = np.empty(count, dtype=np.int64)
    bob = np.empty(count, dtype=float)
    filled = 0
    while filled < count:
        need = count - filled
        draw = int(need * 1.1) + 16
        _, xt, yt = sample_pairs(params, rng, draw)
        ok = (xt >= 0.0) & (xt < n) & (yt >= 0.0) & (yt < n)
        xt, yt = xt[ok][:need], yt[ok][:need]
        k = xt.size
        alice[filled:filled + k] = quantize(xt, n)
        bob[filled:filled + k] = yt
        filled += k
    return alice, bob


def sample_valid_observation(params: ChannelParams, rng: np.random.Generator) -> SoftObservation:
    a, y = sample_valid_observations(params, rng, 1)
    return SoftObservation(int(a[0]), float(y[0]))


def error_rate_closed_form(params: ChannelParams) -> float:
    """Leading high-SNR term of P(alice_bin != bob_bin)."""
    if params.snr_db < 10.0:
        warnings.warn(
            f"uncoded error-rate formula used at {params.snr_db:.2f} dB (< 10 dB)",
            DomainWarning,
            stacklevel=2,
        )
    return 2.0 / math.sqrt(math.pi) * (1.0 - 1.0 / params.n_bins) * params.sigma


def error_rate_monte_carlo(
    params: ChannelParams,
    min_error_events: int,
    rng: np.random.Generator,
    max_trials: int = 10**9,
    batch: int = 1 << 20,
) -> tuple[float, float]:
    """Estimate the uncoded bin error rate; returns (estimate, binomial std error)."""
    if min_error_events < 100:
        raise ValueError("min_error_events must be >= 100")
    trials = 0
    errors = 0
    while errors < min_error_events:
        if trials >= max_trials:
            raise BudgetExceeded(
                f"{trials} valid frames gave only {errors} of {min_error_events} error events"
            )
        if errors > 0:
            # aim a little past the target from the running rate
            want = int(1.1 * (min_error_events - errors) * trials / errors) + 1000
        else:
            want = batch
        want = max(1000, min(want, batch * 8, max_trials - trials))
        a, y = sample_valid_observations(params, rng, want)
        errors += int(np.count_nonzero(a != quantize(y, params.n_bins)))
        trials += want
    p = errors / trials
    return p, math.sqrt(p * (1.0 - p) / trials)


def validity_probability(params: ChannelParams, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """P(both jittered positions fall in the frame)."""
    n, s = params.n_bins, params.sigma

    def integrand(u):
        g = q_diff(-u / s, (n - u) / s)
        return g * g

    return integrate(integrand, 0.0, float(n), spec, points=frame_breakpoints(params)) / n


def frame_breakpoints(params: ChannelParams) -> np.ndarray:
    """Bin edges, plus edges +/- 8 sigma when the jitter is narrow.

    Gaussian transitions narrower than a Kronrod node spacing would otherwise
    be invisible to the error estimator.
    """
    n, s = params.n_bins, params.sigma
    edges = np.arange(0, n + 1, dtype=float)
    pts = [edges]
    if 8.0 * s < 0.5:
        pts += [edges - 8.0 * s, edges + 8.0 * s]
    pts = np.concatenate(pts)
    return np.unique(pts[(pts > 0.0) & (pts < n)])


def diversity_order(curve: RateCurve, decade_db: float = 10.0) -> float:
    """Least-squares slope of -log(Pe) against log(gamma) over the top SNR decade."""
    snr = curve.snr_db
    vals = curve.values
    if len(snr) == 0:
        raise InsufficientData("empty curve")
    top = snr >= snr.max() - decade_db
    if np.count_nonzero(top) < 3:
        raise InsufficientData("need at least 3 points in the top SNR decade")
    x = snr[top] / 10.0  # log10(gamma)
    y = -np.log10(vals[top])
    slope = np.polyfit(x, y, 1)[0]
    return float(slope)
