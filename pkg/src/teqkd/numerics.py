"""Special functions and deterministic quadrature.

Everything that integrates a Gaussian tail expression goes through this
module. The quadrature is a globally adaptive Gauss-Kronrod (7/15) rule that
evaluates all active subintervals in one vectorized call, so integrands must
accept a 1-D array of abscissae and return an array whose first axis matches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import erfc

from .errors import DomainError, NonConvergence

SQRT2 = math.sqrt(2.0)
SQRT_2PI = math.sqrt(2.0 * math.pi)
LOG2E = 1.0 / math.log(2.0)


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 2**16

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.rel_tol < 0:
            raise ValueError("rel_tol must be non-negative")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_SPEC = QuadratureSpec()


def _scalar_or_array(x, like):
    if np.ndim(like) == 0:
        return float(x)
    return x


def gaussian_tail(x):
    """Q(x) = P(G > x) for a standard normal G, via erfc."""
    x_arr = np.asarray(x, dtype=float)
    return _scalar_or_array(0.5 * erfc(x_arr / SQRT2), x)


def normal_pdf(x):
    x_arr = np.asarray(x, dtype=float)
    return _scalar_or_array(np.exp(-0.5 * x_arr * x_arr) / SQRT_2PI, x)


def q_diff(a, b):
    """Q(a) - Q(b) for a <= b, without cancellation in the tails.

    When both arguments are positive the difference of two small tails is
    taken directly; when both are negative the mirrored tails are used. Only
    intervals straddling zero go through ``1 - tail - tail``. This keeps the
    relative precision of bin probabilities far from the photon position,
    which is what log-likelihoods need.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    qa = 0.5 * erfc(np.abs(a) / SQRT2)
    qb = 0.5 * erfc(np.abs(b) / SQRT2)
    out = np.where(
        a >= 0.0,
        qa - qb,
        np.where(b <= 0.0, qb - qa, 1.0 - (qa + qb)),
    )
    return out if out.ndim else float(out)


def f_sigma(x, sigma: float):
    """P(x + sigma*G in [0, 1)): the Q(-x/s) - Q((1-x)/s) window.

    Written around the window centre so that f(x) and f(1-x) run through
    identical floating point operations whenever 1-x is exact.
    """
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    x_arr = np.asarray(x, dtype=float)
    c = np.abs(0.5 - x_arr) / sigma
    h = 0.5 / sigma
    return _scalar_or_array(q_diff(c - h, c + h), x)


def antiderivative_Q(a: float, x):
    """A primitive of Q(a x) in x: x Q(ax) - phi(ax)/a."""
    if a == 0:
        raise DomainError("a must be non-zero")
    x_arr = np.asarray(x, dtype=float)
    val = x_arr * gaussian_tail(a * x_arr) - normal_pdf(a * x_arr) / a
    return _scalar_or_array(val, x)


def antiderivative_Q2(a: float, x):
    """A primitive of Q(a x)**2 in x."""
    if a == 0:
        raise DomainError("a must be non-zero")
    x_arr = np.asarray(x, dtype=float)
    q = gaussian_tail(a * x_arr)
    val = (
        x_arr * q * q
        - 2.0 * q * normal_pdf(a * x_arr) / a
        + gaussian_tail(SQRT2 * a * x_arr) / (a * math.sqrt(math.pi))
    )
    return _scalar_or_array(val, x)


def xlog2x(p):
    """p*log2(p) with the 0*log(0) = 0 convention; negative inputs clip to 0."""
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(p > 0.0, p * np.log2(np.where(p > 0.0, p, 1.0)), 0.0)
    return out if out.ndim else float(out)


def entropy_binary(x):
    x_arr = np.asarray(x, dtype=float)
    if np.any((x_arr < 0.0) | (x_arr > 1.0)) or np.any(np.isnan(x_arr)):
        raise DomainError("binary entropy needs x in [0, 1]")
    return _scalar_or_array(-xlog2x(x_arr) - xlog2x(1.0 - x_arr), x)


def entropy_ternary(x):
    """H3(x) = -(1-2x) log2(1-2x) - 2x log2(x), x in [0, 1/2]."""
    x_arr = np.asarray(x, dtype=float)
    if np.any((x_arr < 0.0) | (x_arr > 0.5)) or np.any(np.isnan(x_arr)):
        raise DomainError("ternary entropy needs x in [0, 1/2]")
    return _scalar_or_array(-xlog2x(1.0 - 2.0 * x_arr) - 2.0 * xlog2x(x_arr), x)


def entropy(probs) -> float:
    """Shannon entropy in bits of a probability vector."""
    return float(-np.sum(xlog2x(probs)))


# Gauss-Kronrod 7/15 nodes on [-1, 1] (QUADPACK qk15 constants).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod abscissae (plus the centre).
for _k, _w in zip((1, 3, 5), _WG[:3]):
    _GW[_k] = _w
    _GW[14 - _k] = _w
_GW[7] = _WG[3]


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
    points=None,
):
    """Adaptive Gauss-Kronrod integral of ``f`` over [a, b].

    ``f`` is called with a flat array of abscissae and must return values
    with leading dimension equal to its length; trailing dimensions are
    integrated component-wise (the error norm is the max over components).
    ``points`` are interior breakpoints where the integrand has kinks or
    sharp transitions.

    Intervals whose Kronrod/Gauss discrepancy is within their length-share
    of the tolerance are frozen; the rest are bisected. The schedule depends
    only on the inputs, so results are reproducible bit for bit.
    """
    a = float(a)
    b = float(b)
    if b < a:
        raise ValueError("integrate needs a <= b")
    if b == a:
        probe = np.asarray(f(np.array([a])))
        return np.zeros(probe.shape[1:]) if probe.ndim > 1 else 0.0

    edges = [a]
    if points is not None:
        edges.extend(sorted(p for p in np.unique(np.asarray(points, float)) if a < p < b))
    edges.append(b)
    lo = np.array(edges[:-1])
    hi = np.array(edges[1:])
    length = b - a

    total = None
    err_total = 0.0
    subdivisions = 0
    while True:
        centre = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        x = (centre[:, None] + half[:, None] * _NODES[None, :]).ravel()
        fx = np.asarray(f(x), dtype=float)
        tail_shape = fx.shape[1:]
        fx = fx.reshape((lo.size, 15) + tail_shape)
        kron = np.tensordot(_KW, fx, axes=([0], [1])) * half.reshape((-1,) + (1,) * len(tail_shape))
        gauss = np.tensordot(_GW, fx, axes=([0], [1])) * half.reshape((-1,) + (1,) * len(tail_shape))
        err = np.abs(kron - gauss)
        if tail_shape:
            err = err.reshape(lo.size, -1).max(axis=1)

        pending_sum = kron.sum(axis=0)
        estimate = pending_sum if total is None else total + pending_sum
        tol = max(spec.abs_tol, spec.rel_tol * float(np.max(np.abs(estimate))))
        share = tol * (hi - lo) / length
        done = err <= share
        if total is None:
            total = kron[done].sum(axis=0)
        else:
            total = total + kron[done].sum(axis=0)
        err_total += float(err[done].sum())
        if done.all():
            break
        lo_s, hi_s = lo[~done], hi[~done]
        subdivisions += lo_s.size
        if subdivisions > spec.max_subdivisions:
            raise NonConvergence(
                f"quadrature on [{a}, {b}] exceeded {spec.max_subdivisions} subdivisions"
            )
        mid = 0.5 * (lo_s + hi_s)
        if np.any((mid <= lo_s) | (mid >= hi_s)):
            raise NonConvergence(f"quadrature on [{a}, {b}] hit floating point resolution")
        lo = np.concatenate([lo_s, mid])
        hi = np.concatenate([mid, hi_s])
        order = np.argsort(lo, kind="stable")
        lo, hi = lo[order], hi[order]
    if np.ndim(total) == 0:
        return float(total)
    return total


def gauss_legendre_panels(lo, hi, panels: int, order: int):
    """Composite Gauss-Legendre nodes/weights on [lo, hi] (vectorized over rows).

    ``lo`` and ``hi`` may be arrays; the result has shape
    ``lo.shape + (panels * order,)`` for both nodes and weights.
    """
    t, w = np.polynomial.legendre.leggauss(order)
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    k = np.arange(panels)
    width = (hi - lo) / panels
    starts = lo + width * k
    half = 0.5 * width[..., None]
    nodes = (starts[..., None] + half * (t + 1.0)).reshape(lo.shape[:-1] + (panels * order,))
    weights = np.broadcast_to(half * w, starts.shape + (order,)).reshape(nodes.shape)
    return nodes, weights
