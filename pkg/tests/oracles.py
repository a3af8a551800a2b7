"""Slow, literal reference implementations used to check the fast code paths.

Nothing here imports from ``teqkd``'s numerical internals: integrals go
through ``scipy.integrate.quad`` and Gaussian tails through
``scipy.stats.norm``, with every density written out from the channel model
U ~ Uniform[0, N), X = U + sigma G1, Y = U + sigma G2.
"""

from __future__ import annotations

import math
from math import comb

import numpy as np
from scipy import integrate
from scipy.stats import norm


def _window(u, n, sigma):
    return norm.cdf((n - u) / sigma) - norm.cdf(-u / sigma)


def _bin(u, i, sigma):
    return norm.cdf((i + 1 - u) / sigma) - norm.cdf((i - u) / sigma)


def _breaks(n, sigma, lo=0.0, hi=None):
    hi = float(n) if hi is None else hi
    pts = set(float(k) for k in range(n + 1))
    for k in range(n + 1):
        for d in (-6 * sigma, -2 * sigma, 2 * sigma, 6 * sigma):
            pts.add(k + d)
    return sorted(p for p in pts if lo < p < hi)


def quad(f, lo, hi, points=None):
    val, _ = integrate.quad(f, lo, hi, points=points, limit=500, epsabs=1e-13, epsrel=1e-11)
    return val


def prior_alice_valid(n, sigma):
    """P(alice bin = i | Alice valid): density of X is window(x)/N on [0, N)."""
    mass = np.array([
        quad(lambda x: _window(x, n, sigma), i, i + 1, points=_breaks(n, sigma, i, i + 1) or None)
        for i in range(n)
    ])
    return mass / mass.sum()


def overlap(n, sigma):
    """M[i, j] = int_0^N bin_i(u) bin_j(u) du."""
    m = np.zeros((n, n))
    pts = _breaks(n, sigma)
    for i in range(n):
        for j in range(i, n):
            m[i, j] = m[j, i] = quad(lambda u: _bin(u, i, sigma) * _bin(u, j, sigma), 0.0, n, points=pts)
    return m


def transition(n, sigma):
    m = overlap(n, sigma)
    d = m.sum(axis=1)
    return d / d.sum(), m / d[:, None]


def joint_position_density(x, y, n, sigma):
    """p(x, y) for in-frame positions, both valid (unnormalized by P(valid))."""
    return quad(lambda u: norm.pdf(x - u, scale=sigma) * norm.pdf(y - u, scale=sigma), 0.0, n,
                points=_breaks(n, sigma)) / n


def kernel(n, sigma, i, y):
    """int_0^N phi_sigma(y - u) bin_i(u) du."""
    pts = sorted(set(_breaks(n, sigma)) | {p for p in (y - 6 * sigma, y, y + 6 * sigma) if 0 < p < n})
    return quad(lambda u: norm.pdf(y - u, scale=sigma) * _bin(u, i, sigma), 0.0, n, points=pts)


def mutual_info(prior, p):
    joint = prior[:, None] * p
    out = np.outer(prior, joint.sum(axis=0))
    mask = joint > 0
    return float(np.sum(joint[mask] * np.log2(joint[mask] / out[mask])))


def mutual_info_soft_grid(n, sigma, points_per_bin=200):
    """I(alice bin; Y) by composite Simpson on a y grid with quad-evaluated kernels."""
    ys = np.linspace(0.0, n, n * points_per_bin + 1)
    k = np.array([[kernel(n, sigma, i, y) for i in range(n)] for y in ys])
    m = overlap(n, sigma)
    z = m.sum()
    prior = m.sum(axis=1) / z
    tot = k.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(k > 0, k * np.log2(np.where(k > 0, k, 1.0) / tot[:, None]), 0.0).sum(axis=1) / z
    h = -np.sum(prior * np.log2(prior))
    return float(h + integrate.simpson(f, x=ys))


def secrecy_capacity_grid(sigma, points=1601):
    """I(X; Y) on a unit frame by 2-D Simpson over p(x, y) from the emission-time integral."""
    g = np.linspace(0.0, 1.0, points)
    # int_0^1 phi(x-u) phi(y-u) du in closed form, checked against quad in the tests
    x, y = np.meshgrid(g, g, indexing="ij")
    mid = 0.5 * (x + y)
    sh = sigma / math.sqrt(2.0)
    pxy = norm.pdf(y - x, scale=sigma * math.sqrt(2.0)) * (norm.cdf((1 - mid) / sh) - norm.cdf(-mid / sh))
    pxy /= integrate.simpson(integrate.simpson(pxy, x=g), x=g)
    px = integrate.simpson(pxy, x=g, axis=1)
    py = integrate.simpson(pxy, x=g, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(pxy > 0, pxy * np.log2(pxy / np.outer(px, py)), 0.0)
    return float(integrate.simpson(integrate.simpson(f, x=g), x=g))


def pair_integral(x, y, sigma):
    """int_0^1 phi_sigma(x - u) phi_sigma(y - u) du by quad."""
    return quad(lambda u: norm.pdf(x - u, scale=sigma) * norm.pdf(y - u, scale=sigma), 0.0, 1.0,
                points=[p for p in (x, y) if 0 < p < 1] or None)


def weighted_tail_direct(n, t, p, scale=None):
    """sum_{i>t} (i/scale) C(n,i) p^i (1-p)^(n-i) with exact integer binomials."""
    scale = n if scale is None else scale
    return math.fsum(i / scale * comb(n, i) * p**i * (1 - p) ** (n - i) for i in range(t + 1, n + 1))


def gray_string(i, m):
    """Reflected binary code built by the mirror construction, as a bit string."""
    codes = ["0", "1"]
    for _ in range(m - 1):
        codes = ["0" + c for c in codes] + ["1" + c for c in reversed(codes)]
    return codes[i]


def gf_mul_slow(a, b, m, poly):
    """Carry-less multiply then reduce modulo the field polynomial, bit by bit."""
    r = 0
    for k in range(m):
        if (b >> k) & 1:
            r ^= a << k
    for k in range(2 * m - 2, m - 1, -1):
        if (r >> k) & 1:
            r ^= poly << (k - m)
    return r
