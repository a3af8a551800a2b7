"""Binary-reflected Gray labelling of bin indices."""

from __future__ import annotations

import numpy as np


def gray_encode(i):
    i = np.asarray(i, dtype=np.int64)
    return i ^ (i >> 1)


def gray_decode(g):
    g = np.asarray(g, dtype=np.int64).copy()
    shift = g >> 1
    while np.any(shift):
        g ^= shift
        shift >>= 1
    return g


def gray_label(i, m: int) -> np.ndarray:
    """Bits of the Gray label of bin ``i``, most significant first: shape ``i.shape + (m,)``."""
    i = np.asarray(i, dtype=np.int64)
    if np.any((i < 0) | (i >= 1 << m)):
        raise ValueError(f"bin index outside 0..{(1 << m) - 1}")
    g = gray_encode(i)
    return ((g[..., None] >> np.arange(m - 1, -1, -1)) & 1).astype(np.uint8)


def gray_unlabel(bits) -> np.ndarray:
    """Inverse of :func:`gray_label` along the last axis."""
    bits = np.asarray(bits, dtype=np.int64)
    m = bits.shape[-1]
    g = (bits << np.arange(m - 1, -1, -1)).sum(axis=-1)
    return gray_decode(g)


def label_table(m: int) -> np.ndarray:
    """(2^m, m) table of Gray bits for every bin."""
    return gray_label(np.arange(1 << m), m)
