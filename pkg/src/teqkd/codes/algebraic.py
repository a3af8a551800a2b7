"""Reed-Solomon and binary BCH codes with Berlekamp-Massey syndrome decoding.

Both codes are used in syndrome form only: Alice publishes a syndrome of her
raw word, Bob subtracts his own and decodes the difference to the error
pattern separating the two words.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DecodeFailure
from .gf import GF64, GF512, FieldSpec


# ---------------------------------------------------------------- GF helpers


def _poly_mul(f: FieldSpec, a: list[int], b: list[int]) -> list[int]:
    out = [0] * (len(a) + len(b) - 1)
    exp, log, order = f.exp, f.log, f.order
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        la = log[ai]
        for j, bj in enumerate(b):
            if bj:
                out[i + j] ^= int(exp[(la + log[bj]) % order])
    return out


def _minimal_polynomial(f: FieldSpec, e: int) -> list[int]:
    """Binary minimal polynomial of alpha^e (coefficients, low order first)."""
    conj = []
    k = e % f.order
    while k not in conj:
        conj.append(k)
        k = (2 * k) % f.order
    poly = [1]
    for c in conj:
        poly = _poly_mul(f, poly, [int(f.exp[c]), 1])
    if any(c not in (0, 1) for c in poly):
        raise ArithmeticError("minimal polynomial is not binary")
    return poly


def berlekamp_massey(f: FieldSpec, synd: list[int]) -> list[int]:
    """Error-locator polynomial Lambda (low order first) from power sums S_1..S_2t."""
    exp, log, order = f.exp, f.log, f.order

    def mul(a, b):
        if a == 0 or b == 0:
            return 0
        return int(exp[(log[a] + log[b]) % order])

    lam = [1]
    prev = [1]
    length = 0
    shift = 1
    b = 1
    for r, s in enumerate(synd):
        d = s
        for i in range(1, length + 1):
            if i < len(lam):
                d ^= mul(lam[i], synd[r - i])
        if d == 0:
            shift += 1
            continue
        coef = mul(d, int(exp[(order - log[b]) % order]))
        update = [0] * shift + [mul(coef, c) for c in prev]
        new = lam + [0] * max(0, len(update) - len(lam))
        for i, c in enumerate(update):
            new[i] ^= c
        if 2 * length <= r:
            prev, lam = lam, new
            length = r + 1 - length
            b = d
            shift = 1
        else:
            lam = new
            shift += 1
    while len(lam) > 1 and lam[-1] == 0:
        lam.pop()
    if len(lam) - 1 != length:
        raise DecodeFailure("locator degree inconsistent with linear complexity")
    return lam


def _chien(f: FieldSpec, lam: list[int], n: int) -> np.ndarray:
    """Positions p < n with Lambda(alpha^-p) = 0."""
    x = f.alpha_pow(-np.arange(n))
    vals = f.poly_eval(lam, x)
    return np.flatnonzero(vals == 0)


# ---------------------------------------------------------------- Reed-Solomon


@dataclass(frozen=True)
class RSCode:
    """Primitive narrow-sense RS code over GF(2^w) correcting ``t`` symbol errors."""

    field: FieldSpec
    t: int
    code_id: str = "rs63_43"
    generator: np.ndarray = field(init=False, repr=False, compare=False)
    parity_check: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0 < 2 * self.t < self.field.order:
            raise ValueError("invalid correction radius")
        g = [1]
        for j in range(1, 2 * self.t + 1):
            g = _poly_mul(self.field, g, [int(self.field.exp[j]), 1])
        gen = np.array(g, dtype=np.int64)
        gen.flags.writeable = False
        j = np.arange(1, 2 * self.t + 1)[:, None]
        p = np.arange(self.n)[None, :]
        h = self.field.alpha_pow(j * p)
        h.flags.writeable = False
        object.__setattr__(self, "generator", gen)
        object.__setattr__(self, "parity_check", h)

    @property
    def n(self) -> int:
        return self.field.order

    @property
    def k(self) -> int:
        return self.n - 2 * self.t

    @property
    def symbol_bits(self) -> int:
        return self.field.extension_degree

    @property
    def syndrome_length(self) -> int:
        return 2 * self.t

    def encode(self, message) -> np.ndarray:
        """Systematic encoding: parity in positions 0..n-k-1, message above."""
        msg = np.asarray(message, dtype=np.int64)
        if msg.shape[-1] != self.k:
            raise ValueError(f"message length must be {self.k}")
        f = self.field
        nk = self.n - self.k
        g = [int(c) for c in self.generator]
        word = np.zeros(self.n, dtype=np.int64)
        word[nk:] = msg
        # remainder of msg(x) x^(n-k) by g(x)
        rem = [0] * nk
        for c in reversed(msg.tolist()):
            fb = c ^ rem[-1]
            rem = [0] + rem[:-1]
            if fb:
                for i in range(nk):
                    rem[i] ^= f.mul(fb, g[i])
        word[:nk] = rem
        return word

    def syndrome(self, word) -> np.ndarray:
        """Power sums S_j = word(alpha^j), j = 1..2t; batched over leading axes."""
        w = np.asarray(word, dtype=np.int64)
        if w.shape[-1] != self.n:
            raise ValueError(f"word length must be {self.n}")
        prod = self.field.mul(w[..., None, :], self.parity_check)
        return np.bitwise_xor.reduce(prod, axis=-1)

    def decode_syndrome(self, synd, verify: bool = True) -> np.ndarray:
        """Error vector e with syndrome(e) = synd, provided weight(e) <= t."""
        f = self.field
        s = [int(v) for v in np.asarray(synd, dtype=np.int64)]
        e = np.zeros(self.n, dtype=np.int64)
        if not any(s):
            return e
        lam = berlekamp_massey(f, s)
        nu = len(lam) - 1
        if nu > self.t:
            raise DecodeFailure(f"locator degree {nu} exceeds t={self.t}")
        pos = _chien(f, lam, self.n)
        if pos.size != nu:
            raise DecodeFailure(f"locator has {pos.size} roots in the field, expected {nu}")
        # Omega = S(x) Lambda(x) mod x^2t, S(x) = sum S_{j+1} x^j
        omega = _poly_mul(f, s, lam)[: 2 * self.t]
        dlam = [lam[i] if i % 2 == 1 else 0 for i in range(1, len(lam))]  # formal derivative
        xinv = f.alpha_pow(-pos)
        num = f.poly_eval(omega, xinv)
        den = f.poly_eval(dlam, xinv)
        if np.any(den == 0):
            raise DecodeFailure("repeated locator root")
        e[pos] = f.div(num, den)
        if verify and not np.array_equal(self.syndrome(e), np.asarray(synd, dtype=np.int64)):
            raise DecodeFailure("re-encode check failed (miscorrection)")
        return e


# ---------------------------------------------------------------- binary BCH


@dataclass(frozen=True)
class BCHCode:
    """Narrow-sense binary BCH code, optionally shortened to ``n`` positions.

    Shortening keeps positions 0..n-1 of the primitive code; the top
    ``primitive_length - n`` positions are fixed zeros on both sides.
    """

    field: FieldSpec
    t: int
    n: int
    code_id: str = "bch378_261"
    generator: np.ndarray = field(init=False, repr=False, compare=False)
    _remainders: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        f = self.field
        seen: set[int] = set()
        g = [1]
        for j in range(1, 2 * self.t + 1):
            if j % f.order in seen:
                continue
            mp = _minimal_polynomial(f, j)
            k = j % f.order
            while k not in seen:
                seen.add(k)
                k = (2 * k) % f.order
            g = _poly_mul(f, g, mp)
        gen = np.array(g, dtype=np.uint8)
        if not 0 < self.n <= f.order or self.n <= len(gen) - 1:
            raise ValueError("invalid shortened length")
        # x^p mod g(x) for every position p < n: rows of the remainder map
        r = len(gen) - 1
        rem = np.zeros((self.n, r), dtype=np.uint8)
        cur = np.zeros(r, dtype=np.uint8)
        cur[0] = 1
        for p in range(self.n):
            rem[p] = cur
            top = cur[-1]
            cur = np.concatenate([[0], cur[:-1]]).astype(np.uint8)
            if top:
                cur ^= gen[:r]
        gen.flags.writeable = False
        rem.flags.writeable = False
        object.__setattr__(self, "generator", gen)
        object.__setattr__(self, "_remainders", rem)

    @property
    def primitive_length(self) -> int:
        return self.field.order

    @property
    def redundancy(self) -> int:
        return len(self.generator) - 1

    @property
    def k(self) -> int:
        return self.n - self.redundancy

    @property
    def k_primitive(self) -> int:
        return self.primitive_length - self.redundancy

    @property
    def symbol_bits(self) -> int:
        return 1

    @property
    def syndrome_length(self) -> int:
        return self.redundancy

    def syndrome(self, word) -> np.ndarray:
        """Remainder of word(x) modulo g(x), as n-k bits; batched over leading axes."""
        w = np.asarray(word, dtype=np.int64)
        if w.shape[-1] != self.n:
            raise ValueError(f"word length must be {self.n}")
        return ((w @ self._remainders.astype(np.int64)) & 1).astype(np.uint8)

    def encode(self, message) -> np.ndarray:
        """Systematic: parity bits in positions 0..n-k-1, message above."""
        msg = np.asarray(message, dtype=np.uint8)
        if msg.shape[-1] != self.k:
            raise ValueError(f"message length must be {self.k}")
        word = np.zeros(self.n, dtype=np.uint8)
        word[self.redundancy:] = msg
        word[: self.redundancy] = self.syndrome(word)
        return word

    def power_sums(self, remainder) -> list[int]:
        """S_j = r(alpha^j), j = 1..2t; equals e(alpha^j) because g(alpha^j) = 0."""
        f = self.field
        coeffs = np.asarray(remainder, dtype=np.int64)
        nz = np.flatnonzero(coeffs)
        j = np.arange(1, 2 * self.t + 1)[:, None]
        terms = f.alpha_pow(j * nz[None, :])
        return [int(v) for v in np.bitwise_xor.reduce(terms, axis=1)] if nz.size else [0] * (2 * self.t)

    def decode_syndrome(self, remainder, verify: bool = True) -> np.ndarray:
        """Binary error vector whose remainder modulo g(x) is ``remainder``."""
        e = np.zeros(self.n, dtype=np.uint8)
        rem = np.asarray(remainder, dtype=np.uint8)
        if not rem.any():
            return e
        s = self.power_sums(rem)
        if not any(s):
            raise DecodeFailure("nonzero remainder with vanishing power sums")
        lam = berlekamp_massey(self.field, s)
        nu = len(lam) - 1
        if nu > self.t:
            raise DecodeFailure(f"locator degree {nu} exceeds t={self.t}")
        pos = _chien(self.field, lam, self.n)
        if pos.size != nu:
            raise DecodeFailure(f"locator has {pos.size} roots in the kept positions, expected {nu}")
        e[pos] = 1
        if verify and not np.array_equal(self.syndrome(e), rem):
            raise DecodeFailure("re-encode check failed (miscorrection)")
        return e


RS63_43 = RSCode(GF64, t=10, code_id="rs63_43")
BCH378_261 = BCHCode(GF512, t=13, n=378, code_id="bch378_261")
