"""Binary extension fields GF(2^w) with log/antilog tables."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class FieldSpec:
    """GF(2^w) defined by a primitive polynomial given as a bitmask (x^w included)."""

    extension_degree: int
    primitive_polynomial: int
    exp: np.ndarray = field(init=False, repr=False, compare=False)
    log: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        w, poly = self.extension_degree, self.primitive_polynomial
        if not 1 <= w <= 16:
            raise ValueError("extension degree must be in 1..16")
        if poly >> w != 1:
            raise ValueError(f"polynomial {poly:#b} is not of degree {w}")
        order = (1 << w) - 1
        exp = np.zeros(2 * order, dtype=np.int64)
        log = np.full(1 << w, -1, dtype=np.int64)
        x = 1
        for k in range(order):
            if log[x] != -1:
                raise ValueError(f"polynomial {poly:#b} is not primitive (alpha has order {k})")
            exp[k] = x
            log[x] = k
            x <<= 1
            if x >> w:
                x ^= poly
        if x != 1:
            raise ValueError(f"polynomial {poly:#b} is not primitive")
        exp[order:] = exp[:order]
        exp.flags.writeable = False
        log.flags.writeable = False
        object.__setattr__(self, "exp", exp)
        object.__setattr__(self, "log", log)

    @property
    def size(self) -> int:
        return 1 << self.extension_degree

    @property
    def order(self) -> int:
        """Multiplicative group order q - 1."""
        return (1 << self.extension_degree) - 1

    # element-wise arithmetic on ints or integer arrays

    @staticmethod
    def add(a, b):
        return np.bitwise_xor(a, b)

    def mul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        zero = (a == 0) | (b == 0)
        out = self.exp[(self.log[np.where(zero, 1, a)] + self.log[np.where(zero, 1, b)])]
        out = np.where(zero, 0, out)
        return out if out.ndim else int(out)

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise ZeroDivisionError("0 has no inverse in GF(2^w)")
        out = self.exp[(self.order - self.log[a]) % self.order]
        return out if out.ndim else int(out)

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def pow(self, a, e: int):
        a = np.asarray(a, dtype=np.int64)
        zero = a == 0
        out = self.exp[(self.log[np.where(zero, 1, a)] * e) % self.order]
        out = np.where(zero, 1 if e == 0 else 0, out)
        return out if out.ndim else int(out)

    def alpha_pow(self, e):
        """alpha^e for integer (array) exponents, any sign."""
        return self.exp[np.mod(np.asarray(e, dtype=np.int64), self.order)]

    def poly_eval(self, coeffs, x):
        """Evaluate sum_k coeffs[k] x^k at each x (Horner, vectorized over x)."""
        x = np.asarray(x, dtype=np.int64)
        acc = np.zeros_like(x)
        for c in reversed(list(coeffs)):
            acc = self.mul(acc, x) ^ int(c)
        return acc


GF64 = FieldSpec(6, 0b1000011)  # x^6 + x + 1
GF512 = FieldSpec(9, 0b1000010001)  # x^9 + x^4 + 1
