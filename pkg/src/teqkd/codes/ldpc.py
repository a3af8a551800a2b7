"""Regular binary LDPC codes: progressive-edge-growth construction and
syndrome-domain sum-product decoding."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from ..errors import ConstructionFailure, DecodeFailure

LLR_CLAMP = 30.0
MAX_ITER = 100
_PEG_DEPTH = 3
_PEG_RETRIES = 8


@dataclass(frozen=True)
class LDPCCode:
    """Sparse parity-check code stored as an edge list.

    ``edge_check[e]``/``edge_var[e]`` are sorted by check so each check's
    edges are contiguous, starting at ``check_start``.
    """

    n: int
    n_checks: int
    edge_check: np.ndarray
    edge_var: np.ndarray
    dv: int = 3
    dc: int = 9
    seed: int | None = None
    code_id: str = ""
    check_start: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        order = np.lexsort((self.edge_var, self.edge_check))
        ec = np.ascontiguousarray(self.edge_check[order], dtype=np.int64)
        ev = np.ascontiguousarray(self.edge_var[order], dtype=np.int64)
        if np.any((ec < 0) | (ec >= self.n_checks)) or np.any((ev < 0) | (ev >= self.n)):
            raise ValueError("edge index out of range")
        pairs = ec * self.n + ev
        if np.unique(pairs).size != pairs.size:
            raise ValueError("duplicate edge")
        counts = np.bincount(ec, minlength=self.n_checks)
        if np.any(counts == 0) or np.any(np.bincount(ev, minlength=self.n) == 0):
            raise ValueError("every node needs at least one edge")
        start = np.concatenate([[0], np.cumsum(counts)[:-1]])
        for a in (ec, ev, start):
            a.flags.writeable = False
        object.__setattr__(self, "edge_check", ec)
        object.__setattr__(self, "edge_var", ev)
        object.__setattr__(self, "check_start", start)

    @property
    def k(self) -> int:
        """Design dimension n - m (the matrix may be rank deficient)."""
        return self.n - self.n_checks

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def syndrome_length(self) -> int:
        return self.n_checks

    @property
    def symbol_bits(self) -> int:
        return 1

    def column_weights(self) -> np.ndarray:
        return np.bincount(self.edge_var, minlength=self.n)

    def row_weights(self) -> np.ndarray:
        return np.bincount(self.edge_check, minlength=self.n_checks)

    def dense(self) -> np.ndarray:
        h = np.zeros((self.n_checks, self.n), dtype=np.uint8)
        h[self.edge_check, self.edge_var] = 1
        return h

    def syndrome(self, word) -> np.ndarray:
        """word . H^T over GF(2); batched over leading axes."""
        w = np.asarray(word, dtype=np.uint8)
        if w.shape[-1] != self.n:
            raise ValueError(f"word length must be {self.n}")
        bits = w[..., self.edge_var]
        return (np.add.reduceat(bits, self.check_start, axis=-1) & 1).astype(np.uint8)

    def has_four_cycles(self) -> bool:
        h = sparse.csr_matrix(
            (np.ones(self.edge_var.size, dtype=np.int32), (self.edge_check, self.edge_var)),
            shape=(self.n_checks, self.n),
        )
        overlap = (h @ h.T).tocoo()
        off = overlap.row != overlap.col
        return bool(np.any(overlap.data[off] > 1))

    # ------------------------------------------------------------ alist I/O

    def to_alist(self) -> str:
        var_checks = [[] for _ in range(self.n)]
        check_vars = [[] for _ in range(self.n_checks)]
        for c, v in zip(self.edge_check.tolist(), self.edge_var.tolist()):
            var_checks[v].append(c + 1)
            check_vars[c].append(v + 1)
        cw, rw = self.column_weights(), self.row_weights()
        out = io.StringIO()
        out.write(f"{self.n} {self.n_checks}\n{cw.max()} {rw.max()}\n")
        out.write(" ".join(map(str, cw)) + "\n")
        out.write(" ".join(map(str, rw)) + "\n")
        for lst in var_checks:
            out.write(" ".join(map(str, lst + [0] * (cw.max() - len(lst)))) + "\n")
        for lst in check_vars:
            out.write(" ".join(map(str, lst + [0] * (rw.max() - len(lst)))) + "\n")
        return out.getvalue()

    @classmethod
    def from_alist(cls, text: str, code_id: str = "", seed: int | None = None) -> "LDPCCode":
        tok = [int(t) for t in text.split()]
        n, m = tok[0], tok[1]
        max_c, max_r = tok[2], tok[3]
        pos = 4
        col_w = tok[pos:pos + n]
        pos += n
        pos += m  # row weights, implied by the column lists
        checks, vars_ = [], []
        for v in range(n):
            entries = tok[pos:pos + max_c]
            pos += max_c
            nz = [c for c in entries if c]
            if len(nz) != col_w[v]:
                raise ValueError(f"alist column {v} weight mismatch")
            checks.extend(c - 1 for c in nz)
            vars_.extend([v] * len(nz))
        cw = np.bincount(vars_, minlength=n)
        rw = np.bincount(checks, minlength=m)
        dv = int(cw.max())
        dc = int(rw.max())
        return cls(n, m, np.array(checks), np.array(vars_), dv=dv, dc=dc, seed=seed, code_id=code_id)

    def save_alist(self, path) -> None:
        Path(path).write_text(self.to_alist())

    @classmethod
    def load_alist(cls, path, **kw) -> "LDPCCode":
        return cls.from_alist(Path(path).read_text(), **kw)


# ---------------------------------------------------------------- construction


def _peg_attempt(n: int, m: int, dv: int, dc: int, rng: np.random.Generator, depth: int):
    # padded adjacency, -1 marks an unused slot
    var_checks = np.full((n, dv), -1, dtype=np.int64)
    check_vars = np.full((m, dc), -1, dtype=np.int64)
    deg = np.zeros(m, dtype=np.int64)
    for v in range(n):
        for slot in range(dv):
            own = var_checks[v, :slot]
            free = deg < dc
            free[own] = False
            if not free.any():
                raise ConstructionFailure("no check with spare degree")
            # cumulative check sets reachable within 1..depth variable hops
            layers = []
            reached = np.zeros(m, dtype=bool)
            reached[own] = True
            frontier = own
            for _d in range(depth):
                if frontier.size == 0:
                    break
                us = check_vars[frontier].ravel()
                us = us[(us >= 0) & (us != v)]
                cs = var_checks[us].ravel()
                cs = cs[cs >= 0]
                cs = np.unique(cs[~reached[cs]])
                if cs.size == 0:
                    break
                reached[cs] = True
                layers.append(reached.copy())
                frontier = cs
            cand = None
            for excl in reversed(layers):
                mask = free & ~excl
                if mask.any():
                    cand = mask
                    break
            if cand is None:
                if layers:
                    # even the 4-cycle-free candidates are exhausted
                    raise ConstructionFailure(f"variable {v}: every free check closes a 4-cycle")
                cand = free
            idx = np.flatnonzero(cand)
            dmin = deg[idx].min()
            low = idx[deg[idx] == dmin]
            c = int(low[rng.integers(low.size)])
            var_checks[v, slot] = c
            check_vars[c, deg[c]] = v
            deg[c] += 1
    if np.any(deg != dc):
        raise ConstructionFailure("check degrees not regular")
    return var_checks.ravel(), np.repeat(np.arange(n), dv)


def ldpc_construct(n: int, dv: int = 3, dc: int = 9, seed: int = 0, code_id: str = "",
                   depth: int = _PEG_DEPTH, retries: int = _PEG_RETRIES) -> LDPCCode:
    """(dv, dc)-regular code by progressive edge growth.

    Each new edge of a variable goes to a lowest-degree check outside the
    deepest excluded neighbourhood (up to ``depth`` variable hops) that still
    leaves a candidate; checks sharing a variable with the current one are
    always excluded, so the graph has no 4-cycles. Ties break on a generator
    seeded from ``seed``; failed attempts retry with spawned seeds.
    """
    if (n * dv) % dc:
        raise ValueError("n * dv must be divisible by dc")
    m = n * dv // dc
    ss = np.random.SeedSequence(seed)
    for child in ss.spawn(retries):
        rng = np.random.default_rng(child)
        try:
            checks, vars_ = _peg_attempt(n, m, dv, dc, rng, depth)
        except ConstructionFailure:
            continue
        return LDPCCode(n, m, checks, vars_, dv=dv, dc=dc, seed=seed, code_id=code_id)
    raise ConstructionFailure(f"PEG failed after {retries} attempts (n={n})")


# ---------------------------------------------------------------- decoding


def _phi(x):
    # -log tanh(x/2), symmetric involution on (0, inf)
    x = np.clip(x, 1e-12, LLR_CLAMP)
    return np.log1p(2.0 / np.expm1(x))


def bp_decode_batch(llr, target_syndrome, code: LDPCCode, max_iter: int = MAX_ITER):
    """Flooding sum-product on a batch of words.

    ``llr`` holds log P(bit=0)/P(bit=1) per coded bit, shape (B, n). Check
    ``c`` is satisfied when the parity of its bits equals
    ``target_syndrome[:, c]``, which flips the sign of its outgoing messages.

    Returns ``(words, converged, iterations)``; words of non-converged rows
    are the last hard decisions.
    """
    llr = np.clip(np.atleast_2d(np.asarray(llr, dtype=float)), -LLR_CLAMP, LLR_CLAMP)
    synd = np.atleast_2d(np.asarray(target_syndrome, dtype=np.uint8))
    b = llr.shape[0]
    if llr.shape[1] != code.n or synd.shape != (b, code.n_checks):
        raise ValueError("shape mismatch between LLRs, syndromes and code")
    ev, ec, start = code.edge_var, code.edge_check, code.check_start
    sign_c = 1.0 - 2.0 * synd.astype(float)  # (B, m)

    words = (llr < 0).astype(np.uint8)
    iters = np.zeros(b, dtype=np.int64)
    done = np.zeros(b, dtype=bool)
    active = np.arange(b)
    a_llr = llr
    a_sign = sign_c
    r = np.zeros((b, ev.size))
    for it in range(1, max_iter + 1):
        # variable to check
        post = a_llr + _var_sum(r, ev, code.n)
        q = post[:, ev] - r
        # check to variable
        mag = _phi(np.abs(q))
        tot = np.add.reduceat(mag, start, axis=1)
        neg = (q < 0).astype(np.int64)
        parity = np.add.reduceat(neg, start, axis=1) & 1
        edge_parity = (parity[:, ec] ^ neg)
        sgn = np.where(edge_parity == 1, -1.0, 1.0) * a_sign[:, ec]
        r = sgn * np.minimum(_phi(np.maximum(tot[:, ec] - mag, 0.0)), LLR_CLAMP)
        post = a_llr + _var_sum(r, ev, code.n)
        hard = (post < 0).astype(np.uint8)
        ok = np.all(code.syndrome(hard) == synd[active], axis=1)
        words[active] = hard
        iters[active] = it
        if ok.any():
            done[active[ok]] = True
            keep = ~ok
            active, a_llr, a_sign, r = active[keep], a_llr[keep], a_sign[keep], r[keep]
            if active.size == 0:
                break
    return words, done, iters


def _var_sum(r: np.ndarray, ev: np.ndarray, n: int) -> np.ndarray:
    # sum of incoming check messages per variable, batched over rows
    b = r.shape[0]
    flat = (np.arange(b)[:, None] * n + ev[None, :]).ravel()
    return np.bincount(flat, weights=r.ravel(), minlength=b * n).reshape(b, n)


def ldpc_bp_decode(llr, target_syndrome, code: LDPCCode, max_iter: int = MAX_ITER):
    """Decode one word; returns (word, iterations) or raises DecodeFailure."""
    words, ok, iters = bp_decode_batch(llr, target_syndrome, code, max_iter)
    if not ok[0]:
        raise DecodeFailure(f"BP did not meet the syndrome in {max_iter} iterations")
    return words[0], int(iters[0])
