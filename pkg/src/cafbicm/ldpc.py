"""Regular LDPC codes: ensemble sampling, GF(2) encoding, syndromes, sum-product decoding, alist I/O."""

from __future__ import annotations

import io
import os
from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .demap import LLR_MAX

TANH_GUARD = 1e-15


class InvalidCodeSpecError(ValueError):
    pass


@dataclass(frozen=True)
class CodeSpec:
    dv: int
    dc: int
    n_bits: int
    k: int = 1  # bits per modulation symbol

    def __post_init__(self):
        if self.dv < 2 or self.dc <= self.dv:
            raise InvalidCodeSpecError(f"need dv >= 2 and dc > dv, got ({self.dv}, {self.dc})")
        if self.n_bits <= 0 or (self.n_bits * self.dv) % self.dc:
            raise InvalidCodeSpecError(f"n_bits*dv must be a positive multiple of dc (n_bits={self.n_bits})")
        if self.dc > self.n_bits or self.dv > self.n_checks:
            raise InvalidCodeSpecError("code too short for a simple graph with these degrees")

    @property
    def n_checks(self) -> int:
        return self.n_bits * self.dv // self.dc

    @property
    def design_rate(self) -> float:
        """Bits per channel use under 2**K-ary modulation."""
        return self.k * (1.0 - self.dv / self.dc)


# -- packed GF(2) helpers -------------------------------------------------------------------


def _pack(bits: np.ndarray, n: int) -> np.ndarray:
    """Pack the last axis of a 0/1 array into little-endian uint64 words."""
    bits = np.asarray(bits, dtype=np.uint8)
    words = -(-n // 64)
    pad = words * 64 - n
    if pad:
        bits = np.concatenate([bits, np.zeros(bits.shape[:-1] + (pad,), np.uint8)], axis=-1)
    return np.ascontiguousarray(np.packbits(bits, axis=-1, bitorder="little")).view(np.uint64)


def _unpack(words: np.ndarray, n: int) -> np.ndarray:
    by = np.ascontiguousarray(words).view(np.uint8)
    return np.unpackbits(by, axis=-1, bitorder="little")[..., :n]


class ParityCheckMatrix:
    """Sparse binary parity-check matrix stored as padded adjacency lists in both directions.

    ``check_vars[c]`` lists the variables of check ``c`` (padded with -1) and
    ``var_checks[v]`` the checks of variable ``v``.  Immutable after construction.
    """

    def __init__(self, n_bits: int, n_checks: int, edge_vars, edge_checks):
        ev = np.asarray(edge_vars, dtype=np.int64)
        ec = np.asarray(edge_checks, dtype=np.int64)
        if ev.shape != ec.shape:
            raise ValueError("edge arrays differ in length")
        if ev.size and (ev.min() < 0 or ev.max() >= n_bits or ec.min() < 0 or ec.max() >= n_checks):
            raise ValueError("edge endpoint out of range")
        self.n = int(n_bits)
        self.m = int(n_checks)
        order = np.lexsort((ev, ec))
        self.edge_vars = ev[order]
        self.edge_checks = ec[order]
        self.row_weights = np.bincount(self.edge_checks, minlength=self.m)
        self.col_weights = np.bincount(self.edge_vars, minlength=self.n)
        self.check_vars = _padded(self.edge_checks, self.edge_vars, self.m)
        self.var_checks = _padded(self.edge_vars, self.edge_checks, self.n)
        self._echelon = None
        for arr in (self.edge_vars, self.edge_checks, self.check_vars, self.var_checks):
            arr.setflags(write=False)

    def __repr__(self):
        return f"ParityCheckMatrix(m={self.m}, n={self.n}, edges={self.edge_vars.size})"

    @classmethod
    def from_dense(cls, h) -> "ParityCheckMatrix":
        h = np.asarray(h) % 2
        rows, cols = np.nonzero(h)
        return cls(h.shape[1], h.shape[0], cols, rows)

    def dense(self) -> np.ndarray:
        h = np.zeros((self.m, self.n), dtype=np.uint8)
        h[self.edge_checks, self.edge_vars] ^= 1
        return h

    def multi_edge_count(self) -> int:
        key = self.edge_checks * self.n + self.edge_vars
        return int(key.size - np.unique(key).size)

    # -- elimination -----------------------------------------------------------------------

    def _row_echelon(self):
        """Row-echelon form over GF(2), computed once and cached."""
        if self._echelon is None:
            a = _pack(self.dense(), self.n)
            pivots = []
            r = 0
            for col in range(self.n):
                if r == self.m:
                    break
                w, b = divmod(col, 64)
                bit = np.uint64(1) << np.uint64(b)
                hits = np.flatnonzero(a[r:, w] & bit) + r
                if hits.size == 0:
                    continue
                p = hits[0]
                if p != r:
                    a[[r, p]] = a[[p, r]]
                below = np.flatnonzero(a[r + 1:, w] & bit) + r + 1
                if below.size:
                    a[below, w:] ^= a[r, w:]
                pivots.append(col)
                r += 1
            pivots = np.array(pivots, dtype=np.int64)
            free = np.setdiff1d(np.arange(self.n), pivots)
            self._echelon = (a[:r].copy(), pivots, free)
        return self._echelon

    @property
    def rank(self) -> int:
        return int(self._row_echelon()[1].size)

    @property
    def dimension(self) -> int:
        return self.n - self.rank

    @property
    def info_positions(self) -> np.ndarray:
        """Codeword positions that carry the message bits in ``encode``."""
        return self._row_echelon()[2]


def _padded(keys: np.ndarray, values: np.ndarray, count: int) -> np.ndarray:
    deg = np.bincount(keys, minlength=count)
    width = int(deg.max()) if deg.size else 0
    out = np.full((count, width), -1, dtype=np.int64)
    order = np.argsort(keys, kind="stable")
    ks = keys[order]
    starts = np.concatenate([[0], np.cumsum(deg)[:-1]])
    slot = np.arange(ks.size) - starts[ks]
    out[ks, slot] = values[order]
    return out


# -- ensemble sampling --------------------------------------------------------------------


def sample_regular_code(spec: CodeSpec, rng: np.random.Generator, max_swaps: int | None = None) -> ParityCheckMatrix:
    """Draw a (dv, dc)-regular code from the configuration model.

    Variable sockets are matched to a uniformly permuted list of check sockets.  Each
    repeated (variable, check) edge is then re-drawn by swapping its check endpoint with
    that of a uniformly chosen edge; swaps that do not increase the number of repeats
    are accepted, until none remain.
    """
    n, m = spec.n_bits, spec.n_checks
    ev = np.repeat(np.arange(n), spec.dv)
    ec = rng.permutation(np.repeat(np.arange(m), spec.dc))
    n_edges = ev.size
    max_swaps = max_swaps if max_swaps is not None else 1000 * n_edges

    keys = (ev * m + ec).tolist()
    count = Counter(keys)

    def excess(ks):
        return sum(max(count[k] - 1, 0) for k in ks)

    bad = [e for e, key in enumerate(keys) if count[key] > 1]
    swaps = 0
    while bad:
        e = bad.pop()
        while count[keys[e]] > 1:
            swaps += 1
            if swaps > max_swaps:
                raise InvalidCodeSpecError("could not remove multi-edges; spec may be infeasible")
            f = int(rng.integers(n_edges))
            if ec[e] == ec[f]:
                continue
            old_e, old_f = keys[e], keys[f]
            new_e, new_f = int(ev[e] * m + ec[f]), int(ev[f] * m + ec[e])
            touched = {old_e, old_f, new_e, new_f}
            before = excess(touched)
            count[old_e] -= 1
            count[old_f] -= 1
            count[new_e] += 1
            count[new_f] += 1
            if excess(touched) > before:
                count[old_e] += 1
                count[old_f] += 1
                count[new_e] -= 1
                count[new_f] -= 1
                continue
            keys[e], keys[f] = new_e, new_f
            ec[e], ec[f] = ec[f], ec[e]
            if count[new_f] > 1:
                bad.append(f)
    return ParityCheckMatrix(n, m, ev, ec)


# -- encoding / syndrome ------------------------------------------------------------------


def syndrome(h: ParityCheckMatrix, word) -> np.ndarray:
    """``H word^T`` over GF(2); works on a single word or a batch along the first axis."""
    w = np.asarray(word, dtype=np.int64)
    if w.shape[-1] != h.n:
        raise ValueError(f"word length {w.shape[-1]} != n_bits {h.n}")
    padded = np.concatenate([w, np.zeros(w.shape[:-1] + (1,), np.int64)], axis=-1)
    return (padded[..., h.check_vars].sum(axis=-1) & 1).astype(np.uint8)


def encode(h: ParityCheckMatrix, message) -> np.ndarray:
    """Map ``message`` (length ``h.dimension``, or a batch of them) to a codeword.

    The message bits are written to ``h.info_positions``; the remaining (pivot)
    positions are solved by back-substitution through the row-echelon form.
    """
    ech, pivots, free = h._row_echelon()
    msg = np.asarray(message, dtype=np.uint8)
    single = msg.ndim == 1
    msg = np.atleast_2d(msg)
    if msg.shape[-1] != free.size:
        raise ValueError(f"message length {msg.shape[-1]} != code dimension {free.size}")
    x = np.zeros((msg.shape[0], h.n), dtype=np.uint8)
    x[:, free] = msg
    packed = _pack(x, h.n)
    for r in range(pivots.size - 1, -1, -1):
        col = pivots[r]
        bit = np.bitwise_count(packed & ech[r]).sum(axis=1) & 1
        w, b = divmod(int(col), 64)
        packed[:, w] |= bit.astype(np.uint64) << np.uint64(b)
    out = _unpack(packed, h.n)
    return out[0] if single else out


def random_codewords(h: ParityCheckMatrix, count: int, rng: np.random.Generator) -> np.ndarray:
    msg = rng.integers(0, 2, (count, h.dimension), dtype=np.uint8)
    return encode(h, msg)


# -- belief propagation -------------------------------------------------------------------


class DecodeResult(NamedTuple):
    bits: np.ndarray
    converged: bool
    iterations: int


class BPDecoder:
    """Flooding sum-product decoder.

    Channel LLRs follow ``ln P(y|1)/P(y|0)``.  Under that convention the check rule is
    ``(-1)**deg * 2 atanh(prod tanh(m/2))`` over the ``deg - 1`` extrinsic inputs,
    which reduces to the familiar sign-free form for even check degrees.
    """

    def __init__(self, h: ParityCheckMatrix):
        self.h = h
        cv = h.check_vars
        self._valid = cv >= 0
        self._cv = np.where(self._valid, cv, h.n)  # index n addresses a zero pad slot
        # flat position of every edge in the (m, width) check-major layout, per variable
        flat = np.arange(cv.size).reshape(cv.shape)
        width = h.var_checks.shape[1]
        slots = np.full((h.n, width), cv.size, dtype=np.int64)  # cv.size addresses a zero pad
        fill = np.zeros(h.n, dtype=np.int64)
        for c_pos, v in zip(flat[self._valid], cv[self._valid]):
            slots[v, fill[v]] = c_pos
            fill[v] += 1
        self._var_slots = slots
        self._sign = np.where(h.row_weights % 2 == 0, 1.0, -1.0)[:, None]
        self.msg_cv = np.zeros(cv.size + 1)

    def _posterior(self, llr):
        return llr + self.msg_cv[self._var_slots].sum(axis=1)

    def decode(self, channel_llrs, max_iters: int = 200) -> DecodeResult:
        llr = np.clip(np.asarray(channel_llrs, dtype=float), -LLR_MAX, LLR_MAX)
        if llr.shape != (self.h.n,):
            raise ValueError(f"expected {self.h.n} LLRs, got shape {llr.shape}")
        self.msg_cv[:] = 0.0
        cv, valid = self._cv, self._valid
        total = self._posterior(llr)
        for it in range(max_iters + 1):
            hard = (total > 0).astype(np.uint8)
            if not syndrome(self.h, hard).any():
                return DecodeResult(hard, True, it)
            if it == max_iters:
                break
            ext = np.concatenate([total, [0.0]])[cv] - self.msg_cv[:-1].reshape(cv.shape)
            t = np.where(valid, np.tanh(np.clip(ext, -LLR_MAX, LLR_MAX) / 2.0), 1.0)
            prod = _exclusive_prod(t)
            prod = np.clip(self._sign * prod, -1.0 + TANH_GUARD, 1.0 - TANH_GUARD)
            out = np.where(valid, 2.0 * np.arctanh(prod), 0.0)
            self.msg_cv[:-1] = np.clip(out, -LLR_MAX, LLR_MAX).ravel()
            total = self._posterior(llr)
        return DecodeResult(hard, False, max_iters)


def _exclusive_prod(t: np.ndarray) -> np.ndarray:
    """Product over each row excluding the element itself, without division."""
    ones = np.ones((t.shape[0], 1))
    left = np.cumprod(np.hstack([ones, t[:, :-1]]), axis=1)
    right = np.cumprod(np.hstack([ones, t[:, :0:-1]]), axis=1)[:, ::-1]
    return left * right


def bp_decode(h: ParityCheckMatrix, channel_llrs, max_iters: int = 200) -> DecodeResult:
    return BPDecoder(h).decode(channel_llrs, max_iters)


# -- alist ----------------------------------------------------------------------------------


def write_alist(h: ParityCheckMatrix, dest) -> None:
    """Write ``h`` in alist format (1-based indices, lists zero-padded to the maximum degree)."""
    buf = io.StringIO()
    dvmax = h.var_checks.shape[1]
    dcmax = h.check_vars.shape[1]
    buf.write(f"{h.n} {h.m}\n{dvmax} {dcmax}\n")
    buf.write(" ".join(map(str, h.col_weights)) + "\n")
    buf.write(" ".join(map(str, h.row_weights)) + "\n")
    for row in h.var_checks:
        buf.write(" ".join(str(c + 1) for c in row) + "\n")
    for row in h.check_vars:
        buf.write(" ".join(str(v + 1) for v in row) + "\n")
    text = buf.getvalue()
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w") as fh:
            fh.write(text)
    else:
        dest.write(text)


def read_alist(src) -> ParityCheckMatrix:
    """Parse an alist file; zero padding in the adjacency lists is optional."""
    if isinstance(src, (str, os.PathLike)):
        with open(src) as fh:
            text = fh.read()
    else:
        text = src.read()
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    n, m = map(int, lines[0])
    col_w = list(map(int, lines[2]))
    row_w = list(map(int, lines[3]))
    if len(col_w) != n or len(row_w) != m:
        raise ValueError("alist degree lists do not match the header dimensions")
    ev, ec = [], []
    for v, ln in enumerate(lines[4:4 + n]):
        checks = [int(t) - 1 for t in ln if int(t) > 0]
        if len(checks) != col_w[v]:
            raise ValueError(f"column {v + 1}: expected {col_w[v]} entries, got {len(checks)}")
        ev.extend([v] * len(checks))
        ec.extend(checks)
    h = ParityCheckMatrix(n, m, ev, ec)
    if len(lines) >= 4 + n + m:
        for c, ln in enumerate(lines[4 + n:4 + n + m]):
            vars_ = sorted(int(t) - 1 for t in ln if int(t) > 0)
            if len(vars_) != row_w[c] or vars_ != sorted(h.check_vars[c][h.check_vars[c] >= 0].tolist()):
                raise ValueError(f"row {c + 1} is inconsistent with the column lists")
    return h
