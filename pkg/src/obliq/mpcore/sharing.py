"""Replicated secret sharing: the share container, dealing, opening, local ops and products.

Party i holds the pair (s_i, s_{i+1}) of a three-way sharing (s_0, s_1, s_2).
Arithmetic components are uint64 arrays reduced mod 2^width (width <= 64).
Boolean components are bit-sliced uint8 arrays of shape (n, width), column k
holding bit k, so boolean widths are unrestricted.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .prg import Stream, mask_of

ARITH = "A"
BOOL = "B"
MAX_ARITH_WIDTH = 64


class EncodingError(TypeError):
    """Operands with incompatible encodings or shapes."""


class IntegrityError(RuntimeError):
    """Replicated shares disagree or an opened permutation is malformed."""


# ---------------------------------------------------------------- bit helpers

def to_bits(values, width: int) -> np.ndarray:
    """Clear values -> (n, width) uint8 bit matrix, LSB first.

    An (n, width) bit matrix is accepted as is.
    """
    arr = np.asarray(values) if not isinstance(values, np.ndarray) else values
    if arr.ndim == 2:
        if arr.shape[1] != width or (arr.size and int(arr.max()) > 1):
            raise EncodingError(f"bit matrix of shape {arr.shape} does not match width {width}")
        return arr.astype(np.uint8)
    if width <= 64:
        v = np.asarray(values, dtype=np.uint64).reshape(-1)
        shifts = np.arange(width, dtype=np.uint64)
        return ((v[:, None] >> shifts) & np.uint64(1)).astype(np.uint8)
    vals = [int(x) for x in np.asarray(values, dtype=object).reshape(-1)]
    out = np.zeros((len(vals), width), dtype=np.uint8)
    for i, x in enumerate(vals):
        for k in range(width):
            out[i, k] = (x >> k) & 1
    return out


def from_bits(bits: np.ndarray):
    """(n, width) bit matrix -> uint64 array (width <= 64) or object array of ints."""
    n, width = bits.shape
    if width <= 64:
        shifts = np.arange(width, dtype=np.uint64)
        if n == 0:
            return np.zeros(0, dtype=np.uint64)
        return np.bitwise_or.reduce(bits.astype(np.uint64) << shifts, axis=1).astype(np.uint64)
    out = np.empty(n, dtype=object)
    for i in range(n):
        out[i] = sum(int(b) << k for k, b in enumerate(bits[i]))
    return out


def check_fits(values, width: int) -> None:
    arr = np.asarray(values)
    if arr.dtype.kind in "iu":
        bad = arr < 0 if arr.dtype.kind == "i" else np.zeros(arr.shape, bool)
        if width < 64:
            bad = bad | ((arr.astype(np.uint64) >> np.uint64(width)) != 0)
        if bad.any():
            raise EncodingError(f"value {arr[bad][0]} does not fit in {width} bits")
        return
    for x in arr.astype(object).reshape(-1):
        if int(x) < 0 or int(x) >> width:
            raise EncodingError(f"value {int(x)} does not fit in {width} bits")


# ---------------------------------------------------------------- container

@dataclass
class SecretVector:
    """One party's view of a shared vector."""

    enc: str
    width: int
    first: np.ndarray   # s_i
    second: np.ndarray  # s_{i+1}
    party: int

    def __post_init__(self):
        if self.enc not in (ARITH, BOOL):
            raise EncodingError(f"unknown encoding {self.enc!r}")
        if self.enc == ARITH and not 1 <= self.width <= MAX_ARITH_WIDTH:
            raise EncodingError(f"arithmetic width {self.width} unsupported (1..64)")

    @property
    def n(self) -> int:
        return int(self.first.shape[0])

    def __len__(self) -> int:
        return self.n

    @property
    def is_bool(self) -> bool:
        return self.enc == BOOL

    @property
    def mask(self) -> np.uint64:
        return mask_of(self.width)

    def spec(self) -> tuple:
        return (self.enc, self.n, self.width)

    def _like(self, first, second, width=None) -> "SecretVector":
        return SecretVector(self.enc, self.width if width is None else width, first, second, self.party)

    # local reshaping: row moves never need communication
    def take(self, idx) -> "SecretVector":
        idx = np.asarray(idx, dtype=np.int64)
        return self._like(self.first[idx], self.second[idx])

    def reversed(self) -> "SecretVector":
        return self.take(np.arange(self.n - 1, -1, -1))

    def rows(self, lo: int, hi: int) -> "SecretVector":
        return self._like(self.first[lo:hi].copy(), self.second[lo:hi].copy())

    def bit_slice(self, lo: int, hi: int) -> "SecretVector":
        """Boolean columns [lo, hi) as a narrower boolean vector."""
        self._need_bool()
        return self._like(self.first[:, lo:hi].copy(), self.second[:, lo:hi].copy(), hi - lo)

    def bit(self, k: int) -> "SecretVector":
        return self.bit_slice(k, k + 1)

    def copy(self) -> "SecretVector":
        return self._like(self.first.copy(), self.second.copy())

    def _need_bool(self):
        if self.enc != BOOL:
            raise EncodingError("boolean vector required")


def concat_rows(parts: Sequence[SecretVector]) -> SecretVector:
    p0 = parts[0]
    for p in parts:
        if (p.enc, p.width) != (p0.enc, p0.width):
            raise EncodingError("row concat needs equal encoding and width")
    return SecretVector(p0.enc, p0.width, np.concatenate([p.first for p in parts]),
                        np.concatenate([p.second for p in parts]), p0.party)


def concat_bits(parts: Sequence[SecretVector]) -> SecretVector:
    """Place boolean vectors side by side; parts[0] becomes the low bits."""
    for p in parts:
        p._need_bool()
    return SecretVector(BOOL, sum(p.width for p in parts),
                        np.concatenate([p.first for p in parts], axis=1),
                        np.concatenate([p.second for p in parts], axis=1), parts[0].party)


def zeros(party: int, n: int, enc: str, width: int) -> SecretVector:
    """The all-zero sharing (every component zero)."""
    if enc == BOOL:
        z = np.zeros((n, width), dtype=np.uint8)
        return SecretVector(BOOL, width, z, z.copy(), party)
    z = np.zeros(n, dtype=np.uint64)
    return SecretVector(ARITH, width, z, z.copy(), party)


def public(party: int, values, enc: str, width: int) -> SecretVector:
    """Sharing (v, 0, 0) of a public vector; costs nothing."""
    if enc == BOOL:
        v = to_bits(values, width) if not (isinstance(values, np.ndarray) and values.ndim == 2) else values.astype(np.uint8)
    else:
        v = np.asarray(values, dtype=np.uint64).reshape(-1) & mask_of(width)
    z = np.zeros_like(v)
    first = v.copy() if party == 0 else z
    second = v.copy() if party == 2 else z.copy()
    return SecretVector(enc, width, first, second, party)


def public_const(party: int, n: int, value: int, enc: str, width: int) -> SecretVector:
    if enc == BOOL:
        row = to_bits([value], width)
        return public(party, np.repeat(row, n, axis=0), BOOL, width)
    return public(party, np.full(n, value & int(mask_of(width)), dtype=np.uint64), ARITH, width)


# ---------------------------------------------------------------- dealing

def deal(values, enc: str, width: int, rng: Stream) -> list[SecretVector]:
    """Dealer-side sharing: returns the three party views.

    s_1, s_2 come from the dealer stream; s_0 completes the reconstruction.
    """
    if enc == BOOL:
        check_fits(values, width)
        v = to_bits(values, width)
        n = v.shape[0]
        s1 = rng.bits(n, width)
        s2 = rng.bits(n, width)
        s0 = v ^ s1 ^ s2
    else:
        if width > MAX_ARITH_WIDTH:
            raise EncodingError(f"arithmetic width {width} unsupported (1..64)")
        check_fits(values, width)
        v = np.asarray(values).reshape(-1).astype(np.uint64)
        n = v.shape[0]
        m = mask_of(width)
        s1 = rng.arith(n, width)
        s2 = rng.arith(n, width)
        s0 = (v - s1 - s2) & m
    comps = [s0, s1, s2]
    return [SecretVector(enc, width, comps[p].copy(), comps[(p + 1) % 3].copy(), p) for p in range(3)]


def reconstruct(views: Sequence[SecretVector]):
    """Clear-side reconstruction from the three views (tests and the dealer)."""
    by_party = sorted(views, key=lambda v: v.party)
    comps = [v.first for v in by_party]
    for p in range(3):
        if not np.array_equal(by_party[p].second, comps[(p + 1) % 3]):
            raise IntegrityError(f"party {p} and {(p + 1) % 3} disagree on their common share")
    v0 = by_party[0]
    if v0.enc == BOOL:
        return from_bits(comps[0] ^ comps[1] ^ comps[2])
    return (comps[0] + comps[1] + comps[2]) & v0.mask


def share_secret(ctx, owner: int, values, n: int, enc: str, width: int) -> SecretVector:
    """Interactive input: `owner` splits its clear vector and sends each peer its pair.

    Only the owner passes `values`; the two random components come from its
    personal stream.
    """
    p = ctx.party
    with ctx.phase("input"):
        if p == owner:
            rng = ctx.prg_own
            views = deal(values, enc, width, rng)
            for q in range(3):
                if q != p:
                    ctx.send(q, [(views[q].first, width), (views[q].second, width)])
            return views[p]
        spec = (enc, n, width)
        a, b = ctx.recv(owner, [spec, spec])
        return SecretVector(enc, width, a, b, p)


# ---------------------------------------------------------------- local linear ops

def _same(x: SecretVector, y: SecretVector) -> None:
    if x.enc != y.enc or x.width != y.width or x.n != y.n:
        raise EncodingError(f"operand mismatch: {x.spec()} vs {y.spec()}")


def add(x: SecretVector, y: SecretVector) -> SecretVector:
    _same(x, y)
    if x.enc == BOOL:
        return x._like(x.first ^ y.first, x.second ^ y.second)
    return x._like((x.first + y.first) & x.mask, (x.second + y.second) & x.mask)


def sub(x: SecretVector, y: SecretVector) -> SecretVector:
    _same(x, y)
    if x.enc == BOOL:
        return add(x, y)
    return x._like((x.first - y.first) & x.mask, (x.second - y.second) & x.mask)


def xor(x: SecretVector, y: SecretVector) -> SecretVector:
    _same(x, y)
    x._need_bool()
    return add(x, y)


def neg(x: SecretVector) -> SecretVector:
    if x.enc == BOOL:
        return x.copy()
    zero = np.uint64(0)
    return x._like((zero - x.first) & x.mask, (zero - x.second) & x.mask)


def not_(x: SecretVector) -> SecretVector:
    """Bitwise complement of a boolean vector (XOR with public all-ones)."""
    x._need_bool()
    first, second = x.first, x.second
    if x.party == 0:
        first = first ^ np.uint8(1)
    if x.party == 2:
        second = second ^ np.uint8(1)
    return x._like(first.copy(), second.copy())


def add_public(x: SecretVector, c) -> SecretVector:
    """x + c (arithmetic) or x XOR c (boolean) for a public scalar or vector c."""
    if x.enc == BOOL:
        cb = to_bits(np.broadcast_to(np.asarray(c, dtype=object), (x.n,)), x.width)
        return xor(x, public(x.party, cb, BOOL, x.width))
    cv = np.broadcast_to(np.asarray(c, dtype=np.uint64), (x.n,))
    return add(x, public(x.party, cv, ARITH, x.width))


def mul_public(x: SecretVector, c) -> SecretVector:
    """x * c mod 2^w for a public scalar or vector (arithmetic)."""
    if x.enc != ARITH:
        raise EncodingError("mul_public needs an arithmetic vector")
    cv = np.asarray(c, dtype=np.uint64)
    return x._like((x.first * cv) & x.mask, (x.second * cv) & x.mask)


def and_public(x: SecretVector, c) -> SecretVector:
    """x AND c for a public bit pattern (scalar value or (n, w) bit matrix)."""
    x._need_bool()
    cb = np.asarray(c)
    if cb.ndim < 2:
        cb = to_bits(np.broadcast_to(cb.astype(object), (x.n,)), x.width)
    return x._like(x.first & cb, x.second & cb)


def with_width(x: SecretVector, width: int) -> SecretVector:
    """Arithmetic reduction to a narrower ring (local), or boolean zero-extension/truncation."""
    if x.enc == ARITH:
        if width > x.width:
            raise EncodingError("widening an arithmetic vector needs a conversion protocol")
        m = mask_of(width)
        return SecretVector(ARITH, width, x.first & m, x.second & m, x.party)
    if width <= x.width:
        return x.bit_slice(0, width)
    pad = np.zeros((x.n, width - x.width), dtype=np.uint8)
    return SecretVector(BOOL, width, np.concatenate([x.first, pad], axis=1),
                        np.concatenate([x.second, pad.copy()], axis=1), x.party)


# ---------------------------------------------------------------- interactive core

def open_many(ctx, xs: Sequence[SecretVector], verify: bool = False) -> list:
    """Reconstruct vectors to all parties in one round.

    Each party forwards its first component to its successor, the one party
    that lacks it. With verify=True the second component also goes to the
    predecessor and mismatches abort.
    """
    with ctx.phase("open"):
        ctx.send(ctx.next, [(x.first, x.width) for x in xs])
        if verify:
            ctx.send(ctx.prev, [(x.second, x.width) for x in xs])
        got = ctx.recv(ctx.prev, [x.spec() for x in xs])
        if verify:
            dup = ctx.recv(ctx.next, [x.spec() for x in xs])
            for g, d in zip(got, dup):
                if not np.array_equal(g, d):
                    raise IntegrityError(f"party {ctx.party}: replicated shares disagree on open")
    out = []
    for x, missing in zip(xs, got):
        if x.enc == BOOL:
            out.append(from_bits(x.first ^ x.second ^ missing))
        else:
            out.append((x.first + x.second + missing) & x.mask)
    return out


def open_vec(ctx, x: SecretVector, verify: bool = False):
    return open_many(ctx, [x], verify)[0]


def open_bits(ctx, x: SecretVector) -> np.ndarray:
    """Open a boolean vector as its (n, w) bit matrix."""
    x._need_bool()
    with ctx.phase("open"):
        ctx.send(ctx.next, [(x.first, x.width)])
        (missing,) = ctx.recv(ctx.prev, [x.spec()])
    return x.first ^ x.second ^ missing


def _zero_share(ctx, enc: str, n: int, width: int) -> np.ndarray:
    if enc == BOOL:
        return ctx.prg_next.bits(n, width) ^ ctx.prg_prev.bits(n, width)
    return (ctx.prg_next.arith(n, width) - ctx.prg_prev.arith(n, width)) & mask_of(width)


def reshare(ctx, items: Sequence[tuple[str, int, np.ndarray]]) -> list[SecretVector]:
    """Turn 3-out-of-3 additive components z_i into fresh replicated sharings.

    Adds a pairwise-seed zero sharing, sends z_i to the predecessor and
    receives z_{i+1} from the successor: one round, width*n bits per item.
    """
    masked = []
    for enc, width, z in items:
        n = z.shape[0]
        alpha = _zero_share(ctx, enc, n, width)
        masked.append((z ^ alpha) if enc == BOOL else ((z + alpha) & mask_of(width)))
    ctx.send(ctx.prev, [(z, w) for (_, w, _), z in zip(items, masked)])
    got = ctx.recv(ctx.next, [(enc, z.shape[0], w) for enc, w, z in items])
    return [SecretVector(enc, w, z, g, ctx.party) for (enc, w, _), z, g in zip(items, masked, got)]


def products(ctx, pairs: Sequence[tuple[SecretVector, SecretVector]]) -> list[SecretVector]:
    """Elementwise x*y (arithmetic) or x AND y (boolean) for every pair, in one round."""
    items = []
    for x, y in pairs:
        _same(x, y)
        if x.enc == BOOL:
            z = (x.first & y.first) ^ (x.first & y.second) ^ (x.second & y.first)
        else:
            z = (x.first * y.first + x.first * y.second + x.second * y.first) & x.mask
        items.append((x.enc, x.width, z))
    with ctx.phase("mul"):
        return reshare(ctx, items)


def mul(ctx, x: SecretVector, y: SecretVector) -> SecretVector:
    if x.enc != ARITH or y.enc != ARITH:
        raise EncodingError("mul needs arithmetic operands")
    return products(ctx, [(x, y)])[0]


def and_(ctx, x: SecretVector, y: SecretVector) -> SecretVector:
    if x.enc != BOOL or y.enc != BOOL:
        raise EncodingError("and_ needs boolean operands")
    return products(ctx, [(x, y)])[0]


def or_(ctx, x: SecretVector, y: SecretVector) -> SecretVector:
    return xor(xor(x, y), and_(ctx, x, y))
