"""Oblivious sorting: bit permutations, radixsort, shuffle-then-quicksort,
the padding wrapper that extracts a sorting permutation, and multi-key table sort."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .mpcore import (ARITH, BOOL, EncodingError, SecretVector, add, add_public, b2a, b2a_bit,
                     concat_bits, lt_many, mul, neg, not_, open_vec, public, sub)
from .permnet import (PERM_WIDTH, apply_elementwise_perm, compose_perms, invert_elementwise_perm,
                      identity_shared, shuffle)
from .table import SecretTable

ASC = "ASC"
DESC = "DESC"
QUICKSORT = "quicksort"
RADIXSORT = "radixsort"
PAD_BITS = 32


@dataclass(frozen=True)
class SortKey:
    column: str
    order: str = ASC

    def __post_init__(self):
        if self.order not in (ASC, DESC):
            raise ValueError(f"sort order must be ASC or DESC, got {self.order!r}")


def default_algorithm(width: int) -> str:
    return QUICKSORT if width > 32 else RADIXSORT


def _cumsum(v: SecretVector) -> SecretVector:
    m = v.mask
    return SecretVector(ARITH, v.width, np.cumsum(v.first, dtype=np.uint64) & m,
                        np.cumsum(v.second, dtype=np.uint64) & m, v.party)


def gen_bit_perm(ctx, b: SecretVector) -> SecretVector:
    """Stable zeros-first sorting permutation of a secret bit vector (arithmetic, 32-bit).

    s0 = prefix sums of (1-b); s1 = total zeros + prefix sums of b;
    sigma = s0 + b*(s1 - s0).
    """
    if b.enc != BOOL or b.width != 1:
        raise EncodingError("gen_bit_perm needs a width-1 boolean vector")
    n = b.n
    with ctx.phase("gen_bit_perm"):
        ba = b2a_bit(ctx, b, PERM_WIDTH)
        f0 = add_public(neg(ba), 1)
        s0 = _cumsum(f0)
        zeros_total = s0.take(np.full(n, n - 1))
        s1 = add(zeros_total, _cumsum(ba))
        return add(s0, mul(ctx, ba, sub(s1, s0)))


def radixsort(ctx, x: SecretVector, nbits: int | None = None, skip: int = 0) -> SecretVector:
    """LSB-first stable sort on bits [skip, skip+nbits) of a boolean vector."""
    if x.enc != BOOL:
        raise EncodingError("radixsort needs a boolean vector")
    nbits = x.width - skip if nbits is None else nbits
    if nbits + skip > x.width:
        raise ValueError("bit range exceeds vector width")
    with ctx.phase("radixsort"):
        for k in range(skip, skip + nbits):
            sigma = gen_bit_perm(ctx, x.bit(k))
            x = apply_elementwise_perm(ctx, x, sigma)
    return x


def quicksort_base(ctx, x: SecretVector, check_distinct: bool = False) -> SecretVector:
    """Shuffle, then sort by iterated pivot partitioning with opened comparisons.

    Requires distinct values. Each iteration compares every non-pivot element
    with the pivot heading its segment in one batched round. Comparisons are
    counted in ctx.stats["comparisons"].
    """
    if x.enc != BOOL:
        raise EncodingError("quicksort needs a boolean vector")
    n = x.n
    with ctx.phase("quicksort"):
        x = shuffle(ctx, x)
        pivot = np.zeros(n, dtype=bool)
        if n:
            pivot[0] = True
        idx = np.arange(n)
        iterations = 0
        while not pivot.all():
            # segment head = highest pivot index <= i (scaled indicator + prefix max)
            head = np.maximum.accumulate(np.where(pivot, idx, 0))
            active = np.nonzero(~pivot)[0]
            (less,) = lt_many(ctx, [(x.take(active), x.take(head[active]))])
            r = open_vec(ctx, less).astype(bool)
            ctx.stats["comparisons"] += len(active)
            iterations += 1
            cls = np.ones(n, dtype=np.int64)
            cls[active] = np.where(r, 0, 2)
            order = np.lexsort((idx, cls, head))
            x = x.take(order)
            seg, cl = head[order], cls[order]
            first = np.ones(n, dtype=bool)
            first[1:] = (seg[1:] != seg[:-1]) | (cl[1:] != cl[:-1])
            pivot = (cl == 1) | first
        ctx.stats["quicksort_iterations"] += iterations
        if check_distinct and n > 1:
            vals = open_vec(ctx, x)
            if any(int(a) >= int(b) for a, b in zip(vals[:-1], vals[1:])):
                raise ValueError("quicksort input had duplicate elements")
    return x


def _index_pad(ctx, n: int, values) -> SecretVector:
    return public(ctx.party, np.asarray(values, dtype=np.uint64), BOOL, PAD_BITS)


def sort_wrapper(ctx, x: SecretVector, order: str = ASC,
                 algorithm: str | None = None) -> tuple[SecretVector, SecretVector]:
    """Stable sort of a boolean vector; returns (y, sigma) with y = sigma(x).

    sigma is a 32-bit arithmetic elementwise permutation.
    """
    if x.enc != BOOL:
        raise EncodingError("sort keys must be boolean-encoded")
    if order not in (ASC, DESC):
        raise ValueError(f"bad order {order!r}")
    n, w = x.n, x.width
    algorithm = algorithm or default_algorithm(w)
    ones_to_n = np.arange(1, n + 1, dtype=np.uint64)
    with ctx.phase("sort"):
        if algorithm == RADIXSORT:
            # padding bits are never sorted on; they only carry origin indices
            padded = concat_bits([_index_pad(ctx, n, ones_to_n), x])
            if order == DESC:
                padded = padded.reversed()
            out = radixsort(ctx, padded, nbits=w, skip=PAD_BITS)
            if order == DESC:
                out = out.reversed()
            src = out.bit_slice(0, PAD_BITS)
        elif algorithm == QUICKSORT:
            if order == ASC:
                pad = ones_to_n
            else:
                pad = (np.uint64(1 << PAD_BITS) - ones_to_n) & np.uint64((1 << PAD_BITS) - 1)
            padded = concat_bits([_index_pad(ctx, n, pad), x])
            out = quicksort_base(ctx, padded)
            if order == DESC:
                out = out.reversed()
            src = out.bit_slice(0, PAD_BITS)
            if order == DESC:
                src = neg(b2a(ctx, src, PAD_BITS))
        else:
            raise ValueError(f"unknown sort algorithm {algorithm!r}")
        y = out.bit_slice(PAD_BITS, PAD_BITS + w)
        with ctx.phase("extract"):
            sigma = invert_elementwise_perm(ctx, src, out_enc=ARITH)
    return y, sigma


def valid_bit_sort(ctx, t: SecretTable) -> SecretTable:
    """Move valid rows first (stable in both classes) with one bit permutation."""
    with ctx.phase("valid_sort"):
        sigma = gen_bit_perm(ctx, not_(t.valid))
        return t.replace_vectors(apply_elementwise_perm(ctx, t.vectors(), sigma))


def table_sort(ctx, t: SecretTable, keys: Sequence[SortKey],
               algorithm: str | None = None) -> SecretTable:
    """Lexicographic stable sort on boolean key columns, least significant key first.

    The first sorted key starts from the identity, so its apply and compose
    steps are skipped.
    """
    if not keys:
        return t
    for k in keys:
        if t[k.column].enc != BOOL:
            raise EncodingError(f"sort key {k.column!r} must be boolean-encoded")
    pi = None
    with ctx.phase("table_sort"):
        for k in reversed(list(keys)):
            col = t[k.column]
            if pi is not None:
                col = apply_elementwise_perm(ctx, col, pi)
            _, step = sort_wrapper(ctx, col, k.order, algorithm)
            pi = step if pi is None else compose_perms(ctx, pi, step)
        return t.replace_vectors(apply_elementwise_perm(ctx, t.vectors(), pi))


__all__ = [
    "ASC", "DESC", "QUICKSORT", "RADIXSORT", "PAD_BITS", "SortKey", "default_algorithm",
    "gen_bit_perm", "radixsort", "quicksort_base", "sort_wrapper", "valid_bit_sort", "table_sort",
    "identity_shared",
]
