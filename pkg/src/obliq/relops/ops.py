"""Filter, distinct, grouping aggregation, trimming and the masked result opening."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..mpcore import (BOOL, SecretVector, and_, broadcast_bit, b2a_bit, concat_rows,
                      eq_many, not_, open_many, products, public_const, with_width)
from ..obsort import SortKey, table_sort, valid_bit_sort
from ..permnet import shuffle
from ..table import SecretTable
from .aggnet import (AggSpec, agg_net_multi, identity_value, key_bits, last_in_group,
                     next_power_of_two)
from .expr import evaluate

VALID_KEY = "__v"


def filter_table(ctx, t: SecretTable, predicate) -> SecretTable:
    """V <- V AND predicate; rows are never removed."""
    with ctx.phase("filter"):
        bit = evaluate(ctx, t, predicate)
        if bit.enc != BOOL or bit.width != 1:
            raise ValueError("filter predicate must evaluate to a bit")
        return t.with_valid(and_(ctx, t.valid, bit))


def adjacent_equal(ctx, t: SecretTable, keys: Sequence[str]) -> SecretVector:
    """eq(row_i.keys, row_{i+1}.keys) for i < n-1."""
    kb = key_bits(ctx, t, keys)
    n = t.n
    return eq_many(ctx, [(kb.rows(0, n - 1), kb.rows(1, n))])[0]


def distinct_bits(ctx, t: SecretTable, keys: Sequence[str]) -> SecretVector:
    """First-occurrence marker on a table already sorted by `keys`."""
    if not keys:
        raise ValueError("distinct needs at least one key")
    p = t.party
    if t.n <= 1:
        return public_const(p, t.n, 1, BOOL, 1)
    with ctx.phase("distinct"):
        same_prev = adjacent_equal(ctx, t, keys)
        return concat_rows([public_const(p, 1, 1, BOOL, 1), not_(same_prev)])


def distinct(ctx, t: SecretTable, keys: Sequence[str], presorted: bool = True):
    """Return the distinct bit; unsorted input is sorted first and (table, bit) returned."""
    if presorted:
        return distinct_bits(ctx, t, keys)
    st = table_sort(ctx, t, [SortKey(k) for k in keys])
    return st, distinct_bits(ctx, st, keys)


def _with_valid_key(t: SecretTable) -> SecretTable:
    return t.with_column(VALID_KEY, t.valid)


def distinct_rows(ctx, t: SecretTable, keys: Sequence[str]) -> SecretTable:
    """Keep one valid row per distinct key (the first after sorting)."""
    with ctx.phase("distinct_rows"):
        t2 = _with_valid_key(t)
        gk = [VALID_KEY, *keys]
        st = table_sort(ctx, t2, [SortKey(k) for k in gk])
        d = distinct_bits(ctx, st, gk)
        st = st.with_valid(and_(ctx, st.valid, d))
        return st.drop([VALID_KEY])


def group_aggregate(ctx, t: SecretTable, keys: Sequence[str], specs: Sequence[AggSpec],
                    keep: Sequence[str] | None = None) -> SecretTable:
    """Group-by: sort on (V, keys), aggregate forward, keep the last row per group.

    Output columns are the keys, the spec outputs and any `keep` columns.
    """
    with ctx.phase("aggregate"):
        t2 = _with_valid_key(t)
        gk = [VALID_KEY, *keys]
        st = table_sort(ctx, t2, [SortKey(k) for k in gk])
        n = st.n
        total = next_power_of_two(n)
        fill = {}
        for s in specs:
            if s.input is not None and s.fn in ("min",) and s.input in st:
                fill[s.input] = identity_value(s, st[s.input].width)
        padded = st.pad_rows(total, fill)
        padded = padded.with_column(VALID_KEY, padded.valid)
        out, eq1 = agg_net_multi(ctx, padded, [(gk, list(specs))])
        if total > 1:
            last = last_in_group(ctx, eq1[0])
        else:
            last = public_const(t.party, 1, 1, BOOL, 1)
        out = out.with_valid(and_(ctx, out.valid, last)).rows(0, n)
        names = list(dict.fromkeys([*keys, *(s.output for s in specs), *(keep or [])]))
        return out.select(names)


def pre_aggregate(ctx, t: SecretTable, join_key: Sequence[str], specs: Sequence[AggSpec]) -> SecretTable:
    """Aggregate before a join so the join keys become unique among valid rows."""
    res = group_aggregate(ctx, t, join_key, specs)
    res.unique_keys = tuple(join_key)
    return res


def trim_decision(n_left: int, n_right: int, ell: int = 128, parties: int = 3) -> bool:
    """Trim iff 3 * N * (R / L) < lg(L) * lg(ell)."""
    if n_left <= 0 or n_right <= 0:
        raise ValueError("sizes must be positive")
    return 3 * parties * (n_right / n_left) < math.log2(n_left) * math.log2(ell)


def trim_threshold(n_left: int, ell: int = 128, parties: int = 3) -> float:
    """Largest right size (exclusive) for which trimming is chosen."""
    return n_left * math.log2(n_left) * math.log2(ell) / (3 * parties)


def trim_rows(ctx, t: SecretTable, keep: int) -> SecretTable:
    """Valid rows first, then cut to `keep` rows."""
    sorted_t = valid_bit_sort(ctx, t)
    return sorted_t.rows(0, min(keep, t.n))


def mask_rows(ctx, t: SecretTable) -> SecretTable:
    """Zero every column where V = 0."""
    pairs, slots = [], []
    varith = None
    for k, v in t.columns.items():
        if v.enc == BOOL:
            pairs.append((broadcast_bit(t.valid, v.width), v))
        else:
            if varith is None:
                varith = b2a_bit(ctx, t.valid, 64)
            pairs.append((with_width(varith, v.width), v))
        slots.append(k)
    masked = products(ctx, pairs) if pairs else []
    return SecretTable(dict(zip(slots, masked)), t.valid, t.name)


def mask_shuffle_open(ctx, t: SecretTable, return_all: bool = False):
    """Mask invalid rows, shuffle all columns under one permutation, open,
    and drop invalid rows in the clear. Returns {column: values}."""
    with ctx.phase("mask_shuffle_open"):
        if t.n == 0:
            return {k: np.zeros(0, dtype=np.uint64) for k in t.columns}
        masked = mask_rows(ctx, t)
        vecs = shuffle(ctx, masked.vectors())
        opened = open_many(ctx, vecs)
    cols = dict(zip(masked.columns, opened[:-1]))
    valid = np.asarray(opened[-1], dtype=np.uint64).astype(bool)
    if return_all:
        return cols, valid
    return {k: v[valid] for k, v in cols.items()}
