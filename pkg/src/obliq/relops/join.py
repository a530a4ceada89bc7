"""The join-aggregation operator and its join-type variants.

Both inputs are stacked, sorted on (V_LR, K, T_id), and group boundaries on
(V_LR, K) decide validity; one aggregation-network pass then copies left
columns onto matching right rows, propagates validity and evaluates any fused
aggregations.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from ..mpcore import (BOOL, SecretVector, and_, concat_rows, mux_multi, not_, products, public,
                      public_const, with_width, xor, zeros)
from ..obsort import SortKey, table_sort
from ..table import SecretTable
from .aggnet import AggSpec, agg_net_multi, last_in_group, next_power_of_two
from .expr import PlanError, as_bool
from .ops import adjacent_equal, filter_table, trim_decision, trim_rows

JOIN_TYPES = ("inner", "semi", "anti", "left_outer", "right_outer", "full_outer")
OUTER = ("left_outer", "right_outer", "full_outer")
V_LR = "__vlr"
T_ID = "__tid"


@dataclass
class JoinSpec:
    """Parameters of one join.

    copies: (left column, output column) pairs carried onto matching right rows.
    aggs: fused aggregations over right columns grouped by the join keys
    (inner joins only); the output then has one row per matched key.
    trim: force (True/False) or leave to the size heuristic (None).
    """

    kind: str
    keys: list[str]
    copies: list[tuple[str, str]] = field(default_factory=list)
    aggs: list[AggSpec] = field(default_factory=list)
    filters: list = field(default_factory=list)
    unique_keys_both: bool = False
    trim: bool | None = None

    def __post_init__(self):
        if self.kind not in JOIN_TYPES:
            raise PlanError(f"unknown join type {self.kind!r}")
        if not self.keys:
            raise PlanError("a join needs at least one equality key")
        if self.aggs and self.kind != "inner":
            raise PlanError("fused aggregations are only supported on inner joins")
        if self.kind in ("semi", "anti") and (self.copies or self.aggs):
            raise PlanError("semi and anti joins return left rows only; nothing to copy")
        if self.unique_keys_both and self.kind != "inner":
            raise PlanError("the unique-keys shortcut applies to inner joins")


def _check(spec: JoinSpec, left: SecretTable, right: SecretTable) -> None:
    for k in spec.keys:
        if k not in left or k not in right:
            raise PlanError(f"join key {k!r} missing from an input")
    for src, _ in spec.copies:
        if src not in left:
            raise PlanError(f"copied column {src!r} missing from the left input")
    payload = set(right.columns) - set(spec.keys)
    for _, out in spec.copies:
        if out in payload or out in spec.keys:
            raise PlanError(f"copy output {out!r} collides with a right column")
    for a in spec.aggs:
        if a.input is not None and a.input not in right:
            raise PlanError(f"aggregation input {a.input!r} must be a right column")
        if a.output in spec.keys:
            raise PlanError(f"aggregation output {a.output!r} aliases a join key")


def _stack(ctx, spec: JoinSpec, left: SecretTable, right: SecretTable) -> SecretTable:
    """Rows of left then right with merged keys, null-padded payload, V_LR and T_id."""
    p = left.party
    n, m = left.n, right.n
    cols: dict[str, SecretVector] = {}
    for k in spec.keys:
        lk, rk = as_bool(ctx, left[k]), as_bool(ctx, right[k])
        w = max(lk.width, rk.width)
        cols[k] = concat_rows([with_width(lk, w), with_width(rk, w)])
    for src, out in spec.copies:
        v = left[src]
        cols[out] = concat_rows([v, zeros(p, m, v.enc, v.width)])
    for name, v in right.columns.items():
        if name in spec.keys:
            continue
        cols[name] = concat_rows([zeros(p, n, v.enc, v.width), v])
    vlr = concat_rows([left.valid, right.valid])
    cols[V_LR] = vlr
    tid = [0] * n + [1] * m
    cols[T_ID] = public(p, tid, BOOL, 1)
    return SecretTable(cols, vlr, f"{left.name}*{right.name}")


def join_agg(ctx, left: SecretTable, right: SecretTable, spec: JoinSpec) -> SecretTable:
    """Oblivious equi-join (with optional fused aggregation) of two secret tables.

    Output has |L|+|R| rows; trimming cuts inner joins to |R| rows and semi
    and anti joins to |L|. Outer joins are never trimmed.
    """
    _check(spec, left, right)
    if spec.kind in ("semi", "anti"):
        left, right = right, left
    n, m = left.n, right.n
    with ctx.phase(f"join_{spec.kind}"):
        o = _stack(ctx, spec, left, right)
        ka = [V_LR, *spec.keys]
        ks = [V_LR, *spec.keys, T_ID]
        o = table_sort(ctx, o, [SortKey(k) for k in ks])
        total = n + m
        if spec.unique_keys_both:
            out = _unique_both(ctx, spec, o, ka)
            out = out.drop([V_LR, T_ID])
            out = trim_rows(ctx, out, min(n, m))
            return _finish(ctx, spec, out)
        size = next_power_of_two(total)
        o = o.pad_rows(size)
        eq_a = adjacent_equal(ctx, o, ka) if size > 1 else None
        valid = _validity(ctx, spec, o, eq_a)
        o = o.with_valid(valid)
        o = o.with_column("__vprop", valid)
        copy_specs = [AggSpec(out, out, "copy") for _, out in spec.copies]
        ks_specs = list(spec.aggs)
        if spec.kind in ("inner", "semi", "left_outer"):
            ks_specs.append(AggSpec("__vprop", "__vprop", "copy"))
        if spec.kind == "anti":
            copy_specs.append(AggSpec("__vprop", "__vprop", "copy"))
        passes = [(ka, copy_specs), (ks, ks_specs)]
        level1 = {0: eq_a} if eq_a is not None else {}
        o, eq1 = agg_net_multi(ctx, o, passes, level1=level1)
        valid = o["__vprop"]
        if spec.aggs:
            last = last_in_group(ctx, eq1[1]) if size > 1 else public_const(o.party, 1, 1, BOOL, 1)
            valid = and_(ctx, valid, last)
        o = o.with_valid(valid).drop(["__vprop", V_LR, T_ID]).rows(0, total)
        if spec.aggs:
            o = o.select([*spec.keys, *(out for _, out in spec.copies), *(a.output for a in spec.aggs)])
        if spec.kind not in OUTER:
            do_trim = spec.trim if spec.trim is not None else trim_decision(n, m)
            if do_trim:
                o = trim_rows(ctx, o, total - n)
        return _finish(ctx, spec, o)


def _finish(ctx, spec: JoinSpec, o: SecretTable) -> SecretTable:
    for pred in spec.filters:
        o = filter_table(ctx, o, pred)
    return o


def _validity(ctx, spec: JoinSpec, o: SecretTable, eq_a: SecretVector | None) -> SecretVector:
    """Per-join-type validity before propagation. eq_a[i] = (row i ~ row i+1 on V_LR, K)."""
    p = o.party
    size = o.n
    vlr, tid = o[V_LR], o[T_ID]
    if eq_a is None:
        same_prev = zeros(p, size, BOOL, 1)
        same_next = zeros(p, size, BOOL, 1)
    else:
        same_prev = concat_rows([zeros(p, 1, BOOL, 1), eq_a])
        same_next = concat_rows([eq_a, zeros(p, 1, BOOL, 1)])
    first = not_(same_prev)
    if spec.kind in ("inner", "semi"):
        return and_(ctx, vlr, not_(first))
    if spec.kind in ("right_outer", "anti"):
        return and_(ctx, vlr, tid)
    # a left row followed by a row of its group is matched and replaced by the joined rows
    if spec.kind == "left_outer":
        u, w = products(ctx, [(tid, first), (not_(tid), same_next)])
        return and_(ctx, vlr, not_(xor(u, w)))
    w = products(ctx, [(not_(tid), same_next)])[0]
    return and_(ctx, vlr, not_(w))


def _unique_both(ctx, spec: JoinSpec, o: SecretTable, ka: Sequence[str]) -> SecretTable:
    """Keys unique on both sides: a group is at most (left row, right row)."""
    p = o.party
    if o.n <= 1:
        return o.with_valid(zeros(p, o.n, BOOL, 1))
    eq_a = adjacent_equal(ctx, o, ka)
    same_prev = concat_rows([zeros(p, 1, BOOL, 1), eq_a])
    valid = and_(ctx, o[V_LR], same_prev)
    items = []
    for _, out in spec.copies:
        col = o[out]
        prev = concat_rows([col.rows(0, 1), col.rows(0, o.n - 1)])
        items.append((same_prev, col, prev))
    moved = mux_multi(ctx, items) if items else []
    cols = dict(o.columns)
    for (_, out), v in zip(spec.copies, moved):
        cols[out] = v
    return SecretTable(cols, valid, o.name)
