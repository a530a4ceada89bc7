"""Distance-doubling aggregation network over key groups of a sorted table."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

from ..mpcore import (ARITH, BOOL, SecretVector, add, concat_bits, concat_rows, eq_many, lt_many,
                      mux_multi, not_, public_const)
from ..table import SecretTable
from .expr import as_arith, as_bool

FORWARD = "forward"
REVERSE = "reverse"
AGG_FUNCS = ("sum", "count", "min", "max", "copy")
DEFAULT_AGG_WIDTH = 32

Combiner = Callable  # (ctx, earlier: SecretVector, later: SecretVector) -> SecretVector


@dataclass(frozen=True)
class AggSpec:
    """input -> output under a self-decomposable function.

    fn is one of sum, count, min, max, copy, or a callable combiner
    f(ctx, earlier, later). copy keeps the earlier value. `width` sets the
    arithmetic width of sum/count outputs.
    """

    input: str | None
    output: str
    fn: Union[str, Combiner]
    direction: str = FORWARD
    width: int | None = None

    def __post_init__(self):
        if isinstance(self.fn, str) and self.fn not in AGG_FUNCS:
            raise ValueError(f"unknown aggregation {self.fn!r}")
        if self.direction not in (FORWARD, REVERSE):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.input is None and self.fn != "count":
            raise ValueError("only count may omit its input column")


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def next_power_of_two(n: int) -> int:
    return 1 if n <= 1 else 1 << (n - 1).bit_length()


def key_bits(ctx, t: SecretTable, keys: Sequence[str]) -> SecretVector:
    """All key columns as one boolean vector (first key in the low bits)."""
    if not keys:
        raise ValueError("empty key list")
    return concat_bits([as_bool(ctx, t[k]) for k in keys])


def initial_value(ctx, t: SecretTable, spec: AggSpec) -> SecretVector:
    if spec.fn == "count":
        return public_const(t.party, t.n, 1, ARITH, spec.width or DEFAULT_AGG_WIDTH)
    src = t[spec.input]
    if spec.fn == "sum":
        return as_arith(ctx, src, sum_width(spec, src.width))
    if spec.fn in ("min", "max"):
        return as_bool(ctx, src)
    return src


def sum_width(spec: AggSpec, input_width: int | None) -> int:
    """Ring width of a sum/count output."""
    if spec.width:
        return spec.width
    if spec.fn == "count" or input_width is None:
        return DEFAULT_AGG_WIDTH
    return min(64, max(DEFAULT_AGG_WIDTH, input_width))


def identity_value(spec: AggSpec, width: int) -> int:
    """Inert fill for padding rows."""
    if spec.fn == "min":
        return (1 << width) - 1
    return 0


def _combine(ctx, items):
    """f(earlier, later) for every (spec, earlier, later) item, batched by kind."""
    out = [None] * len(items)
    minmax = [(i, s, a, c) for i, (s, a, c) in enumerate(items) if s.fn in ("min", "max")]
    if minmax:
        bits = lt_many(ctx, [(a, c) for _, _, a, c in minmax])
        sel = []
        for (i, s, a, c), b in zip(minmax, bits):
            # b = earlier < later; min keeps earlier when b, max keeps later when b
            sel.append((b, c, a) if s.fn == "min" else (b, a, c))
        chosen = mux_multi(ctx, sel)
        for (i, *_), v in zip(minmax, chosen):
            out[i] = v
    for i, (s, a, c) in enumerate(items):
        if out[i] is not None:
            continue
        if s.fn in ("sum", "count"):
            out[i] = add(a, c)
        elif s.fn == "copy":
            out[i] = a
        else:
            out[i] = s.fn(ctx, a, c)
    return out


def _stitch(head: SecretVector, tail: SecretVector) -> SecretVector:
    return concat_rows([head, tail])


def _forward_pass(ctx, keys: list[SecretVector], groups: list[list[tuple[AggSpec, SecretVector]]],
                  level1: list[SecretVector | None]):
    n = keys[0].n if keys else 0
    eq1: list[SecretVector | None] = [None] * len(keys)
    values = [[g for _, g in grp] for grp in groups]
    d = 1
    while d < n:
        with ctx.phase(f"level{d}"):
            todo = [i for i in range(len(keys)) if not (d == 1 and level1[i] is not None)]
            bs: list = [None] * len(keys)
            got = eq_many(ctx, [(keys[i].rows(0, n - d), keys[i].rows(d, n)) for i in todo]) if todo else []
            for i, b in zip(todo, got):
                bs[i] = b
            if d == 1:
                for i in range(len(keys)):
                    if bs[i] is None:
                        bs[i] = level1[i]
                    eq1[i] = bs[i]
            items, where = [], []
            for gi, grp in enumerate(groups):
                for si, (spec, _) in enumerate(grp):
                    g = values[gi][si]
                    items.append((spec, g.rows(0, n - d), g.rows(d, n)))
                    where.append((gi, si))
            combined = _combine(ctx, items)
            sel = []
            for (gi, si), (spec, _, later), f in zip(where, items, combined):
                sel.append((bs[gi], later, f))
            new_tails = mux_multi(ctx, sel)
            for (gi, si), tail in zip(where, new_tails):
                values[gi][si] = _stitch(values[gi][si].rows(0, d), tail)
        d *= 2
    return values, eq1


def agg_net_multi(ctx, t: SecretTable, passes: Sequence[tuple[Sequence[str], Sequence[AggSpec]]],
                  level1: dict[int, SecretVector] | None = None):
    """Run several (group keys, specs) pairs in one network, sharing rounds.

    Returns (table, eq1) where eq1[k] is the distance-1 equality bit vector of
    key set k (row i vs row i+1), reusable as a group-boundary marker.
    `level1` supplies precomputed distance-1 bits per key set.
    """
    n = t.n
    if not is_power_of_two(n):
        raise ValueError(f"aggregation network needs a power-of-two length, got {n}")
    level1 = level1 or {}
    outputs = set()
    for ks, specs in passes:
        for s in specs:
            if s.output in ks:
                raise ValueError(f"aggregation output {s.output!r} aliases a group key")
            outputs.add(s.output)
    for ks, specs in passes:
        for s in specs:
            if s.input is not None and s.input in outputs and s.input != s.output:
                raise ValueError(f"aggregation input {s.input!r} is produced by another aggregation")

    eq1_all: dict[int, SecretVector] = {}
    cols = dict(t.columns)
    with ctx.phase("agg_net"):
        for direction in (FORWARD, REVERSE):
            keysets, groups, ids = [], [], []
            for k, (ks, specs) in enumerate(passes):
                mine = [s for s in specs if s.direction == direction]
                if not mine and not (direction == FORWARD and k not in eq1_all):
                    continue
                kb = key_bits(ctx, t, list(ks))
                view = SecretTable(cols, t.valid, t.name)
                grp = [(s, initial_value(ctx, view, s)) for s in mine]
                if direction == REVERSE:
                    kb = kb.reversed()
                    grp = [(s, g.reversed()) for s, g in grp]
                keysets.append(kb)
                groups.append(grp)
                ids.append(k)
            if not keysets:
                continue
            pre = [level1.get(k) if direction == FORWARD else None for k in ids]
            values, eq1 = _forward_pass(ctx, keysets, groups, pre)
            for k, grp, vals, e1 in zip(ids, groups, values, eq1):
                if direction == FORWARD and e1 is not None:
                    eq1_all[k] = e1
                for (s, _), v in zip(grp, vals):
                    cols[s.output] = v.reversed() if direction == REVERSE else v
    return SecretTable(cols, t.valid, t.name, t.unique_keys), eq1_all


def agg_net(ctx, t: SecretTable, group_keys: Sequence[str], specs: Sequence[AggSpec]) -> SecretTable:
    """Forward: the last row of each group holds the full aggregate (copy spreads
    the first row's value to every row). Reverse mirrors rows: totals land in
    the first row and copy spreads the last row's value."""
    out, _ = agg_net_multi(ctx, t, [(list(group_keys), list(specs))])
    return out


def last_in_group(ctx, eq1: SecretVector) -> SecretVector:
    """Bit marking the last row of each group, from distance-1 equality bits."""
    p = eq1.party
    return concat_rows([not_(eq1), public_const(p, 1, 1, BOOL, 1)])


def first_in_group(ctx, eq1: SecretVector) -> SecretVector:
    p = eq1.party
    return concat_rows([public_const(p, 1, 1, BOOL, 1), not_(eq1)])
