"""Clear reference executor with bag semantics over valid rows.

It shares only the plan vocabulary with the secure path. Missing values from
outer joins are 0, arithmetic wraps at the column width, and sort orders
rows by the sort keys and then by the remaining columns in ascending order.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from ..obsort import DESC
from ..relops.aggnet import sum_width
from ..relops.expr import (COMPARISONS, And, Arith, Col, Const, Eq, Ge, Gt, Le, Lt, Ne, Not, Or,
                           PlanError, infer_type, lift)
from .plan import Plan


@dataclass
class PlainTable:
    """Clear columns plus validity; invalid rows are dummies."""

    columns: dict[str, np.ndarray]
    valid: np.ndarray | None = None
    ordered: bool = field(default=False)

    def __post_init__(self):
        self.columns = {k: np.asarray(v, dtype=np.uint64) for k, v in self.columns.items()}
        n = len(next(iter(self.columns.values()))) if self.columns else 0
        self.valid = np.ones(n, dtype=bool) if self.valid is None else np.asarray(self.valid, dtype=bool)

    @property
    def n(self) -> int:
        return len(self.valid)

    def records(self) -> list[dict[str, int]]:
        names = list(self.columns)
        cols = [self.columns[k].tolist() for k in names]
        return [dict(zip(names, vals)) for vals, v in zip(zip(*cols), self.valid.tolist()) if v] \
            if names else []

    def rows(self, names=None) -> list[tuple]:
        names = list(names or self.columns)
        return [tuple(r[k] for k in names) for r in self.records()]

    @classmethod
    def from_records(cls, records: list[dict], names: list[str], ordered: bool = False) -> "PlainTable":
        cols = {k: np.array([r[k] for r in records], dtype=np.uint64) for k in names}
        return cls(cols, np.ones(len(records), dtype=bool), ordered)


def _mask(w: int) -> int:
    return (1 << w) - 1


def eval_row(e, row: dict, schema: dict[str, int]) -> int:
    """Value of an expression on one row (bools as 0/1)."""
    e = lift(e)
    if isinstance(e, Col):
        return row[e.name]
    if isinstance(e, Const):
        return int(e.value)
    if isinstance(e, Not):
        return 1 - eval_row(e.inner, row, schema)
    if isinstance(e, And):
        return eval_row(e.left, row, schema) & eval_row(e.right, row, schema)
    if isinstance(e, Or):
        return eval_row(e.left, row, schema) | eval_row(e.right, row, schema)
    if isinstance(e, COMPARISONS):
        a, b = eval_row(e.left, row, schema), eval_row(e.right, row, schema)
        ops = {Eq: a == b, Ne: a != b, Lt: a < b, Le: a <= b, Gt: a > b, Ge: a >= b}
        return int(ops[type(e)])
    if isinstance(e, Arith):
        _, w = infer_type(e, schema)
        m = _mask(w)
        a, b = eval_row(e.left, row, schema) & m, eval_row(e.right, row, schema) & m
        if e.op == "add":
            return (a + b) & m
        if e.op == "sub":
            return (a - b) & m
        return (a * b) & m
    raise PlanError(f"cannot evaluate {e!r}")


def _group(rows, keys):
    groups: dict[tuple, list] = defaultdict(list)
    for r in rows:
        groups[tuple(r[k] for k in keys)].append(r)
    return groups


def _aggregate(members: list[dict], a, schema: dict[str, int]) -> int:
    if a.fn == "count":
        return len(members) & _mask(sum_width(a, None))
    vals = [r[a.input] for r in members]
    if a.fn == "sum":
        return sum(vals) & _mask(sum_width(a, schema[a.input]))
    if a.fn == "min":
        return min(vals)
    if a.fn == "max":
        return max(vals)
    raise PlanError(f"unsupported aggregation {a.fn!r}")


def _join(node: Plan, left: list[dict], right: list[dict]) -> list[dict]:
    p = node.params
    kind, keys = p["spec_kind"], p["keys"]
    rschema = node.children[1].schema
    out_names = list(node.schema)
    rindex = _group(right, keys)
    lindex = _group(left, keys)
    if kind == "semi":
        return [dict(l) for l in left if tuple(l[k] for k in keys) in rindex]
    if kind == "anti":
        return [dict(l) for l in left if tuple(l[k] for k in keys) not in rindex]

    def pair(l, r):
        row = {}
        src = r if r is not None else l
        for k in keys:
            row[k] = src[k]
        for s, d in p["copies"]:
            row[d] = l[s] if l is not None else 0
        for c in rschema:
            if c not in keys:
                row[c] = r[c] if r is not None else 0
        return row

    if p["aggs"]:
        out = []
        for key, members in rindex.items():
            for l in lindex.get(key, []):
                row = {k: v for k, v in zip(keys, key)}
                for s, d in p["copies"]:
                    row[d] = l[s]
                for a in p["aggs"]:
                    row[a.output] = _aggregate(members, a, rschema)
                out.append(row)
        return out
    out = []
    for r in right:
        matches = lindex.get(tuple(r[k] for k in keys), [])
        for l in matches:
            out.append(pair(l, r))
        if not matches and kind in ("right_outer", "full_outer"):
            out.append(pair(None, r))
    if kind in ("left_outer", "full_outer"):
        for l in left:
            if tuple(l[k] for k in keys) not in rindex:
                out.append(pair(l, None))
    return [{k: row[k] for k in out_names} for row in out]


def sort_records(records: list[dict], keys, names) -> list[dict]:
    """Order by keys (each ASC or DESC), then by the other columns ascending."""
    rest = [c for c in names if c not in {k.column for k in keys}]
    out = sorted(records, key=lambda r: tuple(r[c] for c in rest))
    for k in reversed(keys):
        out = sorted(out, key=lambda r, c=k.column: r[c], reverse=(k.order == DESC))
    return out


def execute_plain(plan: Plan, tables: dict[str, PlainTable]) -> PlainTable:
    """Evaluate a plan in the clear; returns a table holding only valid rows."""
    memo: dict[int, list[dict]] = {}
    ordered = False
    for node in plan.walk():
        op, p = node.op, node.params
        if op == "scan":
            t = tables[p["name"]]
            for c, w in p["schema"].items():
                if c not in t.columns:
                    raise PlanError(f"table {p['name']!r} lacks column {c!r}")
                if t.columns[c].size and int(t.columns[c].max()) >> w:
                    raise PlanError(f"column {c!r} of {p['name']!r} overflows {w} bits")
            memo[node.id] = [{c: r[c] for c in p["schema"]} for r in t.records()]
            continue
        rows = memo[node.children[0].id]
        cschema = node.children[0].schema
        if op == "filter":
            out = [r for r in rows if eval_row(p["pred"], r, cschema)]
        elif op == "with_column":
            out = [{**r, p["name"]: eval_row(p["expr"], r, cschema)} for r in rows]
        elif op == "project":
            out = [{c: r[c] for c in p["cols"]} for r in rows]
        elif op == "aggregate":
            out = []
            for key, members in _group(rows, p["keys"]).items():
                row = dict(zip(p["keys"], key))
                for a in p["aggs"]:
                    row[a.output] = _aggregate(members, a, cschema)
                out.append(row)
        elif op == "distinct":
            out = [dict(zip(p["keys"], key)) for key in _group(rows, p["keys"])]
        elif op == "join":
            out = _join(node, rows, memo[node.children[1].id])
        elif op == "sort":
            out = sort_records(rows, p["keys"], list(node.schema))
            ordered = True
        elif op == "limit":
            out = rows[: p["k"]]
        else:
            raise PlanError(f"unknown operator {op!r}")
        memo[node.id] = out
    return PlainTable.from_records(memo[plan.id], list(plan.schema), ordered)
