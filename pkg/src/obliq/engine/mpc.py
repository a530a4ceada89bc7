"""Lowering of plans to secure operators, and a helper that runs them end to end."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mpcore import BOOL, SeedFabric, Stream, public, with_width
from ..obsort import ASC, SortKey, table_sort
from ..relops.expr import PlanError, as_bool, evaluate
from ..relops.join import JoinSpec, join_agg
from ..relops.ops import distinct_rows, filter_table, group_aggregate, mask_shuffle_open
from ..table import SecretTable, deal_table
from ..transport.harness import RunResult, run_parties
from .plain import PlainTable
from .plan import Plan

POS = "__pos"


def _boolify(ctx, t: SecretTable, names) -> SecretTable:
    cols = dict(t.columns)
    for k in names:
        if cols[k].enc != BOOL:
            cols[k] = as_bool(ctx, cols[k])
    return SecretTable(cols, t.valid, t.name, t.unique_keys)


def _conform(t: SecretTable, schema: dict[str, int]) -> SecretTable:
    """Order columns as the plan does and narrow boolean widths to the plan widths."""
    cols = {}
    for k, w in schema.items():
        v = t[k]
        if v.width != w:
            if v.enc != BOOL or v.width < w:
                raise PlanError(f"column {k!r}: lowered width {v.width} does not match plan width {w}")
            v = with_width(v, w)
        cols[k] = v
    return SecretTable(cols, t.valid, t.name, t.unique_keys)


def lower(ctx, plan: Plan, inputs: dict[str, SecretTable], trim: bool | None = None) -> SecretTable:
    """Secret result of everything below a final sort/limit. Output size depends on public sizes only."""
    memo: dict[int, SecretTable] = {}
    for node in plan.walk():
        op, p = node.op, node.params
        if op in ("sort", "limit"):
            memo[node.id] = memo[node.children[0].id]
            continue
        if op == "scan":
            t = inputs[p["name"]]
            for c, w in p["schema"].items():
                if c not in t:
                    raise PlanError(f"input {p['name']!r} lacks column {c!r}")
                if t[c].width != w:
                    raise PlanError(f"input column {c!r} has width {t[c].width}, plan says {w}")
            out = t.select(list(p["schema"]))
        else:
            t = memo[node.children[0].id]
            if op == "filter":
                out = filter_table(ctx, t, p["pred"])
            elif op == "with_column":
                with ctx.phase("with_column"):
                    out = t.with_column(p["name"], evaluate(ctx, t, p["expr"]))
            elif op == "project":
                out = t.select(p["cols"])
            elif op == "aggregate":
                t = _boolify(ctx, t, p["keys"])
                out = group_aggregate(ctx, t, p["keys"], p["aggs"])
            elif op == "distinct":
                t = _boolify(ctx, t, p["keys"])
                out = distinct_rows(ctx, t, p["keys"]).select(p["keys"])
            elif op == "join":
                right = memo[node.children[1].id]
                spec = JoinSpec(p["spec_kind"], list(p["keys"]), list(p["copies"]), list(p["aggs"]),
                                unique_keys_both=p.get("unique_keys_both", False), trim=trim)
                out = join_agg(ctx, t, right, spec)
            else:
                raise PlanError(f"unknown operator {op!r}")
        memo[node.id] = _conform(out, node.schema)
    return memo[plan.id]


def _final_ops(plan: Plan):
    limit, sort = None, None
    node = plan
    if node.op == "limit":
        limit = node.params["k"]
        node = node.children[0]
    if node.op == "sort":
        sort = node.params["keys"]
    return sort, limit


def execute_mpc(ctx, plan: Plan, inputs: dict[str, SecretTable], trim: bool | None = None) -> PlainTable:
    """Run the plan and open its result to every party.

    A final sort runs obliviously on the sort keys followed by the other
    columns; the sorted position travels with each row through the opening
    shuffle, and a final limit is applied in the clear.
    """
    t = lower(ctx, plan, inputs, trim)
    sort, limit = _final_ops(plan)
    names = list(plan.schema)
    if sort is not None:
        with ctx.phase("sort"):
            full = list(sort) + [SortKey(c, ASC) for c in names if c not in {k.column for k in sort}]
            t = _boolify(ctx, t, [k.column for k in full])
            t = table_sort(ctx, t, full)
            width = max(1, (t.n - 1).bit_length())
            t = t.with_column(POS, public(t.party, np.arange(t.n), BOOL, width))
    opened = mask_shuffle_open(ctx, t)
    if sort is not None:
        order = np.argsort(opened[POS], kind="stable")
        opened = {k: v[order] for k, v in opened.items() if k != POS}
    if limit is not None:
        opened = {k: v[:limit] for k, v in opened.items()}
    return PlainTable({k: opened[k] for k in names}, ordered=sort is not None)


def plain_to_inputs(tables: dict[str, PlainTable], plan: Plan, rng: Stream) -> list[dict[str, SecretTable]]:
    """Deal every scanned table (boolean encoding at the plan widths) into three party views."""
    views: list[dict[str, SecretTable]] = [{}, {}, {}]
    for name, node in sorted(plan.scans().items()):
        t = tables[name]
        schema = {c: (BOOL, w) for c, w in node.params["schema"].items()}
        cols = {c: t.columns[c] for c in schema}
        dealt = deal_table(cols, schema, t.valid, rng, name)
        for p in range(3):
            views[p][name] = dealt[p]
    return views


@dataclass
class QueryRun:
    result: PlainTable
    run: RunResult


def run_query(plan: Plan, tables: dict[str, PlainTable], seed: int = 0,
              trim: bool | None = None, timeout: float | None = None) -> QueryRun:
    """Deal inputs, execute all three parties in-process and return the opened result."""
    fabric = SeedFabric.from_seed(seed)
    inputs = plain_to_inputs(tables, plan, Stream(fabric.dealer, 0))
    kwargs = {} if timeout is None else {"timeout": timeout}
    res = run_parties(lambda ctx, inp: execute_mpc(ctx, plan, inp, trim), inputs, fabric, **kwargs)
    first = res.outputs[0]
    for other in res.outputs[1:]:
        for k in first.columns:
            if not np.array_equal(first.columns[k], other.columns[k]):
                raise RuntimeError("parties disagree on the opened result")
    return QueryRun(first, res)
