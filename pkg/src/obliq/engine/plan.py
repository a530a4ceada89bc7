"""Fluent dataflow plans and their validation.

A plan is a DAG of nodes built from `scan`. Every node knows its output
schema (column -> width), the key sets on which its valid rows are unique,
and the base tables each column derives from.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..obsort import ASC, DESC, SortKey
from ..relops.aggnet import AggSpec, sum_width
from ..relops.expr import ExprLike, PlanError, infer_type, lift
from ..relops.join import JOIN_TYPES

_ids = itertools.count()


def _norm_aggs(specs) -> list[AggSpec]:
    out = []
    for s in specs:
        if isinstance(s, AggSpec):
            out.append(s)
        else:
            out.append(AggSpec(*s))
    return out


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


@dataclass(eq=False)
class Plan:
    """A node of the dataflow graph; use the combinators to build new nodes."""

    op: str
    children: tuple = ()
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.id = next(_ids)
        self._schema: dict[str, int] | None = None
        self._validate_node()

    # ------------------------------------------------------------ metadata

    @property
    def schema(self) -> dict[str, int]:
        if self._schema is None:
            self._schema = self._compute_schema()
        return self._schema

    @property
    def columns(self) -> list[str]:
        return list(self.schema)

    def unique_sets(self) -> list[frozenset]:
        op, p = self.op, self.params
        if op == "scan":
            return [frozenset(u) for u in p.get("unique", [])]
        if op in ("aggregate", "distinct"):
            return [frozenset(p["keys"])]
        if op in ("filter", "with_column", "sort", "limit"):
            return self.children[0].unique_sets()
        if op == "project":
            keep = set(p["cols"])
            return [u for u in self.children[0].unique_sets() if u <= keep]
        if op == "join":
            kind = p["spec_kind"]
            if p["aggs"]:
                return [frozenset(p["keys"])]
            if kind in ("inner", "right_outer"):
                return self.children[1].unique_sets()
            if kind in ("semi", "anti"):
                return self.children[0].unique_sets()
            return []
        return []

    def attribute_classes(self, uf: "_UnionFind | None" = None, memo: dict | None = None) -> dict[str, tuple]:
        """Column -> attribute token; join keys unify the tokens of both sides."""
        uf = uf if uf is not None else _UnionFind()
        memo = memo if memo is not None else {}
        if self.id in memo:
            return memo[self.id]
        op, p = self.op, self.params
        if op == "scan":
            out = {c: (self.id, c) for c in p["schema"]}
        elif op == "join":
            lc = self.children[0].attribute_classes(uf, memo)
            rc = self.children[1].attribute_classes(uf, memo)
            for k in p["keys"]:
                uf.union(lc[k], rc[k])
            if p["spec_kind"] in ("semi", "anti"):
                out = dict(lc)
            else:
                out = {k: lc[k] for k in p["keys"]}
                for src, dst in p["copies"]:
                    out[dst] = lc[src]
                if p["aggs"]:
                    for a in p["aggs"]:
                        out[a.output] = (self.id, a.output)
                else:
                    for c in self.children[1].schema:
                        if c not in p["keys"]:
                            out[c] = rc[c]
        else:
            child = self.children[0].attribute_classes(uf, memo)
            if op == "with_column":
                out = dict(child)
                out[p["name"]] = (self.id, p["name"])
            elif op == "project":
                out = {c: child[c] for c in p["cols"]}
            elif op == "aggregate":
                out = {k: child[k] for k in p["keys"]}
                for a in p["aggs"]:
                    out[a.output] = (self.id, a.output)
            elif op == "distinct":
                out = {k: child[k] for k in p["keys"]}
            else:
                out = dict(child)
        memo[self.id] = out
        return out

    def check_acyclic(self) -> None:
        """Reject plans whose join hypergraph (tables over unified join attributes) is cyclic."""
        uf = _UnionFind()
        self.attribute_classes(uf)
        edges = []
        for node in self.walk():
            if node.op == "scan":
                edges.append({uf.find((node.id, c)) for c in node.params["schema"]})
        # GYO reduction: drop attributes private to one edge, then edges covered by another
        while True:
            changed = False
            counts: dict = {}
            for e in edges:
                for v in e:
                    counts[v] = counts.get(v, 0) + 1
            for e in edges:
                private = {v for v in e if counts[v] == 1}
                if private:
                    e -= private
                    changed = True
            kept = []
            for i, e in enumerate(edges):
                covered = any(j != i and e <= f and (e != f or j < i) for j, f in enumerate(edges))
                if covered:
                    changed = True
                else:
                    kept.append(e)
            edges = kept
            if not changed:
                break
        if len(edges) > 1:
            raise PlanError("cyclic join pattern: the equality joins form a cycle between tables")

    def walk(self) -> list["Plan"]:
        """Nodes in dependency order (children first), each once."""
        order, seen = [], set()

        def visit(node):
            if node.id in seen:
                return
            seen.add(node.id)
            for c in node.children:
                visit(c)
            order.append(node)
        visit(self)
        return order

    def scans(self) -> dict[str, "Plan"]:
        out = {}
        for node in self.walk():
            if node.op == "scan":
                name = node.params["name"]
                if name in out and out[name].params["schema"] != node.params["schema"]:
                    raise PlanError(f"table {name!r} scanned with two different schemas")
                out[name] = node
        return out

    # ------------------------------------------------------------ validation

    def _compute_schema(self) -> dict[str, int]:
        op, p = self.op, self.params
        if op == "scan":
            return dict(p["schema"])
        child = self.children[0].schema
        if op in ("filter", "sort", "limit"):
            return dict(child)
        if op == "with_column":
            out = dict(child)
            out[p["name"]] = p["width"]
            return out
        if op == "project":
            return {c: child[c] for c in p["cols"]}
        if op == "aggregate":
            out = {k: child[k] for k in p["keys"]}
            for a in p["aggs"]:
                out[a.output] = _agg_out_width(a, child)
            return out
        if op == "distinct":
            return {k: child[k] for k in p["keys"]}
        if op == "join":
            left, right = self.children[0].schema, self.children[1].schema
            if p["spec_kind"] in ("semi", "anti"):
                return dict(left)
            out = {k: max(left[k], right[k]) for k in p["keys"]}
            for src, dst in p["copies"]:
                out[dst] = left[src]
            if p["aggs"]:
                for a in p["aggs"]:
                    out[a.output] = _agg_out_width(a, right)
                return out
            for c, w in right.items():
                if c not in p["keys"]:
                    out[c] = w
            return out
        raise PlanError(f"unknown operator {op!r}")

    def _validate_node(self) -> None:
        op, p = self.op, self.params
        for c in self.children:
            if c.op == "limit":
                raise PlanError("limit is only allowed as the final operator")
            if c.op == "sort" and op != "limit":
                raise PlanError("sort is only allowed at the end of a plan (optionally before limit)")
        if op == "scan":
            if not p["schema"]:
                raise PlanError("a table needs at least one column")
            for u in p.get("unique", []):
                for c in u:
                    if c not in p["schema"]:
                        raise PlanError(f"unique key {c!r} is not a column")
        elif op == "filter":
            kind, _ = infer_type(p["pred"], self.children[0].schema)
            if kind != "bool":
                raise PlanError("filter needs a predicate")
        elif op == "with_column":
            kind, w = infer_type(p["expr"], self.children[0].schema)
            if p["name"] in self.children[0].schema:
                raise PlanError(f"column {p['name']!r} already exists")
            p["width"] = 1 if kind == "bool" else w
        elif op == "project":
            for c in p["cols"]:
                if c not in self.children[0].schema:
                    raise PlanError(f"unknown column {c!r}")
        elif op in ("aggregate", "distinct"):
            schema = self.children[0].schema
            if not p["keys"]:
                raise PlanError(f"{op} needs group keys")
            for k in p["keys"]:
                if k not in schema:
                    raise PlanError(f"unknown column {k!r}")
            for a in p.get("aggs", []):
                if a.output in p["keys"]:
                    raise PlanError(f"aggregation output {a.output!r} aliases a group key")
                if a.fn == "copy" or callable(a.fn):
                    raise PlanError("group-by aggregations must be sum, count, min or max")
                if a.fn != "count" and a.input not in schema:
                    raise PlanError(f"unknown column {a.input!r}")
            outs = [a.output for a in p.get("aggs", [])]
            if len(set(outs)) != len(outs):
                raise PlanError("duplicate aggregation output names")
        elif op == "sort":
            for k in p["keys"]:
                if k.column not in self.children[0].schema:
                    raise PlanError(f"unknown column {k.column!r}")
        elif op == "limit":
            if p["k"] < 0:
                raise PlanError("limit must be non-negative")
        elif op == "join":
            self._validate_join()
        if op == "join":
            self.check_acyclic()
        self.schema  # noqa: B018 - forces schema checks

    def _validate_join(self) -> None:
        p = self.params
        left, right = self.children
        kind = p["spec_kind"]
        if kind not in JOIN_TYPES:
            raise PlanError(f"unknown join type {kind!r}")
        if not p["keys"]:
            raise PlanError("a join needs equality keys")
        for k in p["keys"]:
            if k not in left.schema or k not in right.schema:
                raise PlanError(f"join key {k!r} missing from an input")
        for src, dst in p["copies"]:
            if src not in left.schema:
                raise PlanError(f"unknown column {src!r} in the left input")
            if dst in right.schema or dst in p["keys"]:
                raise PlanError(f"copy output {dst!r} collides with a right column")
        for a in p["aggs"]:
            if a.fn == "count":
                pass
            elif a.input not in right.schema:
                raise PlanError(f"unknown column {a.input!r} in the right input")
            if a.output in p["keys"]:
                raise PlanError(f"aggregation output {a.output!r} aliases a join key")
            if a.fn == "copy" or callable(a.fn):
                raise PlanError("fused join aggregations must be sum, count, min or max")
        if p["aggs"] and kind != "inner":
            raise PlanError("aggregations fused into a join need an inner join")
        if kind in ("semi", "anti") and (p["copies"] or p["aggs"]):
            raise PlanError("semi and anti joins carry no copied columns")
        if kind not in ("semi", "anti"):
            keys = set(p["keys"])
            if not any(u <= keys for u in left.unique_sets()):
                raise PlanError("the left input of this join must have unique join keys; "
                                "aggregate it first (many-to-many joins need a decomposable aggregation)")

    # ------------------------------------------------------------ combinators

    def filter(self, pred: ExprLike) -> "Plan":
        return Plan("filter", (self,), {"pred": lift(pred)})

    def with_column(self, name: str, expr: ExprLike) -> "Plan":
        return Plan("with_column", (self,), {"name": name, "expr": lift(expr)})

    def project(self, cols: Sequence[str]) -> "Plan":
        return Plan("project", (self,), {"cols": list(cols)})

    def aggregate(self, keys: Iterable[str], aggs: Sequence) -> "Plan":
        return Plan("aggregate", (self,), {"keys": list(keys), "aggs": _norm_aggs(aggs)})

    def distinct(self, keys: Iterable[str]) -> "Plan":
        return Plan("distinct", (self,), {"keys": list(keys)})

    def sort(self, keys: Sequence) -> "Plan":
        ks = [k if isinstance(k, SortKey) else (SortKey(k) if isinstance(k, str) else SortKey(*k)) for k in keys]
        return Plan("sort", (self,), {"keys": ks})

    def limit(self, k: int) -> "Plan":
        return Plan("limit", (self,), {"k": int(k)})

    def _join(self, kind: str, other: "Plan", keys, copies=(), aggs=(), unique_keys_both=False) -> "Plan":
        cps = []
        for c in copies:
            cps.append((c, c) if isinstance(c, str) else (c[0], c[1]))
        return Plan("join", (self, other), {"spec_kind": kind, "keys": list(keys), "copies": cps,
                                            "aggs": _norm_aggs(aggs),
                                            "unique_keys_both": unique_keys_both})

    def inner_join(self, other, keys, copies=(), aggs=(), unique_keys_both=False):
        return self._join("inner", other, keys, copies, aggs, unique_keys_both)

    def left_outer_join(self, other, keys, copies=()):
        return self._join("left_outer", other, keys, copies)

    def right_outer_join(self, other, keys, copies=()):
        return self._join("right_outer", other, keys, copies)

    def full_outer_join(self, other, keys, copies=()):
        return self._join("full_outer", other, keys, copies)

    def semi_join(self, other, keys):
        return self._join("semi", other, keys)

    def anti_join(self, other, keys):
        return self._join("anti", other, keys)

    def __repr__(self) -> str:
        return f"Plan({self.op}#{self.id}, cols={self.columns})"


def _agg_out_width(a: AggSpec, schema: dict[str, int]) -> int:
    if a.fn in ("sum", "count"):
        return sum_width(a, schema.get(a.input) if a.input else None)
    return schema[a.input]


def scan(name: str, schema: dict[str, int], unique: Sequence[Sequence[str]] = ()) -> Plan:
    """A base table: column -> bit width; `unique` lists key sets declared unique."""
    return Plan("scan", (), {"name": name, "schema": dict(schema), "unique": [list(u) for u in unique]})


def agg(input: str | None, output: str, fn: str, width: int | None = None) -> AggSpec:
    return AggSpec(input, output, fn, width=width)


__all__ = ["Plan", "scan", "agg", "AggSpec", "SortKey", "ASC", "DESC", "PlanError"]
