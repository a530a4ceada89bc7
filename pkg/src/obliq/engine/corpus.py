"""Named benchmark queries with random input generators.

Every generator returns clear tables whose valid rows satisfy the uniqueness
declarations of the plan; invalid dummy rows carry arbitrary values.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..obsort import DESC
from ..relops.expr import Eq, Gt, Lt, Mul
from .plain import PlainTable
from .plan import Plan, agg, scan

KEY_BITS = 4  # key domain of 16 values
KEY_DOMAIN = 1 << KEY_BITS


@dataclass(frozen=True)
class Query:
    name: str
    build: Callable[[], Plan]
    generate: Callable[[np.random.Generator, int], dict[str, PlainTable]]
    description: str = ""


def _valid(rng, n, p=0.85):
    return rng.random(n) < p


def _uniform(rng, n, bits):
    return rng.integers(0, 1 << bits, n, dtype=np.uint64)


def _unique_keyed(rng, n, bits=KEY_BITS):
    """Keys unique among valid rows; extra rows become dummies with repeated keys."""
    k = min(n, 1 << bits)
    keys = rng.permutation(1 << bits)[:k]
    keys = np.concatenate([keys, rng.integers(0, 1 << bits, n - k)]).astype(np.uint64)
    valid = np.zeros(n, dtype=bool)
    valid[:k] = rng.random(k) < 0.9
    order = rng.permutation(n)
    return keys[order], valid[order]


def _size(rng, n):
    return int(rng.integers(1, n + 1))


# ---------------------------------------------------------------- q3

Q3_SEGMENT = 1
Q3_DATE = 128


def build_q3() -> Plan:
    """Three-table revenue query with duplicates on every join key: pre-aggregate,
    join, multiply partial aggregates, post-aggregate, order, keep the top 10."""
    C = scan("C", {"CustKey": KEY_BITS, "MktSegment": 2})
    O = scan("O", {"CustKey": KEY_BITS, "OrdKey": KEY_BITS, "OrdDate": 8, "Priority": 3})
    LI = scan("LI", {"OrdKey": KEY_BITS, "Revenue": 16, "ShipDate": 8})
    C = C.filter(Eq("MktSegment", Q3_SEGMENT))
    O = O.filter(Lt("OrdDate", Q3_DATE))
    LI = LI.filter(Gt("ShipDate", Q3_DATE))
    CO = C.aggregate(["CustKey"], [agg(None, "M", "count")]).inner_join(O, ["CustKey"], ["M"])
    COL = LI.aggregate(["OrdKey"], [agg("Revenue", "RevPre", "sum")]).inner_join(CO, ["OrdKey"], ["RevPre"])
    COL = COL.with_column("TotalR", Mul("RevPre", "M"))
    res = COL.aggregate(["OrdKey", "OrdDate", "Priority"], [agg("TotalR", "TotalRevenue", "sum")])
    res = res.project(["OrdKey", "TotalRevenue", "OrdDate", "Priority"])
    return res.sort([("TotalRevenue", DESC), "OrdDate"]).limit(10)


def gen_q3(rng, n):
    nc, no, nl = _size(rng, n), _size(rng, n), _size(rng, n)
    return {
        "C": PlainTable({"CustKey": _uniform(rng, nc, KEY_BITS), "MktSegment": _uniform(rng, nc, 2)},
                        _valid(rng, nc)),
        "O": PlainTable({"CustKey": _uniform(rng, no, KEY_BITS), "OrdKey": _uniform(rng, no, KEY_BITS),
                         "OrdDate": _uniform(rng, no, 8), "Priority": _uniform(rng, no, 3)}, _valid(rng, no)),
        "LI": PlainTable({"OrdKey": _uniform(rng, nl, KEY_BITS), "Revenue": _uniform(rng, nl, 16),
                          "ShipDate": _uniform(rng, nl, 8)}, _valid(rng, nl)),
    }


def q3_nested_loop(tables: dict[str, PlainTable]) -> list[tuple]:
    """Direct triple-loop evaluation of the q3 result (before ordering and limit)."""
    C = [r for r in tables["C"].records() if r["MktSegment"] == Q3_SEGMENT]
    O = [r for r in tables["O"].records() if r["OrdDate"] < Q3_DATE]
    LI = [r for r in tables["LI"].records() if r["ShipDate"] > Q3_DATE]
    totals: dict[tuple, int] = {}
    for c in C:
        for o in O:
            if o["CustKey"] != c["CustKey"]:
                continue
            for li in LI:
                if li["OrdKey"] == o["OrdKey"]:
                    key = (o["OrdKey"], o["OrdDate"], o["Priority"])
                    totals[key] = (totals.get(key, 0) + li["Revenue"]) & 0xFFFFFFFF
    return [(k[0], v, k[1], k[2]) for k, v in totals.items()]


# ---------------------------------------------------------------- comorbidity

def build_comorbidity() -> Plan:
    """Most frequent diagnoses within a patient cohort."""
    D = scan("diagnosis", {"pid": 6, "diag": KEY_BITS})
    C = scan("cohort", {"pid": 6})
    res = D.semi_join(C, ["pid"]).aggregate(["diag"], [agg(None, "cnt", "count")])
    return res.sort([("cnt", DESC)]).limit(10)


def gen_comorbidity(rng, n):
    nd, nc = _size(rng, n), _size(rng, max(1, n // 2))
    return {
        "diagnosis": PlainTable({"pid": _uniform(rng, nd, 6), "diag": _uniform(rng, nd, KEY_BITS)},
                                _valid(rng, nd)),
        "cohort": PlainTable({"pid": _uniform(rng, nc, 6)}, _valid(rng, nc)),
    }


# ---------------------------------------------------------------- q4-style semi join

def build_q4() -> Plan:
    """Orders in a date window with at least one late line item, counted per priority."""
    O = scan("O", {"OrdKey": KEY_BITS, "OrdDate": 8, "Priority": 3})
    LI = scan("LI", {"OrdKey": KEY_BITS, "CommitDate": 8, "ReceiptDate": 8})
    late = LI.filter(Lt("CommitDate", "ReceiptDate"))
    O = O.filter(Gt("OrdDate", 63) & Lt("OrdDate", 192))
    return O.semi_join(late, ["OrdKey"]).aggregate(["Priority"], [agg(None, "order_count", "count")])


def gen_q4(rng, n):
    no, nl = _size(rng, n), _size(rng, n)
    return {
        "O": PlainTable({"OrdKey": _uniform(rng, no, KEY_BITS), "OrdDate": _uniform(rng, no, 8),
                         "Priority": _uniform(rng, no, 3)}, _valid(rng, no)),
        "LI": PlainTable({"OrdKey": _uniform(rng, nl, KEY_BITS), "CommitDate": _uniform(rng, nl, 8),
                          "ReceiptDate": _uniform(rng, nl, 8)}, _valid(rng, nl)),
    }


# ---------------------------------------------------------------- anti join and distinct

def build_anti() -> Plan:
    """Customers (with their balance) that placed no order."""
    C = scan("C", {"CustKey": KEY_BITS, "Balance": 12})
    O = scan("O", {"CustKey": KEY_BITS, "OrdKey": KEY_BITS})
    return C.anti_join(O, ["CustKey"]).project(["CustKey", "Balance"])


def gen_anti(rng, n):
    nc, no = _size(rng, n), _size(rng, n)
    return {
        "C": PlainTable({"CustKey": _uniform(rng, nc, KEY_BITS), "Balance": _uniform(rng, nc, 12)},
                        _valid(rng, nc)),
        "O": PlainTable({"CustKey": _uniform(rng, no, KEY_BITS), "OrdKey": _uniform(rng, no, KEY_BITS)},
                        _valid(rng, no)),
    }


def build_distinct() -> Plan:
    """Distinct (pid, diag) pairs among recent records."""
    D = scan("diagnosis", {"pid": 3, "diag": 3, "time": 8})
    return D.filter(Gt("time", 100)).distinct(["pid", "diag"])


def gen_distinct(rng, n):
    nd = _size(rng, n)
    return {"diagnosis": PlainTable({"pid": _uniform(rng, nd, 3), "diag": _uniform(rng, nd, 3),
                                     "time": _uniform(rng, nd, 8)}, _valid(rng, nd))}


# ---------------------------------------------------------------- single joins

def build_join(kind: str) -> Plan:
    L = scan("L", {"k": KEY_BITS, "a": 8}, unique=[["k"]])
    R = scan("R", {"k": KEY_BITS, "b": 8})
    if kind in ("semi", "anti"):
        return L._join(kind, R, ["k"])
    return L._join(kind, R, ["k"], copies=["a"])


def gen_join(rng, n):
    nl, nr = _size(rng, n), _size(rng, n)
    lk, lv = _unique_keyed(rng, nl)
    return {
        "L": PlainTable({"k": lk, "a": _uniform(rng, nl, 8)}, lv),
        "R": PlainTable({"k": _uniform(rng, nr, KEY_BITS), "b": _uniform(rng, nr, 8)}, _valid(rng, nr)),
    }


def gen_join_dup(rng, n):
    """Duplicates on both sides (semi and anti joins accept them)."""
    nl, nr = _size(rng, n), _size(rng, n)
    return {
        "L": PlainTable({"k": _uniform(rng, nl, KEY_BITS), "a": _uniform(rng, nl, 8)}, _valid(rng, nl)),
        "R": PlainTable({"k": _uniform(rng, nr, KEY_BITS), "b": _uniform(rng, nr, 8)}, _valid(rng, nr)),
    }


def build_join_agg() -> Plan:
    """Inner join with per-key aggregation of the right side fused in."""
    L = scan("L", {"k": KEY_BITS, "a": 8}, unique=[["k"]])
    R = scan("R", {"k": KEY_BITS, "b": 8})
    return L.inner_join(R, ["k"], ["a"], aggs=[agg("b", "sum_b", "sum"), agg(None, "cnt", "count"),
                                                agg("b", "min_b", "min"), agg("b", "max_b", "max")])


QUERIES: dict[str, Query] = {
    "q3": Query("q3", build_q3, gen_q3, "three-table revenue with pre/post aggregation"),
    "comorbidity": Query("comorbidity", build_comorbidity, gen_comorbidity, "semi join, count, top 10"),
    "q4": Query("q4", build_q4, gen_q4, "semi join with filters and a group count"),
    "anti": Query("anti", build_anti, gen_anti, "customers without orders"),
    "distinct": Query("distinct", build_distinct, gen_distinct, "distinct pairs after a filter"),
    "join_agg": Query("join_agg", build_join_agg, gen_join, "inner join with fused aggregations"),
}
for _kind in ("inner", "left_outer", "right_outer", "full_outer"):
    QUERIES[_kind] = Query(_kind, (lambda k=_kind: build_join(k)), gen_join, f"{_kind} join")
for _kind in ("semi", "anti"):
    QUERIES[f"{_kind}_join"] = Query(f"{_kind}_join", (lambda k=_kind: build_join(k)), gen_join_dup,
                                     f"{_kind} join")


def get_query(name: str) -> Query:
    try:
        return QUERIES[name]
    except KeyError:
        raise KeyError(f"unknown query {name!r}; choose from {', '.join(sorted(QUERIES))}") from None
