"""Secret tables: named secret columns plus a validity bit column."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .mpcore import BOOL, SecretVector, concat_rows, deal, public_const, reconstruct, zeros
from .mpcore.prg import Stream

VALID = "__valid__"


@dataclass
class SecretTable:
    """One party's view of a table. Schema (names, encodings, widths, n) is public."""

    columns: dict[str, SecretVector]
    valid: SecretVector
    name: str = ""
    unique_keys: tuple | None = field(default=None)

    def __post_init__(self):
        if self.valid.enc != BOOL or self.valid.width != 1:
            raise ValueError("validity column must be a width-1 boolean vector")
        for k, v in self.columns.items():
            if v.n != self.valid.n:
                raise ValueError(f"column {k!r} has length {v.n}, table has {self.valid.n}")

    @property
    def n(self) -> int:
        return self.valid.n

    @property
    def party(self) -> int:
        return self.valid.party

    def __len__(self) -> int:
        return self.n

    def schema(self) -> dict[str, tuple[str, int]]:
        return {k: (v.enc, v.width) for k, v in self.columns.items()}

    def __getitem__(self, name: str) -> SecretVector:
        try:
            return self.columns[name]
        except KeyError:
            raise KeyError(f"table {self.name!r} has no column {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.columns

    def vectors(self) -> list[SecretVector]:
        """Columns followed by the validity column (a stable order for batching)."""
        return [*self.columns.values(), self.valid]

    def replace_vectors(self, vecs: Iterable[SecretVector]) -> "SecretTable":
        vecs = list(vecs)
        cols = dict(zip(self.columns, vecs[:-1]))
        return SecretTable(cols, vecs[-1], self.name, self.unique_keys)

    def map_rows(self, fn: Callable[[SecretVector], SecretVector]) -> "SecretTable":
        return self.replace_vectors(fn(v) for v in self.vectors())

    def take(self, idx) -> "SecretTable":
        return self.map_rows(lambda v: v.take(idx))

    def rows(self, lo: int, hi: int) -> "SecretTable":
        return self.map_rows(lambda v: v.rows(lo, hi))

    def reversed(self) -> "SecretTable":
        return self.map_rows(lambda v: v.reversed())

    def with_column(self, name: str, vec: SecretVector) -> "SecretTable":
        cols = dict(self.columns)
        cols[name] = vec
        return SecretTable(cols, self.valid, self.name, self.unique_keys)

    def with_valid(self, valid: SecretVector) -> "SecretTable":
        return SecretTable(dict(self.columns), valid, self.name, self.unique_keys)

    def select(self, names: Iterable[str]) -> "SecretTable":
        return SecretTable({k: self[k] for k in names}, self.valid, self.name, None)

    def drop(self, names: Iterable[str]) -> "SecretTable":
        gone = set(names)
        return SecretTable({k: v for k, v in self.columns.items() if k not in gone}, self.valid, self.name, None)

    def renamed(self, mapping: dict[str, str]) -> "SecretTable":
        return SecretTable({mapping.get(k, k): v for k, v in self.columns.items()}, self.valid, self.name, None)

    def pad_rows(self, total: int, fill: dict[str, int] | None = None) -> "SecretTable":
        """Append invalid rows up to `total`; `fill` gives public per-column values."""
        extra = total - self.n
        if extra < 0:
            raise ValueError("table already larger than pad target")
        if extra == 0:
            return self
        fill = fill or {}
        p = self.party
        cols = {}
        for k, v in self.columns.items():
            pad = public_const(p, extra, fill[k], v.enc, v.width) if k in fill else zeros(p, extra, v.enc, v.width)
            cols[k] = concat_rows([v, pad])
        valid = concat_rows([self.valid, zeros(p, extra, BOOL, 1)])
        return SecretTable(cols, valid, self.name, self.unique_keys)


def concat_tables(a: SecretTable, b: SecretTable) -> SecretTable:
    if list(a.columns) != list(b.columns):
        raise ValueError("row concatenation needs identical column lists")
    cols = {k: concat_rows([a[k], b[k]]) for k in a.columns}
    return SecretTable(cols, concat_rows([a.valid, b.valid]), a.name)


def deal_table(columns: dict[str, np.ndarray], schema: dict[str, tuple[str, int]],
               valid: np.ndarray | None, rng: Stream, name: str = "") -> list[SecretTable]:
    """Dealer-side sharing of a clear table into the three party views."""
    n = len(next(iter(columns.values()))) if columns else len(valid)
    views = {k: deal(np.asarray(columns[k]), enc, w, rng) for k, (enc, w) in schema.items()}
    v = np.ones(n, dtype=np.uint64) if valid is None else np.asarray(valid, dtype=np.uint64)
    vviews = deal(v, BOOL, 1, rng)
    return [SecretTable({k: views[k][p] for k in schema}, vviews[p], name) for p in range(3)]


def reconstruct_table(views: list[SecretTable]) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Clear-side reconstruction of all rows (valid and invalid)."""
    cols = {k: reconstruct([t[k] for t in views]) for k in views[0].columns}
    return cols, np.asarray(reconstruct([t.valid for t in views])).astype(bool)
