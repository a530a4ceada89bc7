"""CSV ingestion and per-party share files.

Share file layout (little endian):
    magic b"ORQS" | version u8 | party u8 | header length u32 | JSON header |
    for each column then the validity column: first component, second component
Arithmetic components use ceil(width/8) bytes per value; boolean components
are packed bit matrices, LSB first.
"""
from __future__ import annotations

import csv
import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from ..mpcore import BOOL, SecretVector, Stream
from ..table import SecretTable, deal_table
from ..transport.channel import decode_parts, encode_parts
from .plain import PlainTable

MAGIC = b"ORQS"
VERSION = 1
_PREFIX = struct.Struct("<4sBBI")


class IngestError(ValueError):
    """Malformed CSV or share file."""


def parse_schema(text: str) -> dict[str, int]:
    """'a:8,b:16' -> {'a': 8, 'b': 16}."""
    schema = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        name, _, w = item.partition(":")
        if not w.isdigit() or int(w) < 1:
            raise IngestError(f"bad schema entry {item!r}; expected name:width")
        schema[name.strip()] = int(w)
    if not schema:
        raise IngestError("empty schema")
    return schema


def ingest_csv(path: str | Path, schema: dict[str, int], pad_to: int | None = None) -> PlainTable:
    """Read unsigned integer columns; optionally pad with dummy rows (V = 0)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise IngestError(f"{path}: empty file") from None
        missing = [c for c in schema if c not in header]
        if missing:
            raise IngestError(f"{path}: header lacks columns {missing}")
        idx = {c: header.index(c) for c in schema}
        cols: dict[str, list[int]] = {c: [] for c in schema}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise IngestError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            for c, w in schema.items():
                cell = row[idx[c]].strip()
                if not cell.isdigit():
                    raise IngestError(f"{path}:{lineno}: column {c!r}: {cell!r} is not an unsigned integer")
                v = int(cell)
                if v >> w:
                    raise IngestError(f"{path}:{lineno}: column {c!r}: {v} does not fit in {w} bits")
                cols[c].append(v)
    n = len(next(iter(cols.values())))
    valid = np.ones(n, dtype=bool)
    if pad_to is not None:
        if pad_to < n:
            raise IngestError(f"{path}: {n} rows exceed pad_to={pad_to}")
        extra = pad_to - n
        for c in cols:
            cols[c].extend([0] * extra)
        valid = np.concatenate([valid, np.zeros(extra, dtype=bool)])
    return PlainTable({c: np.array(v, dtype=np.uint64) for c, v in cols.items()}, valid)


def write_csv(path: str | Path, table: PlainTable) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(table.columns))
        w.writerows(table.rows())


def schema_hash(schema: dict[str, tuple[str, int]]) -> str:
    canon = json.dumps([[k, e, w] for k, (e, w) in schema.items()], separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _vec_specs(enc: str, n: int, w: int):
    return [(enc, n, w), (enc, n, w)]


def encode_share_file(view: SecretTable, name: str) -> bytes:
    schema = view.schema()
    header = {"name": name, "n": view.n, "columns": [[k, e, w] for k, (e, w) in schema.items()],
              "schema_hash": schema_hash(schema)}
    hbytes = json.dumps(header, sort_keys=True).encode()
    parts = []
    for v in view.vectors():
        parts.append((v.first, v.width))
        parts.append((v.second, v.width))
    return _PREFIX.pack(MAGIC, VERSION, view.party, len(hbytes)) + hbytes + encode_parts(parts)


def decode_share_file(data: bytes) -> tuple[str, SecretTable]:
    if len(data) < _PREFIX.size:
        raise IngestError("share file truncated")
    magic, version, party, hlen = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise IngestError("not a share file")
    if version != VERSION:
        raise IngestError(f"unsupported share file version {version}")
    off = _PREFIX.size
    header = json.loads(data[off:off + hlen])
    off += hlen
    schema = {k: (e, w) for k, e, w in header["columns"]}
    if schema_hash(schema) != header["schema_hash"]:
        raise IngestError("share file schema hash mismatch")
    n = header["n"]
    specs = []
    for _, (e, w) in schema.items():
        specs += _vec_specs(e, n, w)
    specs += _vec_specs(BOOL, n, 1)
    try:
        arrays = decode_parts(data[off:], specs)
    except Exception as exc:  # noqa: BLE001
        raise IngestError(f"share payload malformed: {exc}") from None
    vecs = [SecretVector(e, w, arrays[2 * i], arrays[2 * i + 1], party)
            for i, (_, (e, w)) in enumerate([*schema.items(), ("", (BOOL, 1))])]
    return header["name"], SecretTable(dict(zip(schema, vecs[:-1])), vecs[-1], header["name"])


def share_table(table: PlainTable, schema: dict[str, int], name: str, dealer_seed: int) -> list[SecretTable]:
    """Deterministic dealing of a clear table (boolean columns) from a dealer seed."""
    rng = Stream(dealer_seed, int(hashlib.sha256(name.encode()).hexdigest()[:8], 16))
    full = {c: (BOOL, w) for c, w in schema.items()}
    return deal_table({c: table.columns[c] for c in schema}, full, table.valid, rng, name)


def write_shares(table: PlainTable, schema: dict[str, int], name: str, dealer_seed: int,
                 outdir: str | Path) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for p, view in enumerate(share_table(table, schema, name, dealer_seed)):
        path = outdir / f"{name}.p{p}.shares"
        path.write_bytes(encode_share_file(view, name))
        paths.append(path)
    return paths


def read_shares(path: str | Path) -> tuple[str, SecretTable]:
    return decode_share_file(Path(path).read_bytes())
