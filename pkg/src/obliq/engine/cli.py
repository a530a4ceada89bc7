"""Command-line entry point: share, run, bench, oracle."""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from ..mpcore import ARITH, BOOL, PartyContext, SeedFabric, Stream, deal
from ..obsort import ASC, DESC, QUICKSORT, RADIXSORT, sort_wrapper
from ..permnet import shuffle
from ..transport import (Comm, TcpLink, TransportError, count_rounds, local_rounds, phase_report,
                         predict_cost, run_parties, total_bits)
from ..transport.cost import implementation_cost
from .corpus import QUERIES, get_query
from .ingest import IngestError, ingest_csv, parse_schema, read_shares, write_shares
from .mpc import execute_mpc, plain_to_inputs
from .plain import PlainTable, execute_plain
from .plan import PlanError


def _seed_int(text: str) -> int:
    text = str(text)
    return int(text, 16) if text.lower().startswith("0x") else int(text)


def _emit_csv(table: PlainTable, out=None) -> None:
    out = out or sys.stdout
    rows = table.rows() if table.ordered else sorted(table.rows())
    out.write(",".join(table.columns) + "\n")
    for r in rows:
        out.write(",".join(str(v) for v in r) + "\n")


def _metrics(transcripts, wall: float, extra: dict | None = None) -> dict:
    report = {
        "phases": phase_report(transcripts, depth=1),
        "total": {"bits": total_bits(transcripts),
                  "messages": sum(len(t.sends()) for t in transcripts),
                  "rounds": count_rounds(transcripts) if len(transcripts) > 1
                  else local_rounds(transcripts[0])},
        "wall_time": round(wall, 4),
    }
    if extra:
        report.update(extra)
    return report


def _write_metrics(report: dict, dest: str | None) -> None:
    text = json.dumps(report, indent=2)
    if dest in (None, "-"):
        sys.stderr.write(text + "\n")
    else:
        Path(dest).write_text(text + "\n")


def _tables_for(args, q):
    rng = np.random.default_rng(args.seed)
    return q.generate(rng, args.n)


# ---------------------------------------------------------------- commands

def cmd_share(args) -> int:
    schema = parse_schema(args.schema)
    table = ingest_csv(args.csv, schema, args.pad_to)
    name = args.name or Path(args.csv).stem
    paths = write_shares(table, schema, name, _seed_int(args.seed), args.out)
    for p in paths:
        print(p)
    return 0


def cmd_oracle(args) -> int:
    q = get_query(args.query)
    _emit_csv(execute_plain(q.build(), _tables_for(args, q)))
    return 0


def _load_party_inputs(args, plan, party):
    """This party's views: from share files, or dealt from the generated corpus data."""
    if args.shares:
        views = {}
        for path in sorted(Path(args.shares).glob(f"*.p{party}.shares")):
            name, view = read_shares(path)
            views[name] = view
        return views
    q = get_query(args.query)
    fabric = SeedFabric.from_seed(args.seed)
    return plain_to_inputs(_tables_for(args, q), plan, Stream(fabric.dealer, 0))[party]


def cmd_run(args) -> int:
    q = get_query(args.query)
    plan = q.build()
    trim = {"auto": None, "on": True, "off": False}[args.trim]
    fabric = SeedFabric.from_seed(args.seed)
    if args.party is None:
        inputs = [_load_party_inputs(args, plan, p) for p in range(3)]
        res = run_parties(lambda ctx, inp: execute_mpc(ctx, plan, inp, trim), inputs, fabric,
                          timeout=args.timeout)
        _emit_csv(res.outputs[0])
        _write_metrics(_metrics(res.transcripts, res.wall_time, {"query": q.name}), args.metrics)
        return 0
    peers = []
    for item in args.peers.split(","):
        host, _, port = item.rpartition(":")
        peers.append((host or "127.0.0.1", int(port)))
    if len(peers) != 3:
        raise SystemExit("--peers needs three host:port entries")
    link = TcpLink.connect(args.party, peers, args.timeout)
    try:
        comm = Comm(args.party, link, args.timeout)
        ctx = PartyContext(args.party, comm, fabric.for_party(args.party))
        t0 = time.perf_counter()
        out = execute_mpc(ctx, plan, _load_party_inputs(args, plan, args.party), trim)
        wall = time.perf_counter() - t0
    finally:
        link.close()
    _emit_csv(out)
    _write_metrics(_metrics([comm.transcript], wall, {"query": q.name, "party": args.party}), args.metrics)
    return 0


def cmd_bench(args) -> int:
    n, w = args.n, args.width
    rng = Stream(_seed_int(args.seed), 99)
    values = rng.bits(n, w) if w > 64 else rng.arith(n, w)
    enc = BOOL if (w > 64 or args.op != "shuffle") else ARITH
    views = deal(values, enc, w, rng)

    if args.op == "shuffle":
        def proto(ctx, x):
            return shuffle(ctx, x)
        key = "shuffle"
    else:
        algo = QUICKSORT if args.op == "quicksort" else RADIXSORT
        order = DESC if args.desc else ASC

        def proto(ctx, x):
            return sort_wrapper(ctx, x, order, algo)
        key = "radixsort_ours"
    res = run_parties(proto, views, _seed_int(args.seed), timeout=args.timeout)
    measured = res.bits_in(args.op if args.op == "shuffle" else "sort")
    extra = {"op": args.op, "n": n, "width": w, "payload_bits": measured,
             "measured_rounds": res.rounds}
    if args.op == "shuffle":
        pb, pr = predict_cost("shuffle", n, w)
        extra.update({"predicted_bits": pb, "predicted_rounds": pr, "exact": pb == measured})
    elif args.op == "radixsort":
        pb, pr = predict_cost(key, n, w)
        ib, ir = implementation_cost(key, n, w)
        extra.update({"reference_bits": pb, "reference_rounds": pr,
                      "implementation_bits": ib, "implementation_rounds_bound": ir})
    report = _metrics(res.transcripts, res.wall_time, extra)
    print(json.dumps({k: report[k] for k in extra}, indent=2))
    if args.metrics:
        _write_metrics(report, args.metrics)
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="obliq", description="Three-party oblivious relational queries")
    sub = ap.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("share", help="split a CSV into per-party share files")
    sp.add_argument("--csv", required=True)
    sp.add_argument("--schema", required=True, help="column widths, e.g. k:4,a:8")
    sp.add_argument("--name", help="table name (default: file stem)")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--seed", default="0", help="dealer seed (decimal or 0x hex)")
    sp.add_argument("--pad-to", type=int, default=None, help="append dummy rows up to this size")
    sp.set_defaults(func=cmd_share)

    for name, func, hlp in (("run", cmd_run, "execute a corpus query under MPC"),
                            ("oracle", cmd_oracle, "execute a corpus query in the clear")):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("query", choices=sorted(QUERIES))
        p.add_argument("--n", type=int, default=64, help="maximum rows per generated table")
        p.add_argument("--seed", type=int, default=0)
        p.set_defaults(func=func)
        if name == "run":
            p.add_argument("--party", type=int, choices=(0, 1, 2), default=None,
                           help="run one party over TCP (default: all three in-process)")
            p.add_argument("--peers", default="127.0.0.1:9100,127.0.0.1:9101,127.0.0.1:9102")
            p.add_argument("--shares", default=None, help="directory of share files to use as inputs")
            p.add_argument("--trim", choices=("auto", "on", "off"), default="auto")
            p.add_argument("--metrics", default="-", help="metrics JSON destination (- for stderr)")
            p.add_argument("--timeout", type=float, default=60.0)

    bp = sub.add_parser("bench", help="shuffle and sort microbenchmarks with cost report")
    bp.add_argument("op", choices=("shuffle", "radixsort", "quicksort"))
    bp.add_argument("--n", type=int, default=1024)
    bp.add_argument("--width", type=int, default=32)
    bp.add_argument("--desc", action="store_true")
    bp.add_argument("--seed", default="0")
    bp.add_argument("--metrics", default=None, help="also write the full per-phase report here")
    bp.add_argument("--timeout", type=float, default=120.0)
    bp.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PlanError, IngestError, TransportError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
