import socket
import threading

import numpy as np
import pytest

from obliq.mpcore import ARITH, BOOL, open_vec
from obliq.transport import (Comm, Entry, TcpLink, Transcript, TransportError, count_rounds,
                             local_rounds, make_local_links, message_count, phase_report,
                             run_parties, total_bits, trace_shape)
from obliq.transport.channel import decode_parts, encode_parts, part_bits

from conftest import run3, share


def _free_ports(k):
    socks = [socket.socket() for _ in range(k)]
    for s in socks:
        s.bind(("127.0.0.1", 0))
    ports = [s.getsockname()[1] for s in socks]
    for s in socks:
        s.close()
    return ports


def test_encode_decode_roundtrip(rng):
    a = rng.integers(0, 1 << 13, 17, dtype=np.uint64)
    b = rng.integers(0, 2, (9, 70), dtype=np.uint8)
    data = encode_parts([(a, 13), (b, 70)])
    assert len(data) == 17 * 2 + (9 * 70 + 7) // 8
    got = decode_parts(data, [(ARITH, 17, 13), (BOOL, 9, 70)])
    assert np.array_equal(got[0], a) and np.array_equal(got[1], b)


def test_decode_rejects_bad_length():
    with pytest.raises(TransportError):
        decode_parts(b"\x00" * 5, [(ARITH, 2, 16)])


def test_part_bits_counts_payload_only():
    assert part_bits(np.zeros(10, dtype=np.uint64), 13) == 130
    assert part_bits(np.zeros((4, 7), dtype=np.uint8), 7) == 28


def _log(party, *items):
    t = Transcript(party)
    for phase, s, r, bits, d in items:
        t.append(Entry(phase, s, r, bits, d))
    return t


def test_rounds_of_a_causal_chain():
    # 0 -> 1, then 1 -> 2, then 2 -> 0: three sequential rounds
    t0 = _log(0, ("x", 0, 1, 8, "send"), ("x", 2, 0, 8, "recv"))
    t1 = _log(1, ("x", 0, 1, 8, "recv"), ("x", 1, 2, 8, "send"))
    t2 = _log(2, ("x", 1, 2, 8, "recv"), ("x", 2, 0, 8, "send"))
    assert count_rounds([t0, t1, t2]) == 3
    assert total_bits([t0, t1, t2]) == 24
    assert message_count([t0, t1, t2]) == 3


def test_rounds_of_parallel_sends():
    logs = [_log(p, ("y", p, (p + 1) % 3, 4, "send"), ("y", (p - 1) % 3, p, 4, "recv"))
            for p in range(3)]
    assert count_rounds(logs) == 1
    assert [local_rounds(t) for t in logs] == [1, 1, 1]


def test_out_of_scope_messages_add_no_depth():
    t0 = _log(0, ("a", 0, 1, 8, "send"), ("b", 1, 0, 8, "recv"))
    t1 = _log(1, ("a", 0, 1, 8, "recv"), ("b", 1, 0, 8, "send"))
    assert count_rounds([t0, t1], "a") == 1
    assert count_rounds([t0, t1], "b") == 1
    assert count_rounds([t0, t1]) == 2


def test_inconsistent_logs_are_detected():
    t0 = _log(0, ("a", 1, 0, 8, "recv"))
    t1 = _log(1)
    with pytest.raises(ValueError):
        count_rounds([t0, t1])


def test_open_cost_and_metrics_additivity():
    views = share(np.arange(50), ARITH, 16)

    def proto(ctx, x):
        with ctx.phase("stage1"):
            a = open_vec(ctx, x)
        with ctx.phase("stage2"):
            b = open_vec(ctx, x)
        return a, b

    res = run3(proto, views)
    assert res.bits == 2 * 3 * 16 * 50
    assert res.rounds_in("stage1") == 1 and res.rounds_in("stage2") == 1
    report = phase_report(res.transcripts)
    assert sum(r["bits"] for r in report) == res.bits
    assert sum(r["messages"] for r in report) == message_count(res.transcripts)
    for p in range(3):
        assert np.array_equal(res.outputs[p][0], np.arange(50))


def test_transcript_shape_is_value_free():
    def proto(ctx, x):
        return open_vec(ctx, x)

    shapes = {tuple(trace_shape(t) for t in run3(proto, share(v, ARITH, 8, seed=s)).transcripts)
              for s, v in enumerate([np.zeros(5), np.arange(5), np.full(5, 255)])}
    assert len(shapes) == 1


def test_party_failure_aborts_the_others():
    def proto(ctx, _):
        if ctx.party == 1:
            raise RuntimeError("boom")
        ctx.recv((ctx.party + 1) % 3, [(ARITH, 1, 8)])

    with pytest.raises(RuntimeError, match="boom"):
        run_parties(proto, None, 0, timeout=10)


def test_recv_timeout():
    def proto(ctx, _):
        if ctx.party == 0:
            ctx.recv(1, [(ARITH, 1, 8)])

    with pytest.raises(TransportError):
        run_parties(proto, None, 0, timeout=0.3)


def test_phase_tag_mismatch_is_an_error():
    links = make_local_links(threading.Event())
    c0, c1 = Comm(0, links[0], 2), Comm(1, links[1], 2)
    with c0.phase("alpha"):
        c0.send(1, [(np.zeros(2, dtype=np.uint64), 8)])
    with c1.phase("beta"):
        with pytest.raises(TransportError):
            c1.recv(0, [(ARITH, 2, 8)])


def test_shape_mismatch_is_an_error():
    links = make_local_links(threading.Event())
    c0, c1 = Comm(0, links[0], 2), Comm(1, links[1], 2)
    c0.send(1, [(np.zeros(2, dtype=np.uint64), 8)])
    with pytest.raises(TransportError):
        c1.recv(0, [(ARITH, 3, 8)])


def test_tcp_links_exchange_frames():
    ports = _free_ports(3)
    peers = [("127.0.0.1", p) for p in ports]
    got = [None] * 3

    def body(p):
        link = TcpLink.connect(p, peers, timeout=10)
        comm = Comm(p, link, 10)
        nxt, prv = (p + 1) % 3, (p - 1) % 3
        comm.send(nxt, [(np.full(4, p, dtype=np.uint64), 16)])
        got[p] = comm.recv(prv, [(ARITH, 4, 16)])[0]
        link.close()

    threads = [threading.Thread(target=body, args=(p,)) for p in range(3)]
    for t in threads:
        t.start()
    for t in threads:
        t.join(20)
    for p in range(3):
        assert np.array_equal(got[p], np.full(4, (p - 1) % 3))


def test_conservation_of_payload_bits():
    x = share(np.arange(64), ARITH, 32)
    res = run3(lambda ctx, a: open_vec(ctx, a, verify=True), x)
    for p in range(3):
        sent = sum(e.payload_bits for e in res.transcripts[p].entries if e.direction == "send")
        recv = sum(e.payload_bits for q in range(3) for e in res.transcripts[q].entries
                   if e.direction == "recv" and e.sender == p)
        assert sent == recv > 0


def test_reproducible_transcripts():
    x = share(np.arange(40), BOOL, 8)
    a = run3(lambda ctx, v: open_vec(ctx, v), x, seed=5)
    b = run3(lambda ctx, v: open_vec(ctx, v), x, seed=5)
    assert [t.entries for t in a.transcripts] == [t.entries for t in b.transcripts]
