"""Ordered party-to-party channels: in-process queues and TCP frames.

A message is a list of parts. An arithmetic part is a 1-D uint64 array plus
its bit width; a boolean part is a bit-sliced (n, w) uint8 array. Payload
bits are n*w per part regardless of how the bytes are laid out on the wire.
"""
from __future__ import annotations

import queue
import socket
import struct
import threading
import time
import zlib
from contextlib import contextmanager
from typing import Iterator, Sequence

import numpy as np

from .transcript import Entry, Transcript

DEFAULT_TIMEOUT = 60.0

Part = tuple  # (array, width)
Spec = tuple  # ("A" | "B", n, width)


class TransportError(RuntimeError):
    """Peer failure, timeout, or framing mismatch."""


def part_bits(arr: np.ndarray, width: int) -> int:
    if arr.ndim == 2:
        return int(arr.shape[0] * arr.shape[1])
    return int(arr.shape[0] * width)


def phase_tag(phase: str) -> int:
    return zlib.crc32(phase.encode()) & 0xFFFF


class LocalLink:
    """One party's view of the shared queue fabric used by thread-based runs."""

    def __init__(self, party: int, queues: dict, abort: threading.Event):
        self.party = party
        self._queues = queues
        self._abort = abort

    def send(self, to: int, tag: int, parts: Sequence[Part]) -> None:
        self._queues[(self.party, to)].put((tag, [np.array(a, copy=True) for a, _ in parts]))

    def recv(self, frm: int, tag: int, specs: Sequence[Spec], timeout: float, phase: str):
        q = self._queues[(frm, self.party)]
        deadline = time.monotonic() + timeout
        while True:
            if self._abort.is_set():
                raise TransportError(f"party {self.party}: run aborted while waiting in phase {phase!r}")
            try:
                got_tag, arrays = q.get(timeout=0.05)
                break
            except queue.Empty:
                if time.monotonic() > deadline:
                    raise TransportError(
                        f"party {self.party}: timed out receiving from party {frm} in phase {phase!r}")
        if got_tag != tag:
            raise TransportError(f"party {self.party}: phase tag mismatch from party {frm} in phase {phase!r}")
        return arrays

    def close(self) -> None:
        pass


def make_local_links(abort: threading.Event | None = None) -> list[LocalLink]:
    abort = abort or threading.Event()
    queues = {(a, b): queue.SimpleQueue() for a in range(3) for b in range(3) if a != b}
    return [LocalLink(p, queues, abort) for p in range(3)]


def encode_parts(parts: Sequence[Part]) -> bytes:
    chunks = []
    for arr, width in parts:
        if arr.ndim == 2:
            chunks.append(np.packbits(arr.reshape(-1), bitorder="little").tobytes())
        else:
            nbytes = (width + 7) // 8
            raw = np.ascontiguousarray(arr, dtype="<u8").view(np.uint8).reshape(-1, 8)
            chunks.append(raw[:, :nbytes].tobytes())
    return b"".join(chunks)


def decode_parts(data: bytes, specs: Sequence[Spec]) -> list[np.ndarray]:
    out = []
    off = 0
    buf = np.frombuffer(data, dtype=np.uint8)
    for kind, n, width in specs:
        if kind == "B":
            nb = (n * width + 7) // 8
            bits = np.unpackbits(buf[off:off + nb], bitorder="little")[:n * width]
            out.append(bits.reshape(n, width).astype(np.uint8))
        else:
            k = (width + 7) // 8
            nb = n * k
            full = np.zeros((n, 8), dtype=np.uint8)
            full[:, :k] = buf[off:off + nb].reshape(n, k)
            out.append(full.view("<u8").reshape(n).astype(np.uint64))
        off += nb
    if off != len(data):
        raise TransportError(f"frame length {len(data)} does not match expected {off}")
    return out


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise TransportError("peer closed the connection")
        buf.extend(chunk)
    return bytes(buf)


class TcpLink:
    """Length-prefixed frames over one TCP connection per peer.

    Frame: 4-byte LE payload length, 2-byte LE phase tag, payload bytes.
    """

    def __init__(self, party: int, socks: dict[int, socket.socket]):
        self.party = party
        self._socks = socks

    @classmethod
    def connect(cls, party: int, peers: Sequence[tuple[str, int]], timeout: float = DEFAULT_TIMEOUT) -> "TcpLink":
        """Party i listens on peers[i], accepts lower ids and dials higher ids."""
        host, port = peers[party]
        server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        server.bind((host, port))
        server.listen(3)
        server.settimeout(timeout)
        socks: dict[int, socket.socket] = {}
        deadline = time.monotonic() + timeout
        for other in range(party + 1, 3):
            while True:
                try:
                    s = socket.create_connection(peers[other], timeout=timeout)
                    break
                except OSError:
                    if time.monotonic() > deadline:
                        raise TransportError(f"party {party}: cannot reach party {other} at {peers[other]}")
                    time.sleep(0.05)
            s.sendall(struct.pack("<B", party))
            socks[other] = s
        for _ in range(party):
            try:
                s, _addr = server.accept()
            except socket.timeout as exc:
                raise TransportError(f"party {party}: peers did not connect") from exc
            (other,) = struct.unpack("<B", _recv_exact(s, 1))
            socks[other] = s
        server.close()
        for s in socks.values():
            s.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            s.settimeout(timeout)
        return cls(party, socks)

    def send(self, to: int, tag: int, parts: Sequence[Part]) -> None:
        payload = encode_parts(parts)
        self._socks[to].sendall(struct.pack("<IH", len(payload), tag) + payload)

    def recv(self, frm: int, tag: int, specs: Sequence[Spec], timeout: float, phase: str):
        s = self._socks[frm]
        s.settimeout(timeout)
        try:
            length, got_tag = struct.unpack("<IH", _recv_exact(s, 6))
            data = _recv_exact(s, length)
        except socket.timeout as exc:
            raise TransportError(f"party {self.party}: timed out receiving from party {frm} in phase {phase!r}") from exc
        except OSError as exc:
            raise TransportError(f"party {self.party}: connection to party {frm} failed in phase {phase!r}: {exc}") from exc
        if got_tag != tag:
            raise TransportError(f"party {self.party}: phase tag mismatch from party {frm} in phase {phase!r}")
        return decode_parts(data, specs)

    def close(self) -> None:
        for s in self._socks.values():
            try:
                s.close()
            except OSError:
                pass


class Comm:
    """A party's communicator: phase labels, transcript capture, and the link."""

    def __init__(self, party: int, link, timeout: float = DEFAULT_TIMEOUT):
        self.party = party
        self.link = link
        self.timeout = timeout
        self.transcript = Transcript(party)
        self._stack: list[str] = []

    @property
    def phase_label(self) -> str:
        return "/".join(self._stack) or "main"

    @contextmanager
    def phase(self, name: str) -> Iterator[None]:
        self._stack.append(name)
        try:
            yield
        finally:
            self._stack.pop()

    def send(self, to: int, parts: Sequence[Part]) -> None:
        label = self.phase_label
        bits = sum(part_bits(a, w) for a, w in parts)
        self.link.send(to, phase_tag(label), parts)
        self.transcript.append(Entry(label, self.party, to, bits, "send"))

    def recv(self, frm: int, specs: Sequence[Spec]) -> list[np.ndarray]:
        label = self.phase_label
        arrays = self.link.recv(frm, phase_tag(label), specs, self.timeout, label)
        if len(arrays) != len(specs):
            raise TransportError(f"party {self.party}: expected {len(specs)} parts in phase {label!r}")
        bits = 0
        for arr, (kind, n, w) in zip(arrays, specs):
            expect = (n, w) if kind == "B" else (n,)
            if arr.shape != expect:
                raise TransportError(f"party {self.party}: part shape {arr.shape} != {expect} in phase {label!r}")
            bits += n * w
        self.transcript.append(Entry(label, frm, self.party, bits, "recv"))
        return arrays
