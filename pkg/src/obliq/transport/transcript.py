"""Per-party message logs and the measurements derived from them."""
from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence


@dataclass(frozen=True)
class Entry:
    phase: str
    sender: int
    receiver: int
    payload_bits: int
    direction: str  # "send" or "recv"


@dataclass
class Transcript:
    """Append-only log of every message one party sent or received."""

    party: int
    entries: list[Entry] = field(default_factory=list)

    def append(self, entry: Entry) -> None:
        self.entries.append(entry)

    def sends(self, phase_prefix: str | None = None) -> list[Entry]:
        return [e for e in self.entries
                if e.direction == "send" and _in_scope(e.phase, phase_prefix)]

    def sent_bits(self, phase_prefix: str | None = None) -> int:
        return sum(e.payload_bits for e in self.sends(phase_prefix))

    def __len__(self) -> int:
        return len(self.entries)


def _in_scope(phase: str, prefix: str | None) -> bool:
    if prefix is None:
        return True
    return phase == prefix or phase.startswith(prefix + "/")


def trace_shape(t: Transcript) -> tuple:
    """Value-free signature of a transcript: the ordered entry tuples."""
    return tuple((e.phase, e.sender, e.receiver, e.payload_bits, e.direction)
                 for e in t.entries)


def total_bits(transcripts: Iterable[Transcript], phase_prefix: str | None = None) -> int:
    """Payload bits sent by all parties (each message counted once)."""
    return sum(t.sent_bits(phase_prefix) for t in transcripts)


def message_count(transcripts: Iterable[Transcript], phase_prefix: str | None = None) -> int:
    return sum(len(t.sends(phase_prefix)) for t in transcripts)


def count_rounds(transcripts: Sequence[Transcript], phase_prefix: str | None = None) -> int:
    """Length of the longest causal chain of in-scope messages.

    Each send gets depth = 1 + the sender's current clock; a receive lifts the
    receiver's clock to the depth of the delivered message. Messages outside the
    phase scope carry causality but add no depth.
    """
    logs = sorted(transcripts, key=lambda t: t.party)
    pos = [0] * len(logs)
    clock = [0] * len(logs)
    chans: dict[tuple[int, int], deque] = defaultdict(deque)
    best = 0
    remaining = sum(len(t.entries) for t in logs)
    while remaining:
        progressed = False
        for p, t in enumerate(logs):
            while pos[p] < len(t.entries):
                e = t.entries[pos[p]]
                if e.direction == "send":
                    scoped = _in_scope(e.phase, phase_prefix)
                    depth = clock[p] + (1 if scoped else 0)
                    chans[(e.sender, e.receiver)].append(depth)
                    if scoped:
                        best = max(best, depth)
                else:
                    q = chans[(e.sender, e.receiver)]
                    if not q:
                        break
                    clock[p] = max(clock[p], q.popleft())
                pos[p] += 1
                remaining -= 1
                progressed = True
        if not progressed:
            raise ValueError("transcripts are inconsistent: a receive has no matching send")
    return best


def local_rounds(t: Transcript, phase_prefix: str | None = None) -> int:
    """Round estimate from one party's log alone: send batches separated by receives."""
    rounds, after_recv = 0, True
    for e in t.entries:
        if not _in_scope(e.phase, phase_prefix):
            continue
        if e.direction == "send":
            if after_recv:
                rounds += 1
            after_recv = False
        else:
            after_recv = True
    return rounds


def phase_report(transcripts: Sequence[Transcript], depth: int = 1) -> list[dict]:
    """Per-phase bits/messages/rounds, grouping labels by their first `depth` components.

    With a single transcript the rounds column is the one-party estimate."""
    rounds = count_rounds if len(transcripts) > 1 else (lambda ts, ph: local_rounds(ts[0], ph))
    phases: list[str] = []
    for t in transcripts:
        for e in t.entries:
            key = "/".join(e.phase.split("/")[:depth])
            if key not in phases:
                phases.append(key)
    return [{"phase": ph,
             "bits": total_bits(transcripts, ph),
             "messages": message_count(transcripts, ph),
             "rounds": rounds(transcripts, ph)} for ph in phases]
