"""Per-party execution context."""
from __future__ import annotations

from collections import Counter
from contextlib import contextmanager

from .prg import PartySeeds, Stream


class PartyContext:
    """Everything a party needs to run a protocol step: id, comm, seeded streams.

    Pair streams: `prg_next` is shared with the successor, `prg_prev` with the
    predecessor. Both holders of a pair stream must draw in the same order.
    """

    def __init__(self, party: int, comm, seeds: PartySeeds):
        if party not in (0, 1, 2):
            raise ValueError("party must be 0, 1 or 2")
        self.party = party
        self.comm = comm
        self.seeds = seeds
        self.prg_next = Stream(seeds.next_seed)
        self.prg_prev = Stream(seeds.prev_seed)
        self.prg_own = Stream(seeds.own_seed)
        self._nonce = 0
        self.stats: Counter = Counter()

    @property
    def next(self) -> int:
        return (self.party + 1) % 3

    @property
    def prev(self) -> int:
        return (self.party - 1) % 3

    def fresh_nonce(self) -> int:
        self._nonce += 1
        return self._nonce

    def pair_seed(self, pair: int) -> int:
        """Seed of pair (pair, pair+1); only available to its two members."""
        if pair == self.party:
            return self.seeds.next_seed
        if pair == self.prev:
            return self.seeds.prev_seed
        raise PermissionError(f"party {self.party} is not a member of pair {pair}")

    @contextmanager
    def phase(self, name: str):
        with self.comm.phase(name):
            yield

    def send(self, to: int, parts) -> None:
        self.comm.send(to, parts)

    def recv(self, frm: int, specs):
        return self.comm.recv(frm, specs)
