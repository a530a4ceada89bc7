"""Seed material and deterministic Philox streams."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_M64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def mask_of(width: int) -> np.uint64:
    return _M64 if width >= 64 else np.uint64((1 << width) - 1)


def _generator(seed: int, *domain: int) -> np.random.Generator:
    ss = np.random.SeedSequence([seed & ((1 << 128) - 1), *domain])
    return np.random.Generator(np.random.Philox(ss))


class Stream:
    """A Philox counter-mode stream; two holders of the same seed draw identical values."""

    def __init__(self, seed: int, domain: int = 0):
        self._gen = _generator(seed, domain)

    def words(self, n: int) -> np.ndarray:
        return self._gen.bit_generator.random_raw(n).astype(np.uint64)

    def arith(self, n: int, width: int) -> np.ndarray:
        return self.words(n) & mask_of(width)

    def bits(self, n: int, width: int) -> np.ndarray:
        total = n * width
        raw = self.words((total + 63) // 64)
        bits = np.unpackbits(raw.view(np.uint8), bitorder="little")[:total]
        return bits.reshape(n, width)


def local_perm(seed: int, nonce: int, n: int) -> np.ndarray:
    """Seed-derived uniform permutation (Fisher-Yates), one-indexed destinations."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return _generator(seed, 1, nonce).permutation(n).astype(np.int64) + 1


@dataclass(frozen=True)
class PartySeeds:
    """What one party holds: the two pair seeds it belongs to and its own seed."""

    party: int
    next_seed: int  # shared with party + 1
    prev_seed: int  # shared with party - 1
    own_seed: int


@dataclass(frozen=True)
class SeedFabric:
    """All setup randomness. pairwise[k] is the seed of the pair (k, k+1 mod 3)."""

    pairwise: tuple[int, int, int]
    personal: tuple[int, int, int]
    dealer: int

    @classmethod
    def from_seed(cls, seed: int) -> "SeedFabric":
        st = np.random.SeedSequence(seed).generate_state(14, dtype=np.uint64)
        vals = [int(st[2 * i]) << 64 | int(st[2 * i + 1]) for i in range(7)]
        return cls(tuple(vals[0:3]), tuple(vals[3:6]), vals[6])

    @classmethod
    def from_hex(cls, text: str) -> "SeedFabric":
        return cls.from_seed(int(text, 16))

    def for_party(self, p: int) -> PartySeeds:
        return PartySeeds(p, self.pairwise[p], self.pairwise[(p - 1) % 3], self.personal[p])
