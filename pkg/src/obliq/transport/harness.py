"""Run all three parties of a protocol as threads of one process."""
from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from typing import Any, Callable, Sequence

from .channel import DEFAULT_TIMEOUT, Comm, TransportError, make_local_links
from .transcript import Transcript, count_rounds, total_bits


@dataclass
class RunResult:
    outputs: list
    transcripts: list[Transcript]
    wall_time: float

    @property
    def bits(self) -> int:
        return total_bits(self.transcripts)

    @property
    def rounds(self) -> int:
        return count_rounds(self.transcripts)

    def bits_in(self, phase: str) -> int:
        return total_bits(self.transcripts, phase)

    def rounds_in(self, phase: str) -> int:
        return count_rounds(self.transcripts, phase)


def run_parties(protocol: Callable[[Any, Any], Any],
                clear_inputs: Sequence[Any] | None = None,
                seeds: Any = 0,
                timeout: float = DEFAULT_TIMEOUT) -> RunResult:
    """Execute `protocol(ctx, input_i)` for parties 0, 1, 2 concurrently.

    `seeds` is an int master seed or a SeedFabric. If any party raises, the
    others are aborted and the first exception is re-raised.
    """
    from ..mpcore.context import PartyContext
    from ..mpcore.prg import SeedFabric

    fabric = seeds if isinstance(seeds, SeedFabric) else SeedFabric.from_seed(seeds)
    inputs = list(clear_inputs) if clear_inputs is not None else [None, None, None]
    if len(inputs) != 3:
        raise ValueError("need one input per party")
    abort = threading.Event()
    links = make_local_links(abort)
    comms = [Comm(p, links[p], timeout) for p in range(3)]
    outputs: list = [None] * 3
    errors: list = [None] * 3

    def body(p: int) -> None:
        try:
            ctx = PartyContext(p, comms[p], fabric.for_party(p))
            outputs[p] = protocol(ctx, inputs[p])
        except BaseException as exc:  # noqa: BLE001 - re-raised in the caller
            errors[p] = exc
            abort.set()

    t0 = time.perf_counter()
    threads = [threading.Thread(target=body, args=(p,), daemon=True) for p in range(3)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    wall = time.perf_counter() - t0
    primary = [e for e in errors if e is not None and not isinstance(e, TransportError)]
    if primary:
        raise primary[0]
    for e in errors:
        if e is not None:
            raise e
    return RunResult(outputs, [c.transcript for c in comms], wall)
