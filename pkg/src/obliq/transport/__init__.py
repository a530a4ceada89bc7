"""Channels, transcripts and cost accounting."""
from .channel import DEFAULT_TIMEOUT, Comm, LocalLink, TcpLink, TransportError, make_local_links
from .cost import ELL_SIGMA, PRIMITIVES, implementation_cost, predict_cost
from .transcript import (Entry, Transcript, count_rounds, local_rounds, message_count, phase_report,
                         total_bits, trace_shape)
from .harness import RunResult, run_parties

__all__ = [
    "DEFAULT_TIMEOUT", "Comm", "LocalLink", "TcpLink", "TransportError", "make_local_links",
    "ELL_SIGMA", "PRIMITIVES", "implementation_cost", "predict_cost",
    "Entry", "Transcript", "count_rounds", "local_rounds", "message_count", "phase_report", "total_bits",
    "trace_shape", "RunResult", "run_parties",
]
