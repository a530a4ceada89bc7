"""Query API, clear reference executor, secure lowering, ingestion and CLI."""
from .corpus import QUERIES, Query, get_query
from .ingest import IngestError, ingest_csv, read_shares, write_shares
from .mpc import QueryRun, execute_mpc, lower, plain_to_inputs, run_query
from .plain import PlainTable, execute_plain
from .plan import ASC, DESC, AggSpec, Plan, PlanError, SortKey, agg, scan

__all__ = [
    "QUERIES", "Query", "get_query", "IngestError", "ingest_csv", "read_shares", "write_shares",
    "QueryRun", "execute_mpc", "lower", "plain_to_inputs", "run_query", "PlainTable", "execute_plain",
    "ASC", "DESC", "AggSpec", "Plan", "PlanError", "SortKey", "agg", "scan",
]
