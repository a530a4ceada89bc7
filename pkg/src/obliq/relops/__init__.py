"""Oblivious relational operators over secret tables."""
from ..table import SecretTable, concat_tables, deal_table, reconstruct_table
from .aggnet import (AGG_FUNCS, FORWARD, REVERSE, AggSpec, agg_net, agg_net_multi, first_in_group,
                     is_power_of_two, key_bits, last_in_group, next_power_of_two)
from .expr import (Add, And, Arith, Col, Const, Eq, Expr, Ge, Gt, Le, Lt, Mul, Ne, Not, Or,
                   PlanError, Sub, as_arith, as_bool, columns_of, evaluate, infer_type, lift)
from .join import JOIN_TYPES, OUTER, JoinSpec, join_agg
from .ops import (adjacent_equal, distinct, distinct_bits, distinct_rows, filter_table,
                  group_aggregate, mask_rows, mask_shuffle_open, pre_aggregate, trim_decision,
                  trim_rows, trim_threshold)

filter = filter_table  # noqa: A001 - operator name

__all__ = [name for name in dir() if not name.startswith("_")]
