import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from obliq.mpcore import Stream, deal, reconstruct
from obliq.transport import run_parties

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def share(values, enc, width, seed=1):
    return deal(values, enc, width, Stream(seed, 7))


def run3(proto, *shared, seed=0, **kw):
    """Run proto(ctx, *views) on all parties; shared args are three-view lists."""
    inputs = [tuple(s[p] for s in shared) for p in range(3)]
    return run_parties(lambda ctx, inp: proto(ctx, *inp), inputs, seed, **kw)


def reveal(res, index=None):
    outs = res.outputs if index is None else [o[index] for o in res.outputs]
    return reconstruct(outs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def share_table(columns, schema, valid=None, seed=1, name="t"):
    """Three views of a table; schema maps column -> (enc, width)."""
    from obliq.table import deal_table
    n = len(next(iter(columns.values())))
    valid = np.ones(n, dtype=bool) if valid is None else np.asarray(valid, dtype=bool)
    return deal_table({k: np.asarray(v, dtype=np.uint64) for k, v in columns.items()}, schema, valid,
                      Stream(seed, 11), name)


def reveal_table(res, index=None):
    from obliq.table import reconstruct_table
    outs = res.outputs if index is None else [o[index] for o in res.outputs]
    return reconstruct_table(outs)


def stable_order(keys, desc=False):
    """Source indices of a stable sort of keys."""
    keys = [int(k) for k in keys]
    return sorted(range(len(keys)), key=lambda i: -keys[i] if desc else keys[i])


def dest_of(order):
    """One-indexed destination map of a source-index order."""
    dest = np.empty(len(order), dtype=np.int64)
    dest[np.asarray(order, dtype=np.int64)] = np.arange(1, len(order) + 1)
    return dest
