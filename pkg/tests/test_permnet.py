import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import chisquare

from obliq.mpcore import ARITH, BOOL, IntegrityError, SeedFabric
from obliq.permnet import (PERM_WIDTH, apply_elementwise_perm, apply_inverse_sharded_perm,
                           apply_local_perm, apply_sharded_perm, check_bijection, compose_local,
                           compose_perms, convert_elementwise_perm, gen_local_perm, gen_sharded_perm,
                           identity_perm, invert_elementwise_perm, invert_local_perm, is_bijection,
                           shuffle)
from obliq.transport import implementation_cost, predict_cost

from conftest import reveal, run3, share


def perms(n):
    return [np.array(p, dtype=np.int64) + 1 for p in itertools.permutations(range(n))]


def sperm(perm, enc=ARITH, seed=1):
    return share(np.asarray(perm, dtype=np.uint64), enc, PERM_WIDTH, seed)


# ---------------------------------------------------------------- clear algebra

def test_apply_example():
    assert list(apply_local_perm(np.array(["a", "b", "c"]), [3, 1, 2])) == ["b", "c", "a"]


def test_compose_and_invert_examples():
    assert list(compose_local([2, 3, 1], [3, 1, 2])) == [1, 2, 3]
    assert list(invert_local_perm([3, 1, 2])) == [2, 3, 1]


@pytest.mark.parametrize("n", range(1, 6))
def test_fact_destination_vectors_exhaustive(n):
    # applying pi to the destination vector of sigma yields that of sigma o pi^-1
    for sigma in perms(n):
        for pi in perms(n):
            lhs = apply_local_perm(sigma, pi)
            assert np.array_equal(lhs, compose_local(invert_local_perm(pi), sigma))


@pytest.mark.parametrize("n", range(1, 6))
def test_group_laws_exhaustive(n):
    ident = identity_perm(n)
    x = np.arange(100, 100 + n)
    for s in perms(n):
        assert np.array_equal(compose_local(s, ident), s)
        assert np.array_equal(compose_local(ident, s), s)
        assert np.array_equal(compose_local(s, invert_local_perm(s)), ident)
        for r in perms(n):
            assert np.array_equal(apply_local_perm(x, compose_local(s, r)),
                                  apply_local_perm(apply_local_perm(x, s), r))


@given(st.integers(1, 1024), st.integers(0, 2**31))
def test_associativity_random(n, seed):
    rng = np.random.default_rng(seed)
    a, b, c = (rng.permutation(n) + 1 for _ in range(3))
    assert np.array_equal(compose_local(compose_local(a, b), c), compose_local(a, compose_local(b, c)))


def test_bijection_checks():
    assert is_bijection([2, 1, 3]) and not is_bijection([1, 1, 3]) and not is_bijection([0, 1, 2])
    with pytest.raises(IntegrityError):
        check_bijection([1, 3, 3])


def test_local_perm_is_seeded():
    assert np.array_equal(gen_local_perm(1, 2, 50), gen_local_perm(1, 2, 50))
    assert not np.array_equal(gen_local_perm(1, 2, 50), gen_local_perm(1, 3, 50))


def test_local_perm_chi_square():
    # position of element 1 over many nonces is uniform on n = 8 slots
    counts = Counter(int(np.argmax(gen_local_perm(77, k, 8) == 1)) for k in range(8000))
    stat = chisquare([counts[i] for i in range(8)])
    assert stat.pvalue > 1e-3


# ---------------------------------------------------------------- sharded permutations

@pytest.mark.parametrize("enc", [ARITH, BOOL])
def test_sharded_apply_matches_composed_components(enc):
    n, w = 40, 16
    x = np.arange(n, dtype=np.uint64) * 3

    def proto(ctx, v):
        sp = gen_sharded_perm(ctx, n)
        y = apply_sharded_perm(ctx, v, sp)
        back = apply_inverse_sharded_perm(ctx, y, sp)
        return y, back, sp

    res = run3(proto, share(x, enc, w))
    y, back = reveal(res, 0), reveal(res, 1)
    assert np.array_equal(back, x)
    fab = SeedFabric.from_seed(0)
    nonce = res.outputs[0][2].nonce
    # exclusion order 1, 2, 0 applies the components of pairs 2, 0, 1 in turn
    expect = x
    for pair in (2, 0, 1):
        expect = apply_local_perm(expect, gen_local_perm(fab.pairwise[pair], nonce, n))
    assert np.array_equal(y, expect)


def test_component_access_is_restricted():
    res = run3(lambda ctx: gen_sharded_perm(ctx, 5))
    sp0 = res.outputs[0]
    sp0.component(0)
    sp0.component(2)
    with pytest.raises(PermissionError):
        sp0.component(1)


@pytest.mark.parametrize("n,ell", [(8, 32), (1024, 64), (4096, 128)])
def test_shuffle_cost_exact(n, ell):
    enc = BOOL if ell > 64 else ARITH
    rng = np.random.default_rng(n)
    vals = rng.integers(0, 2**62, n).astype(object) if ell > 64 else rng.integers(0, 2**63, n, dtype=np.uint64) & np.uint64((1 << ell) - 1 if ell < 64 else 2**64 - 1)
    res = run3(lambda ctx, v: shuffle(ctx, v), share(vals, enc, ell))
    assert res.bits_in("shuffle") == 6 * ell * n == predict_cost("shuffle", n, ell)[0]
    assert res.rounds_in("shuffle") == 3
    assert sorted(reveal(res)) == sorted(vals)


def test_shuffle_single_element():
    res = run3(lambda ctx, v: shuffle(ctx, v), share(np.array([42]), ARITH, 8))
    assert list(reveal(res)) == [42]


def test_shuffle_is_uniform_on_four_elements():
    x = share(np.array([0, 1, 2, 3]), ARITH, 8)

    def proto(ctx, v):
        outs = [shuffle(ctx, v) for _ in range(10000 // 4)]
        return outs

    # 4 independent runs of 2500 shuffles give 10^4 samples
    counts = Counter()
    for seed in range(4):
        res = run3(proto, x, seed=seed)
        for k in range(len(res.outputs[0])):
            counts[tuple(reveal(res, k).tolist())] += 1
    assert len(counts) == 24
    assert chisquare(list(counts.values())).pvalue > 1e-3


def test_shuffle_multiple_vectors_move_together():
    a = np.arange(30, dtype=np.uint64)
    res = run3(lambda ctx, u, v: shuffle(ctx, [u, v]), share(a, ARITH, 16), share(a * 2, BOOL, 8))
    assert np.array_equal(reveal(res, 1), reveal(res, 0) * 2)


# ---------------------------------------------------------------- elementwise permutations

def test_apply_elementwise_example():
    res = run3(lambda ctx, x, r: apply_elementwise_perm(ctx, x, r),
               share(np.array([10, 20, 30]), ARITH, 8), sperm([3, 1, 2]))
    assert list(reveal(res)) == [20, 30, 10]


@pytest.mark.parametrize("enc", [ARITH, BOOL])
def test_apply_elementwise_random(enc):
    rng = np.random.default_rng(3)
    x = rng.integers(0, 256, 64, dtype=np.uint64)
    rho = rng.permutation(64) + 1
    res = run3(lambda ctx, a, r: apply_elementwise_perm(ctx, a, r), share(x, BOOL, 8), sperm(rho, enc))
    assert np.array_equal(reveal(res), apply_local_perm(x, rho))


def test_apply_elementwise_cost():
    n = 128
    res = run3(lambda ctx, a, r: apply_elementwise_perm(ctx, a, r),
               share(np.zeros(n), BOOL, 8), sperm(np.arange(1, n + 1)))
    assert (res.bits, res.rounds) == implementation_cost("applyElementwise", n, 8)


def test_compose_examples_and_laws():
    s, r = np.array([2, 3, 1]), np.array([3, 1, 2])
    res = run3(lambda ctx, a, b: compose_perms(ctx, a, b), sperm(s), sperm(r, seed=2))
    assert list(reveal(res)) == [1, 2, 3]
    ident = np.arange(1, 8)
    p = np.array([4, 2, 7, 1, 3, 6, 5])
    res = run3(lambda ctx, a, i: (compose_perms(ctx, a, i), compose_perms(ctx, i, a)), sperm(p), sperm(ident))
    assert np.array_equal(reveal(res, 0), p) and np.array_equal(reveal(res, 1), p)


def test_invert_examples():
    res = run3(lambda ctx, a: invert_elementwise_perm(ctx, a), sperm([3, 1, 2]))
    assert list(reveal(res)) == [2, 3, 1]
    res = run3(lambda ctx, a: invert_elementwise_perm(ctx, a), sperm(np.arange(1, 6)))
    assert list(reveal(res)) == [1, 2, 3, 4, 5]


def test_convert_roundtrip():
    rng = np.random.default_rng(5)
    p = rng.permutation(128) + 1

    def proto(ctx, a):
        b = convert_elementwise_perm(ctx, a, BOOL)
        return b, convert_elementwise_perm(ctx, b, ARITH)

    res = run3(proto, sperm(p))
    assert res.outputs[0][0].enc == BOOL
    assert np.array_equal(reveal(res, 0), p) and np.array_equal(reveal(res, 1), p)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_secure_algebra_exhaustive(n):
    """Every (sigma, rho) pair through compose, invert and apply, in one run per n."""
    ps = perms(n)
    pairs = [(s, r) for s in ps for r in ps]
    x = np.arange(50, 50 + n, dtype=np.uint64)
    sig = [sperm(s, seed=i) for i, (s, _) in enumerate(pairs)]
    rho = [sperm(r, seed=10_000 + i) for i, (_, r) in enumerate(pairs)]
    xs = share(x, ARITH, 16)
    inputs = [[(sig[i][p], rho[i][p]) for i in range(len(pairs))] for p in range(3)]

    from obliq.transport import run_parties

    def proto(ctx, items):
        xv = xs[ctx.party]
        out = []
        for s, r in items:
            out.append((compose_perms(ctx, s, r), invert_elementwise_perm(ctx, s),
                        apply_elementwise_perm(ctx, xv, s)))
        return out

    res = run_parties(proto, inputs, 3)
    from obliq.mpcore import reconstruct
    for i, (s, r) in enumerate(pairs):
        comp = reconstruct([res.outputs[p][i][0] for p in range(3)])
        inv = reconstruct([res.outputs[p][i][1] for p in range(3)])
        app = reconstruct([res.outputs[p][i][2] for p in range(3)])
        assert np.array_equal(comp, compose_local(s, r))
        assert np.array_equal(inv, invert_local_perm(s))
        assert np.array_equal(app, apply_local_perm(x, s))


@given(st.integers(2, 256), st.integers(0, 2**31))
def test_secure_algebra_random(n, seed):
    rng = np.random.default_rng(seed)
    a, b, c = (rng.permutation(n) + 1 for _ in range(3))

    def proto(ctx, x, y, z):
        ab = compose_perms(ctx, x, y)
        left = compose_perms(ctx, ab, z)
        right = compose_perms(ctx, x, compose_perms(ctx, y, z))
        ident = compose_perms(ctx, x, invert_elementwise_perm(ctx, x))
        return left, right, ident

    res = run3(proto, sperm(a), sperm(b, seed=2), sperm(c, seed=3), seed=seed)
    assert np.array_equal(reveal(res, 0), reveal(res, 1))
    assert np.array_equal(reveal(res, 0), compose_local(compose_local(a, b), c))
    assert np.array_equal(reveal(res, 2), np.arange(1, n + 1))


def test_large_random_apply_and_convert():
    n = 1024
    rng = np.random.default_rng(11)
    p = rng.permutation(n) + 1
    x = rng.integers(0, 2**20, n, dtype=np.uint64)

    def proto(ctx, perm, v):
        return apply_elementwise_perm(ctx, v, perm), convert_elementwise_perm(ctx, perm, BOOL)

    res = run3(proto, sperm(p), share(x, ARITH, 20))
    assert np.array_equal(reveal(res, 0), apply_local_perm(x, p))
    assert np.array_equal(reveal(res, 1), p)


def test_corrupted_permutation_aborts():
    bad = sperm(np.array([1, 1, 3]))
    with pytest.raises(IntegrityError):
        run3(lambda ctx, r, x: apply_elementwise_perm(ctx, x, r), bad, share(np.arange(3), ARITH, 8))



@pytest.mark.parametrize("enc", [ARITH, BOOL])
def test_permutation_protocol_shapes_are_data_independent(enc):
    from obliq.transport import trace_shape
    shapes = set()
    for seed in range(4):
        rng = np.random.default_rng(seed)
        a, b = rng.permutation(32) + 1, rng.permutation(32) + 1
        x = rng.integers(0, 256, 32, dtype=np.uint64)

        def proto(ctx, s, r, v):
            return (apply_elementwise_perm(ctx, v, s), compose_perms(ctx, s, r),
                    invert_elementwise_perm(ctx, s), convert_elementwise_perm(ctx, s, BOOL if enc == ARITH else ARITH),
                    shuffle(ctx, v))

        res = run3(proto, sperm(a, enc, seed), sperm(b, enc, seed + 7), share(x, BOOL, 8, seed), seed=seed)
        shapes.add(tuple(trace_shape(t) for t in res.transcripts))
    assert len(shapes) == 1


def test_opened_permutations_are_uniform(monkeypatch):
    """Values opened inside apply are uniform permutations whatever rho is."""
    import threading
    import obliq.permnet as pn
    seen, lock = [], threading.Lock()
    real = pn.open_vec

    def spy(ctx, v, *a, **kw):
        out = real(ctx, v, *a, **kw)
        if ctx.party == 0:
            with lock:
                seen.append(tuple(int(t) for t in out))
        return out

    monkeypatch.setattr(pn, "open_vec", spy)
    x = share(np.arange(4), ARITH, 8)
    for rho in ([1, 2, 3, 4], [4, 3, 2, 1]):
        seen.clear()

        def proto(ctx, r, v):
            return [apply_elementwise_perm(ctx, v, r) for _ in range(60)]

        for seed in range(8):
            run3(proto, sperm(rho), x, seed=seed)
        counts = Counter(seen)
        assert len(seen) == 480 and set(counts) <= {tuple(p) for p in perms(4)}
        assert chisquare([counts.get(tuple(p), 0) for p in perms(4)]).pvalue > 1e-3
