"""Boolean and arithmetic circuits over shares: eq, lt, adders, conversions, mux."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .sharing import (ARITH, BOOL, EncodingError, SecretVector, add, and_public, mul_public,
                      neg, not_, products, public_const, sub, to_bits, with_width, xor,
                      zeros)


def _cols(x: SecretVector, idx) -> SecretVector:
    idx = np.asarray(idx, dtype=np.int64)
    return SecretVector(BOOL, len(idx), x.first[:, idx], x.second[:, idx], x.party)


def _hstack(parts: Sequence[SecretVector]) -> SecretVector:
    return SecretVector(BOOL, sum(p.width for p in parts),
                        np.concatenate([p.first for p in parts], axis=1),
                        np.concatenate([p.second for p in parts], axis=1), parts[0].party)


def _and_columns(ctx, lhs: Sequence[SecretVector], rhs: Sequence[SecretVector]) -> list[SecretVector]:
    """One round of ANDs over several boolean vectors (column-wise pairs)."""
    if not lhs:
        return []
    return products(ctx, list(zip(lhs, rhs)))


def and_tree_many(ctx, xs: Sequence[SecretVector]) -> list[SecretVector]:
    """AND of all bit columns of each vector, levels batched across vectors."""
    cur = list(xs)
    while any(v.width > 1 for v in cur):
        lhs, rhs, plan = [], [], []
        for i, v in enumerate(cur):
            if v.width > 1:
                half = v.width // 2
                lhs.append(_cols(v, range(0, 2 * half, 2)))
                rhs.append(_cols(v, range(1, 2 * half, 2)))
                plan.append(i)
        res = _and_columns(ctx, lhs, rhs)
        for i, r in zip(plan, res):
            v = cur[i]
            cur[i] = _hstack([r, _cols(v, [v.width - 1])]) if v.width % 2 else r
    return cur


def eq_many(ctx, pairs: Sequence[tuple[SecretVector, SecretVector]]) -> list[SecretVector]:
    """Equality bits for several (x, y) pairs in ceil(log2 max width) rounds."""
    xnors = []
    for x, y in pairs:
        if not (x.is_bool and y.is_bool) or x.width != y.width:
            raise EncodingError("eq needs boolean operands of equal width")
        xnors.append(not_(xor(x, y)))
    with ctx.phase("eq"):
        return and_tree_many(ctx, xnors)


def eq(ctx, x: SecretVector, y: SecretVector) -> SecretVector:
    return eq_many(ctx, [(x, y)])[0]


def lt_many(ctx, pairs: Sequence[tuple[SecretVector, SecretVector]]) -> list[SecretVector]:
    """Unsigned x < y for several pairs via a parallel-prefix over (generate, propagate).

    g_k = y_k AND (x_k XOR y_k), p_k = NOT(x_k XOR y_k); adjacent (hi, lo) groups
    combine as G = G_hi ^ (P_hi & G_lo), P = P_hi & P_lo. 1 + ceil(log2 w) rounds.
    """
    for x, y in pairs:
        if not (x.is_bool and y.is_bool) or x.width != y.width:
            raise EncodingError("lt needs boolean operands of equal width")
    with ctx.phase("lt"):
        diffs = [xor(x, y) for x, y in pairs]
        G = _and_columns(ctx, [y for _, y in pairs], diffs)
        P = [not_(d) for d in diffs]
        while any(g.width > 1 for g in G):
            lhs, rhs, plan = [], [], []
            for i, g in enumerate(G):
                w = g.width
                if w > 1:
                    half = w // 2
                    lo = list(range(0, 2 * half, 2))
                    hi = list(range(1, 2 * half, 2))
                    p_hi = _cols(P[i], hi)
                    lhs += [p_hi, p_hi]
                    rhs += [_cols(G[i], lo), _cols(P[i], lo)]
                    plan.append((i, hi, w))
            res = _and_columns(ctx, lhs, rhs)
            for j, (i, hi, w) in enumerate(plan):
                pg, pp = res[2 * j], res[2 * j + 1]
                g_new = xor(_cols(G[i], hi), pg)
                if w % 2:
                    g_new = _hstack([g_new, _cols(G[i], [w - 1])])
                    pp = _hstack([pp, _cols(P[i], [w - 1])])
                G[i], P[i] = g_new, pp
    return G


def lt(ctx, x: SecretVector, y: SecretVector) -> SecretVector:
    return lt_many(ctx, [(x, y)])[0]


def broadcast_bit(b: SecretVector, width: int) -> SecretVector:
    if b.enc != BOOL or b.width != 1:
        raise EncodingError("selector must be a width-1 boolean vector")
    return SecretVector(BOOL, width, np.repeat(b.first, width, axis=1),
                        np.repeat(b.second, width, axis=1), b.party)


def _inject(x: SecretVector, j: int, enc: str, width: int, arrays) -> SecretVector:
    """Sharing in which component j equals party j's local summand, others zero."""
    p = x.party
    f_arr, s_arr = arrays
    first = f_arr if j == p else np.zeros_like(f_arr)
    second = s_arr if j == (p + 1) % 3 else np.zeros_like(s_arr)
    return SecretVector(enc, width, first, second, p)


def b2a_bits(ctx, bits: SecretVector, width: int = 32) -> list[SecretVector]:
    """Convert every bit column of a boolean vector to an arithmetic 0/1 vector.

    Uses a XOR b = a + b - 2ab twice over the three injected components: two
    multiplication rounds, 2*3*width bits per converted bit.
    """
    if bits.enc != BOOL:
        raise EncodingError("b2a needs a boolean input")
    n, w = bits.n, bits.width
    flat_f = bits.first.T.reshape(-1).astype(np.uint64)
    flat_s = bits.second.T.reshape(-1).astype(np.uint64)
    flat = SecretVector(BOOL, 1, np.zeros((n * w, 1), np.uint8), np.zeros((n * w, 1), np.uint8), bits.party)
    inj = [_inject(flat, j, ARITH, width, (flat_f, flat_s)) for j in range(3)]
    with ctx.phase("b2a"):
        ab = products(ctx, [(inj[0], inj[1])])[0]
        t = sub(add(inj[0], inj[1]), mul_public(ab, 2))
        tc = products(ctx, [(t, inj[2])])[0]
        r = sub(add(t, inj[2]), mul_public(tc, 2))
    return [SecretVector(ARITH, width, r.first[k * n:(k + 1) * n], r.second[k * n:(k + 1) * n], r.party)
            for k in range(w)]


def b2a_bit(ctx, b: SecretVector, width: int = 32) -> SecretVector:
    if b.width != 1:
        raise EncodingError("b2a_bit needs a width-1 input")
    return b2a_bits(ctx, b, width)[0]


def b2a(ctx, x: SecretVector, width: int | None = None) -> SecretVector:
    """Boolean -> arithmetic as sum of 2^k * bit_k (value reduced mod 2^width)."""
    width = x.width if width is None else width
    if width > 64:
        raise EncodingError("arithmetic width above 64 unsupported")
    parts = b2a_bits(ctx, x.bit_slice(0, min(x.width, width)), width)
    acc = zeros(x.party, x.n, ARITH, width)
    for k, part in enumerate(parts):
        acc = add(acc, mul_public(part, np.uint64(1) << np.uint64(k)))
    return acc


def ks_add(ctx, x: SecretVector, y: SecretVector) -> SecretVector:
    """Kogge-Stone adder on boolean shares, sum mod 2^w."""
    w = x.width
    with ctx.phase("adder"):
        p = xor(x, y)
        g = products(ctx, [(x, y)])[0]
        G, P = g, p
        d = 1
        while d < w - 1:
            hi = list(range(d, w))
            lo = list(range(0, w - d))
            pg, pp = products(ctx, [(_cols(P, hi), _cols(G, lo)), (_cols(P, hi), _cols(P, lo))])
            G = _hstack([_cols(G, range(d)), xor(_cols(G, hi), pg)])
            P = _hstack([_cols(P, range(d)), pp])
            d *= 2
        if w == 1:
            return p
        carry = _hstack([zeros(x.party, x.n, BOOL, 1), _cols(G, range(w - 1))])
        return xor(p, carry)


def csa(ctx, a: SecretVector, b: SecretVector, c: SecretVector) -> tuple[SecretVector, SecretVector]:
    """Carry-save step: a + b + c = s + 2*carry, one AND round."""
    ab = xor(a, b)
    s = xor(ab, c)
    g1, g2 = products(ctx, [(a, b), (c, ab)])
    maj = xor(g1, g2)
    w = a.width
    shifted = _hstack([zeros(a.party, a.n, BOOL, 1), _cols(maj, range(w - 1))]) if w > 1 else zeros(a.party, a.n, BOOL, 1)
    return s, shifted


def a2b(ctx, x: SecretVector) -> SecretVector:
    """Arithmetic -> boolean: add the three injected components with a
    carry-save step followed by one Kogge-Stone adder."""
    if x.enc != ARITH:
        raise EncodingError("a2b needs an arithmetic input")
    w = x.width
    fb, sb = to_bits(x.first, w), to_bits(x.second, w)
    inj = [_inject(SecretVector(BOOL, w, fb, sb, x.party), j, BOOL, w, (fb, sb)) for j in range(3)]
    with ctx.phase("a2b"):
        s, c = csa(ctx, *inj)
        return ks_add(ctx, s, c)


def convert_column(ctx, x: SecretVector, target: str, width: int | None = None) -> SecretVector:
    if target == x.enc:
        raise EncodingError("source and target encodings are equal")
    if target == ARITH:
        return b2a(ctx, x, width)
    return a2b(ctx, x)


def mux_multi(ctx, items: Sequence[tuple[SecretVector, SecretVector, SecretVector]]) -> list[SecretVector]:
    """Batched selects (b, x, y) -> y where b = 1 else x, with per-item selectors.

    Boolean items use x ^ (bcast(b) & (x ^ y)); arithmetic items use
    x + b*(y - x), converting each distinct selector once at the widest width
    it is needed in. All products share one round.
    """
    need: dict[int, tuple[SecretVector, int]] = {}
    for b, x, y in items:
        if b.enc != BOOL or b.width != 1:
            raise EncodingError("selector must be a width-1 boolean vector")
        if x.enc != y.enc or x.width != y.width or x.n != b.n or y.n != b.n:
            raise EncodingError("mux branches need equal encoding, width and length")
        if x.enc == ARITH:
            prev = need.get(id(b))
            need[id(b)] = (b, max(x.width, prev[1] if prev else 0))
    conv: dict[int, SecretVector] = {}
    if need:
        sels = list(need.values())
        top = max(w for _, w in sels)
        with ctx.phase("mux"):
            outs = b2a_bits(ctx, _hstack([b for b, _ in sels]), top)
        for (b, w), v in zip(sels, outs):
            conv[id(b)] = v
    work = []
    for b, x, y in items:
        if x.enc == BOOL:
            work.append((broadcast_bit(b, x.width), xor(x, y)))
        else:
            work.append((with_width(conv[id(b)], x.width), sub(y, x)))
    with ctx.phase("mux"):
        prods = products(ctx, work) if work else []
    return [add(x, pr) for (_, x, _), pr in zip(items, prods)]


def mux_many(ctx, b: SecretVector, pairs: Sequence[tuple[SecretVector, SecretVector]]) -> list[SecretVector]:
    """Select y where b = 1 and x where b = 0, for every (x, y) pair."""
    return mux_multi(ctx, [(b, x, y) for x, y in pairs])


def mux(ctx, b: SecretVector, x: SecretVector, y: SecretVector) -> SecretVector:
    return mux_many(ctx, b, [(x, y)])[0]


def ones_like_bits(party: int, n: int) -> SecretVector:
    return public_const(party, n, 1, BOOL, 1)


__all__ = [
    "and_tree_many", "eq_many", "eq", "lt_many", "lt", "broadcast_bit", "b2a_bits", "b2a_bit",
    "b2a", "ks_add", "csa", "a2b", "convert_column", "mux_multi", "mux_many", "mux", "ones_like_bits",
    "and_public", "neg",
]
