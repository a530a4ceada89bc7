"""Oblivious shuffling and the secret-shared permutation algebra.

Permutations are one-indexed destination maps: applying pi sends x_i to
position pi_i. A sharded permutation is the composition of three seed-derived
local permutations, each known to one pair of parties.
"""
from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .mpcore import (ARITH, BOOL, EncodingError, IntegrityError, SecretVector, local_perm,
                     open_vec, public)

PERM_WIDTH = 32

# Rounds exclude one party each; the excluded party's successor and
# predecessor form the group and share the pair stream (e+1, e+2).
EXCLUDE_ORDER = (1, 2, 0)


# ---------------------------------------------------------------- clear algebra

def is_bijection(perm) -> bool:
    p = np.asarray(perm, dtype=np.int64)
    n = len(p)
    if n == 0:
        return True
    if p.min() < 1 or p.max() > n:
        return False
    seen = np.zeros(n + 1, dtype=bool)
    seen[p] = True
    return bool(seen[1:].all())


def check_bijection(perm) -> np.ndarray:
    p = np.asarray(perm, dtype=np.int64)
    if not is_bijection(p):
        raise IntegrityError("opened vector is not a permutation")
    return p


def apply_local_perm(x, perm):
    """out[perm_i] = x_i along axis 0 (vectors, bit matrices or share arrays)."""
    p = check_bijection(perm)
    x = np.asarray(x)
    if len(x) != len(p):
        raise ValueError("length mismatch")
    out = np.empty_like(x)
    out[p - 1] = x
    return out


def invert_local_perm(perm) -> np.ndarray:
    p = check_bijection(perm)
    inv = np.empty_like(p)
    inv[p - 1] = np.arange(1, len(p) + 1)
    return inv


def compose_local(sigma, rho) -> np.ndarray:
    """rho o sigma as an index map: (rho o sigma)_i = rho_{sigma_i}."""
    s = check_bijection(sigma)
    r = check_bijection(rho)
    return r[s - 1]


def identity_perm(n: int) -> np.ndarray:
    return np.arange(1, n + 1, dtype=np.int64)


def gen_local_perm(seed: int, nonce: int, n: int) -> np.ndarray:
    return local_perm(seed, nonce, n)


def _permute_view(v: SecretVector, perm: np.ndarray) -> SecretVector:
    """Local application to both components of one party's view."""
    out_f = np.empty_like(v.first)
    out_s = np.empty_like(v.second)
    out_f[perm - 1] = v.first
    out_s[perm - 1] = v.second
    return SecretVector(v.enc, v.width, out_f, out_s, v.party)


def apply_public_perm(v: SecretVector, perm) -> SecretVector:
    """Apply a public (opened) permutation to a secret vector; no communication."""
    return _permute_view(v, check_bijection(perm))


# ---------------------------------------------------------------- sharded permutations

@dataclass(frozen=True)
class ShardedPermutation:
    """One party's handle: the components for the two pairs it belongs to.

    components maps pair index k (the pair (k, k+1)) to its local permutation.
    """

    n: int
    nonce: int
    party: int
    components: dict

    def component(self, pair: int) -> np.ndarray:
        try:
            return self.components[pair]
        except KeyError:
            raise PermissionError(f"party {self.party} does not hold the component of pair {pair}") from None


def gen_sharded_perm(ctx, n: int) -> ShardedPermutation:
    """Derive this party's two components from the pair seeds; no communication."""
    if n < 1:
        raise ValueError("n must be >= 1")
    nonce = ctx.fresh_nonce()
    comps = {pair: gen_local_perm(ctx.pair_seed(pair), nonce, n) for pair in (ctx.party, ctx.prev)}
    return ShardedPermutation(n, nonce, ctx.party, comps)


def gen_sharded_perm_pair(ctx, n: int) -> tuple[ShardedPermutation, ShardedPermutation]:
    """With three parties both halves of the pair are the same permutation."""
    sp = gen_sharded_perm(ctx, n)
    return sp, sp


def _fold(v: SecretVector, x, y):
    if v.enc == BOOL:
        return x ^ y
    return (x + y) & v.mask


def _unfold(v: SecretVector, x, y):
    if v.enc == BOOL:
        return x ^ y
    return (x - y) & v.mask


def _draw(stream, v: SecretVector):
    if v.enc == BOOL:
        return stream.bits(v.n, v.width)
    return stream.arith(v.n, v.width)


def _reshare_round(ctx, xs: list[SecretVector], excluded: int, perm_of) -> list[SecretVector]:
    """One group round: members fold, permute, re-randomize and feed the excluded party."""
    p = ctx.party
    g1, g2 = (excluded + 1) % 3, (excluded + 2) % 3
    if p == excluded:
        from_g1 = ctx.recv(g1, [v.spec() for v in xs])
        from_g2 = ctx.recv(g2, [v.spec() for v in xs])
        # g2 sends t_e (our first component), g1 sends t_{e+1} (our second)
        return [SecretVector(v.enc, v.width, a, b, p) for v, a, b in zip(xs, from_g2, from_g1)]
    out, msg = [], []
    if p == g1:
        # holds (s_{e+1}, s_{e+2}); the stream shared with g2 is prg_next
        perm = perm_of(g1)
        for v in xs:
            a = _fold(v, v.first, v.second)[perm_inv_index(perm)]
            t_keep = _draw(ctx.prg_next, v)
            z = _draw(ctx.prg_next, v)
            t_send = _unfold(v, _unfold(v, a, t_keep), z)
            msg.append((t_send, v.width))
            out.append(SecretVector(v.enc, v.width, t_send, t_keep, p))
        ctx.send(excluded, msg)
    else:
        # g2 holds (s_{e+2}, s_e); the stream shared with g1 is prg_prev
        perm = perm_of(g1)
        for v in xs:
            b = v.second[perm_inv_index(perm)]
            t_keep = _draw(ctx.prg_prev, v)
            z = _draw(ctx.prg_prev, v)
            t_send = _fold(v, b, z)
            msg.append((t_send, v.width))
            out.append(SecretVector(v.enc, v.width, t_keep, t_send, p))
        ctx.send(excluded, msg)
    return out


def perm_inv_index(perm: np.ndarray) -> np.ndarray:
    """Gather index g with (apply perm to x) == x[g]."""
    g = np.empty_like(perm)
    g[perm - 1] = np.arange(len(perm))
    return g


def apply_sharded_perm(ctx, xs, sp: ShardedPermutation, inverse: bool = False):
    """Apply <pi> (or its inverse) to one or several vectors: 3 rounds, 2*w*n bits per round.

    Accepts a single SecretVector or a list; returns the same shape.
    """
    single = isinstance(xs, SecretVector)
    vecs = [xs] if single else list(xs)
    for v in vecs:
        if v.n != sp.n:
            raise ValueError(f"length {v.n} does not match permutation length {sp.n}")
    order = EXCLUDE_ORDER[::-1] if inverse else EXCLUDE_ORDER

    def perm_of(pair):
        comp = sp.component(pair)
        return invert_local_perm(comp) if inverse else comp

    with ctx.phase("apply_sharded"):
        for e in order:
            vecs = _reshare_round(ctx, vecs, e, perm_of)
    return vecs[0] if single else vecs


def apply_inverse_sharded_perm(ctx, xs, sp: ShardedPermutation):
    return apply_sharded_perm(ctx, xs, sp, inverse=True)


def shuffle(ctx, xs):
    """Obliviously shuffle one vector, or several vectors under one permutation."""
    n = xs.n if isinstance(xs, SecretVector) else xs[0].n
    with ctx.phase("shuffle"):
        sp = gen_sharded_perm(ctx, n)
        return apply_sharded_perm(ctx, xs, sp)


# ---------------------------------------------------------------- elementwise permutations

def _check_perm_vector(rho: SecretVector) -> None:
    if rho.width != PERM_WIDTH:
        raise EncodingError(f"elementwise permutations are {PERM_WIDTH}-bit vectors")


def identity_shared(ctx, n: int, enc: str = ARITH) -> SecretVector:
    return public(ctx.party, identity_perm(n).astype(np.uint64), enc, PERM_WIDTH)


def apply_elementwise_perm(ctx, xs, rho: SecretVector):
    """rho(x): shuffle x and rho under one <pi>, open pi(rho), apply it locally.

    Accepts one vector or a list (all moved by the same rho).
    """
    _check_perm_vector(rho)
    single = isinstance(xs, SecretVector)
    vecs = [xs] if single else list(xs)
    with ctx.phase("apply_elementwise"):
        sp, sp2 = gen_sharded_perm_pair(ctx, rho.n)
        moved = apply_sharded_perm(ctx, vecs, sp)
        rho_shuf = apply_sharded_perm(ctx, rho, sp2)
        opened = check_bijection(open_vec(ctx, rho_shuf).astype(np.int64))
        out = [_permute_view(v, opened) for v in moved]
    return out[0] if single else out


def compose_perms(ctx, sigma: SecretVector, rho: SecretVector) -> SecretVector:
    """Shared rho o sigma, i.e. (rho o sigma)_i = rho_{sigma_i}."""
    _check_perm_vector(sigma)
    _check_perm_vector(rho)
    if sigma.enc != rho.enc or sigma.n != rho.n:
        raise EncodingError("compose needs equal encoding and length")
    with ctx.phase("compose"):
        sp, sp2 = gen_sharded_perm_pair(ctx, sigma.n)
        s_shuf = apply_sharded_perm(ctx, sigma, sp)
        opened = check_bijection(open_vec(ctx, s_shuf).astype(np.int64))
        moved = _permute_view(rho, invert_local_perm(opened))
        return apply_inverse_sharded_perm(ctx, moved, sp2)


def invert_elementwise_perm(ctx, pi: SecretVector, out_enc: str | None = None) -> SecretVector:
    """Shared pi^-1 by applying pi to the publicly shared identity.

    The result takes the encoding of the identity vector: `out_enc`, or pi's own.
    """
    _check_perm_vector(pi)
    with ctx.phase("invert"):
        return apply_elementwise_perm(ctx, identity_shared(ctx, pi.n, out_enc or pi.enc), pi)


def convert_elementwise_perm(ctx, pi: SecretVector, target: str) -> SecretVector:
    """Re-encode a shared permutation by shuffling, opening and re-sharing publicly."""
    _check_perm_vector(pi)
    if target == pi.enc:
        raise EncodingError("source and target encodings are equal")
    with ctx.phase("convert_perm"):
        sp, sp2 = gen_sharded_perm_pair(ctx, pi.n)
        shuf = apply_sharded_perm(ctx, pi, sp)
        opened = check_bijection(open_vec(ctx, shuf).astype(np.int64))
        fresh = public(ctx.party, opened.astype(np.uint64), target, PERM_WIDTH)
        return apply_inverse_sharded_perm(ctx, fresh, sp2)


__all__ = [
    "PERM_WIDTH", "is_bijection", "check_bijection", "apply_local_perm", "invert_local_perm",
    "compose_local", "identity_perm", "gen_local_perm", "apply_public_perm", "ShardedPermutation",
    "gen_sharded_perm", "gen_sharded_perm_pair", "apply_sharded_perm", "apply_inverse_sharded_perm",
    "shuffle", "identity_shared", "apply_elementwise_perm", "compose_perms",
    "invert_elementwise_perm", "convert_elementwise_perm",
]
