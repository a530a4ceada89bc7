"""Three-party replicated secret sharing and the circuits built on it."""
from .context import PartyContext
from .prg import PartySeeds, SeedFabric, Stream, local_perm, mask_of
from .sharing import (ARITH, BOOL, EncodingError, IntegrityError, SecretVector, add, add_public,
                      and_, and_public, concat_bits, concat_rows, deal, from_bits, mul, mul_public,
                      neg, not_, open_bits, open_many, open_vec, or_, products, public, public_const,
                      reconstruct, reshare, share_secret, sub, to_bits, with_width, xor, zeros)
from .circuits import (a2b, and_tree_many, b2a, b2a_bit, b2a_bits, broadcast_bit, convert_column,
                       csa, eq, eq_many, ks_add, lt, lt_many, mux, mux_many, mux_multi)

__all__ = [name for name in dir() if not name.startswith("_")]
