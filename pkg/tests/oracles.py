"""Independent reference implementations used to cross-check the library.

Nothing here imports the package's arithmetic or hashing code.  The toy
oracle works in exponent space: it tabulates ``g**i`` by repeated
multiplication mod ``p``, so every group equation reduces to integer
arithmetic mod ``q`` that can be checked by brute force.
"""

from __future__ import annotations

import hashlib
import struct
from functools import lru_cache


def h_to_scalar(tag: bytes, inputs: list[bytes], q: int) -> int:
    h = hashlib.sha512()
    h.update(tag)
    for item in inputs:
        h.update(struct.pack(">Q", len(item)))
        h.update(item)
    return int.from_bytes(h.digest(), "little") % q


class ToyOracle:
    """Discrete-log tables for the order-``q`` subgroup of ``Z_p*``, ``p = 2q + 1``."""

    def __init__(self, q: int, g: int = 4) -> None:
        self.q, self.p, self.g = q, 2 * q + 1, g
        powers = [1] * q
        x = 1
        for i in range(1, q):
            x = x * g % self.p
            powers[i] = x
        if x * g % self.p != 1:
            raise AssertionError("g does not have order q")
        self.powers = powers
        self.log = {v: i for i, v in enumerate(powers)}
        if len(self.log) != q:
            raise AssertionError("g does not generate a subgroup of order q")

    @property
    def width(self) -> int:
        return (self.p.bit_length() + 7) // 8

    def enc(self, v: int) -> bytes:
        return v.to_bytes(self.width, "big")

    def dlog(self, e: bytes) -> int:
        return self.log[int.from_bytes(e, "big")]

    def elem(self, exponent: int) -> bytes:
        return self.enc(self.powers[exponent % self.q])

    def mul_naive(self, a: bytes, b: bytes) -> bytes:
        return self.enc(int.from_bytes(a, "big") * int.from_bytes(b, "big") % self.p)

    def pow_naive(self, base: bytes, k: int) -> bytes:
        """``base**k`` by ``k`` repeated multiplications (small ``k`` only)."""
        acc = self.enc(1)
        for _ in range(k):
            acc = self.mul_naive(acc, base)
        return acc

    def commit(self, w: int, m: int, r: int) -> bytes:
        """``g**m * h**r`` with ``h = g**w``."""
        return self.elem(m + w * r)

    def transcript(self, w: int, tag: bytes, m: int, r1: int, r2: int, s: tuple[int, int, int]):
        q = self.q
        c1, c2 = self.commit(w, m, r1), self.commit(w, m, r2)
        a1, a2 = self.elem(s[0] + w * s[1]), self.elem(s[0] + w * s[2])
        d = h_to_scalar(tag, [c1, c2, a1, a2], q)
        return c1, c2, a1, a2, (d * m + s[0]) % q, (d * r1 + s[1]) % q, (d * r2 + s[2]) % q

    def check_eq(self, w: int, tag: bytes, c1: bytes, c2: bytes, a1: bytes, a2: bytes, b1: int, b2: int, b3: int) -> bool:
        """Both verification equations, evaluated on discrete logs."""
        q = self.q
        d = h_to_scalar(tag, [c1, c2, a1, a2], q)
        lc1, lc2, la1, la2 = (self.dlog(x) for x in (c1, c2, a1, a2))
        return (la1 + d * lc1) % q == (b1 + w * b2) % q and (la2 + d * lc2) % q == (b1 + w * b3) % q


@lru_cache(maxsize=None)
def toy_oracle(q: int) -> ToyOracle:
    return ToyOracle(q)


# -- Merkle prefix trie ----------------------------------------------------

def _H(*parts: bytes) -> bytes:
    return hashlib.sha512(b"".join(parts)).digest()


EMPTY = _H(b"SPRZ-BPT-E")


def trie_root(items: dict[bytes, bytes], depth: int = 0) -> bytes:
    """Recursive definition: empty, a single leaf, or split on bit ``depth``."""
    if not items:
        return EMPTY
    if len(items) == 1:
        (k, v), = items.items()
        return _H(b"SPRZ-BPT-L", k, v)
    left = {k: v for k, v in items.items() if not _bit(k, depth)}
    right = {k: v for k, v in items.items() if _bit(k, depth)}
    return _H(b"SPRZ-BPT-I", trie_root(left, depth + 1), trie_root(right, depth + 1))


def _bit(key: bytes, i: int) -> int:
    return (key[i // 8] >> (7 - i % 8)) & 1


def name_key(name: str) -> bytes:
    return hashlib.sha512(name.encode()).digest()[:32]
