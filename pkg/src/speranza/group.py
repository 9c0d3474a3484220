"""Prime-order groups used for commitments.

Two backends share one interface:

* :class:`Ristretto255` -- the prime-order group built over Curve25519, backed
  by libsodium.  This is the production group.
* :class:`ToyGroup` -- the order-``q`` subgroup of quadratic residues in
  ``Z_p^*`` with ``p = 2q + 1``.  It is small enough that discrete logs and
  every group equation can be checked by brute force in tests.

Elements are always held in their canonical encoding (``bytes``), so an
element *is* its wire form: equality, hashing and serialization need no
conversion.  Scalars are plain ``int`` values reduced into ``[0, q)``.
The group law is written multiplicatively (``mul``/``exp``).
"""

from __future__ import annotations

import hashlib
import random
from abc import ABC, abstractmethod
from typing import Protocol, Sequence

import pysodium

from .errors import DecodeError

SCALAR_LEN = 32


class RandomSource(Protocol):
    """Anything with ``randbytes`` -- ``random.Random``, ``random.SystemRandom``."""

    def randbytes(self, n: int) -> bytes: ...


_system_rng = random.SystemRandom()


def default_rng(rng: RandomSource | None) -> RandomSource:
    return _system_rng if rng is None else rng


def sha512(data: bytes) -> bytes:
    return hashlib.sha512(data).digest()


class Group(ABC):
    name: str
    order: int
    element_len: int
    identity: bytes
    generator: bytes

    @abstractmethod
    def is_valid(self, data: bytes) -> bool:
        """True iff ``data`` is the canonical encoding of a group element."""

    @abstractmethod
    def mul(self, a: bytes, b: bytes) -> bytes:
        """Group operation ``a * b``."""

    @abstractmethod
    def exp(self, base: bytes, k: int) -> bytes:
        """``base ** k``."""

    @abstractmethod
    def hash_to_element(self, data: bytes) -> bytes:
        """Deterministic element with unknown discrete log relative to the others."""

    def msm2(self, a: int, p: bytes, b: int, q: bytes) -> bytes:
        """``p**a * q**b``."""
        return self.mul(self.exp(p, a), self.exp(q, b))

    def encode_element(self, e: bytes) -> bytes:
        if not self.is_valid(e):
            raise DecodeError(f"not a {self.name} element")
        return bytes(e)

    def decode_element(self, data: bytes) -> bytes:
        data = bytes(data)
        if len(data) != self.element_len:
            raise DecodeError(f"{self.name} element must be {self.element_len} bytes, got {len(data)}")
        if not self.is_valid(data):
            raise DecodeError(f"invalid or non-canonical {self.name} element")
        return data

    def encode_scalar(self, k: int) -> bytes:
        if not 0 <= k < self.order:
            raise ValueError("scalar not reduced")
        return k.to_bytes(SCALAR_LEN, "little")

    def decode_scalar(self, data: bytes) -> int:
        if len(data) != SCALAR_LEN:
            raise DecodeError(f"scalar must be {SCALAR_LEN} bytes")
        k = int.from_bytes(data, "little")
        if k >= self.order:
            raise DecodeError("non-canonical scalar")
        return k

    def random_scalar(self, rng: RandomSource | None = None) -> int:
        # Wide reduction of 512 uniform bits; bias is below 2**-250 for ristretto255.
        return int.from_bytes(default_rng(rng).randbytes(64), "little") % self.order

    def hash_to_scalar(self, domain_tag: bytes, inputs: Sequence[bytes]) -> int:
        """SHA-512 over ``domain_tag`` then length-prefixed inputs, reduced mod q."""
        if not domain_tag:
            raise ValueError("domain tag must be non-empty")
        h = hashlib.sha512(domain_tag)
        for item in inputs:
            h.update(len(item).to_bytes(8, "big"))
            h.update(item)
        return int.from_bytes(h.digest(), "little") % self.order

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


class Ristretto255(Group):
    name = "ristretto255"
    order = 2**252 + 27742317777372353535851937790883648493
    element_len = 32
    identity = bytes(32)

    def __init__(self) -> None:
        self.generator = pysodium.crypto_scalarmult_ristretto255_base((1).to_bytes(32, "little"))

    def is_valid(self, data: bytes) -> bool:
        return len(data) == 32 and pysodium.crypto_core_ristretto255_is_valid_point(bytes(data))

    def mul(self, a: bytes, b: bytes) -> bytes:
        return pysodium.crypto_core_ristretto255_add(a, b)

    def exp(self, base: bytes, k: int) -> bytes:
        k %= self.order
        if k == 0 or base == self.identity:
            return self.identity
        n = k.to_bytes(32, "little")
        if base == self.generator:
            return pysodium.crypto_scalarmult_ristretto255_base(n)
        return pysodium.crypto_scalarmult_ristretto255(n, base)

    def hash_to_element(self, data: bytes) -> bytes:
        return pysodium.crypto_core_ristretto255_from_hash(sha512(data))


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


class ToyGroup(Group):
    """Quadratic residues mod a safe prime ``p = 2q + 1``.  Test use only."""

    def __init__(self, q: int) -> None:
        if q >= 1 << 32:
            raise ValueError("toy group order must stay brute-forceable (< 2**32)")
        if not (_is_prime(q) and _is_prime(2 * q + 1)):
            raise ValueError(f"{q} is not a Sophie Germain prime")
        self.order = q
        self.p = 2 * q + 1
        self.name = f"toy-modp-{q}"
        self.element_len = (self.p.bit_length() + 7) // 8
        self.identity = self._enc(1)
        self.generator = self._enc(4)

    def _enc(self, v: int) -> bytes:
        return v.to_bytes(self.element_len, "big")

    def _dec(self, e: bytes) -> int:
        return int.from_bytes(e, "big")

    def is_valid(self, data: bytes) -> bool:
        if len(data) != self.element_len:
            return False
        v = self._dec(data)
        return 1 <= v < self.p and pow(v, self.order, self.p) == 1

    def mul(self, a: bytes, b: bytes) -> bytes:
        return self._enc(self._dec(a) * self._dec(b) % self.p)

    def exp(self, base: bytes, k: int) -> bytes:
        return self._enc(pow(self._dec(base), k % self.order, self.p))

    def hash_to_element(self, data: bytes) -> bytes:
        counter = 0
        while True:
            v = int.from_bytes(sha512(data + counter.to_bytes(4, "big")), "big") % self.p
            e = v * v % self.p
            if e > 1:
                return self._enc(e)
            counter += 1


RISTRETTO255 = Ristretto255()
#: Smallest toy group: exhaustive (m, r) grids are cheap.
TOY_SMALL = ToyGroup(1019)
#: Largest toy group below 2**20; brute force is still a table of ~1M entries.
TOY = ToyGroup(1048571)

_REGISTRY = {g.name: g for g in (RISTRETTO255, TOY_SMALL, TOY)}


def group_by_name(name: str) -> Group:
    try:
        return _REGISTRY[name]
    except KeyError:
        if name.startswith("toy-modp-"):
            group = ToyGroup(int(name.removeprefix("toy-modp-")))
            _REGISTRY[name] = group
            return group
        raise DecodeError(f"unknown group {name!r}") from None
