"""Merkle binary prefix trie (CONIKS style) with membership and absence proofs.

Keys are 256-bit hashes of package names; values are 64-byte policy hashes.
The trie shape is canonical for a given key set: a subtree holding no keys
is the empty node, one key is a leaf placed at the shortest unique prefix,
and two or more keys split on the next bit.  The root therefore depends
only on the stored ``(key, value)`` pairs, never on insertion order.

    empty     = H("SPRZ-BPT-E")
    leaf      = H("SPRZ-BPT-L" || key || value)
    internal  = H("SPRZ-BPT-I" || left || right)

with ``H`` = SHA-512.  The in-memory structure is a sorted key list plus a
cache of internal hashes for subtrees with at least :data:`CACHE_MIN` keys;
smaller subtrees are rehashed on demand.
"""

from __future__ import annotations

import hashlib
from bisect import bisect_left, insort
from dataclasses import dataclass
from typing import Iterable

from ..errors import DecodeError
from ..wire import Reader, Writer

KEY_LEN = 32
KEY_BITS = 8 * KEY_LEN
HASH_LEN = 64
CACHE_MIN = 8

_EMPTY_TAG = b"SPRZ-BPT-E"
_LEAF_TAG = b"SPRZ-BPT-L"
_NODE_TAG = b"SPRZ-BPT-I"

EMPTY_HASH = hashlib.sha512(_EMPTY_TAG).digest()


def package_key(name: str) -> bytes:
    return hashlib.sha512(name.encode("utf-8")).digest()[:KEY_LEN]


def leaf_hash(key: bytes, value: bytes) -> bytes:
    return hashlib.sha512(_LEAF_TAG + key + value).digest()


def node_hash(left: bytes, right: bytes) -> bytes:
    return hashlib.sha512(_NODE_TAG + left + right).digest()


def _bit(k: int, depth: int) -> int:
    return (k >> (KEY_BITS - 1 - depth)) & 1


def _k(key: bytes) -> int:
    if len(key) != KEY_LEN:
        raise ValueError(f"trie keys are {KEY_LEN} bytes")
    return int.from_bytes(key, "big")


@dataclass(frozen=True)
class LookupProof:
    """Path from the root to where ``key`` lives (or would live).

    ``siblings[d]`` is the hash of the subtree beside the path at depth
    ``d + 1``; the direction at each level is the corresponding bit of the
    queried key.  The path ends at either a leaf (``leaf_key`` set) or the
    empty node.  A leaf holding a *different* key proves absence, as long as
    it shares the path prefix with the queried key.
    """

    siblings: tuple[bytes, ...]
    leaf_key: bytes | None = None
    leaf_value: bytes | None = None

    @property
    def depth(self) -> int:
        return len(self.siblings)

    def _well_formed(self, k: int) -> bool:
        if self.depth > KEY_BITS or any(len(s) != HASH_LEN for s in self.siblings):
            return False
        if self.leaf_key is None:
            return self.leaf_value is None
        if len(self.leaf_key) != KEY_LEN or self.leaf_value is None or len(self.leaf_value) != HASH_LEN:
            return False
        # The leaf must sit on the queried key's path.
        return (_k(self.leaf_key) ^ k) >> (KEY_BITS - self.depth) == 0

    def _fold(self, k: int, node: bytes, top: int = 0) -> bytes:
        for d in range(self.depth - 1, top - 1, -1):
            sib = self.siblings[d]
            node = node_hash(sib, node) if _bit(k, d) else node_hash(node, sib)
        return node

    def _terminal(self) -> bytes:
        if self.leaf_key is None:
            return EMPTY_HASH
        return leaf_hash(self.leaf_key, self.leaf_value)

    def is_member(self, key: bytes) -> bool:
        return self.leaf_key == key

    def compute_root(self, key: bytes) -> bytes | None:
        k = _k(key)
        if not self._well_formed(k):
            return None
        return self._fold(k, self._terminal())

    def verify(self, root: bytes, key: bytes, value: bytes | None) -> bool:
        """Check that the trie with digest ``root`` maps ``key`` to ``value`` (``None`` = absent)."""
        if value is None:
            if self.leaf_key == key:
                return False
        elif self.leaf_key != key or self.leaf_value != value:
            return False
        return self.compute_root(key) == root

    def root_after(self, key: bytes, value: bytes) -> bytes:
        """Root of the trie after setting ``key -> value``, given this proof against the old root."""
        k = _k(key)
        if not self._well_formed(k):
            raise ValueError("malformed lookup proof")
        new_leaf = leaf_hash(key, value)
        if self.leaf_key is None or self.leaf_key == key:
            return self._fold(k, new_leaf)
        # Split the existing leaf: empty-sibling chain down to the first differing bit.
        t = _k(self.leaf_key)
        split = KEY_BITS - (k ^ t).bit_length()
        old_leaf = self._terminal()
        node = node_hash(old_leaf, new_leaf) if _bit(k, split) else node_hash(new_leaf, old_leaf)
        for d in range(split - 1, self.depth - 1, -1):
            node = node_hash(EMPTY_HASH, node) if _bit(k, d) else node_hash(node, EMPTY_HASH)
        return self._fold(k, node)

    def to_bytes(self) -> bytes:
        # depth | presence bitmap | non-empty siblings | terminal
        bitmap = bytearray((self.depth + 7) // 8)
        present = []
        for d, sib in enumerate(self.siblings):
            if sib != EMPTY_HASH:
                bitmap[d // 8] |= 0x80 >> (d % 8)
                present.append(sib)
        w = Writer().u16(self.depth).fixed(bytes(bitmap)).fixed(b"".join(present))
        if self.leaf_key is None:
            w.u8(0)
        else:
            w.u8(1).fixed(self.leaf_key).fixed(self.leaf_value)
        return w.getvalue()

    @classmethod
    def read(cls, r: Reader) -> LookupProof:
        depth = r.u16()
        if depth > KEY_BITS:
            raise DecodeError("lookup proof deeper than the key length")
        bitmap = r.fixed((depth + 7) // 8)
        siblings = tuple(
            r.fixed(HASH_LEN) if bitmap[d // 8] & (0x80 >> (d % 8)) else EMPTY_HASH
            for d in range(depth)
        )
        kind = r.u8()
        if kind == 0:
            return cls(siblings)
        if kind == 1:
            return cls(siblings, r.fixed(KEY_LEN), r.fixed(HASH_LEN))
        raise DecodeError(f"unknown lookup-proof terminal {kind}")

    @classmethod
    def from_bytes(cls, data: bytes) -> LookupProof:
        r = Reader(data)
        proof = cls.read(r)
        r.done()
        return proof


class MerkleTrie:
    """Mutable trie over ``key -> value`` byte strings (keys 32 bytes, values 64)."""

    def __init__(self, items: Iterable[tuple[bytes, bytes]] = ()) -> None:
        values: dict[int, bytes] = {}
        for key, value in items:
            k = _k(key)
            if k in values:
                raise ValueError(f"duplicate trie key {key.hex()}")
            values[k] = value
        self._values = values
        self._keys = sorted(values)
        self._cache: dict[tuple[int, int], bytes] = {}
        self._cache_depth = 0
        self._root: bytes | None = None

    def __len__(self) -> int:
        return len(self._keys)

    def __contains__(self, key: bytes) -> bool:
        return _k(key) in self._values

    def get(self, key: bytes) -> bytes | None:
        return self._values.get(_k(key))

    def items(self) -> Iterable[tuple[bytes, bytes]]:
        for k in self._keys:
            yield k.to_bytes(KEY_LEN, "big"), self._values[k]

    def set(self, key: bytes, value: bytes) -> None:
        if len(value) != HASH_LEN:
            raise ValueError(f"trie values are {HASH_LEN} bytes")
        k = _k(key)
        if k not in self._values:
            insort(self._keys, k)
        self._values[k] = value
        self._root = None
        for d in range(self._cache_depth + 1):
            self._cache.pop((d, k >> (KEY_BITS - d)), None)

    @property
    def root(self) -> bytes:
        if self._root is None:
            self._root = self._hash(0, 0, len(self._keys))
        return self._root

    def _split(self, depth: int, lo: int, hi: int) -> int:
        prefix = self._keys[lo] >> (KEY_BITS - depth)
        boundary = ((prefix << 1) | 1) << (KEY_BITS - depth - 1)
        return bisect_left(self._keys, boundary, lo, hi)

    def _hash(self, depth: int, lo: int, hi: int) -> bytes:
        n = hi - lo
        if n == 0:
            return EMPTY_HASH
        if n == 1:
            k = self._keys[lo]
            return leaf_hash(k.to_bytes(KEY_LEN, "big"), self._values[k])
        slot = (depth, self._keys[lo] >> (KEY_BITS - depth))
        h = self._cache.get(slot)
        if h is None:
            mid = self._split(depth, lo, hi)
            h = node_hash(self._hash(depth + 1, lo, mid), self._hash(depth + 1, mid, hi))
            if n >= CACHE_MIN:
                self._cache[slot] = h
                if depth > self._cache_depth:
                    self._cache_depth = depth
        return h

    def prove(self, key: bytes) -> LookupProof:
        k = _k(key)
        lo, hi, depth = 0, len(self._keys), 0
        siblings = []
        while hi - lo > 1:
            mid = self._split(depth, lo, hi)
            if _bit(k, depth):
                siblings.append(self._hash(depth + 1, lo, mid))
                lo = mid
            else:
                siblings.append(self._hash(depth + 1, mid, hi))
                hi = mid
            depth += 1
        if hi == lo:
            return LookupProof(tuple(siblings))
        leaf = self._keys[lo]
        return LookupProof(tuple(siblings), leaf.to_bytes(KEY_LEN, "big"), self._values[leaf])
