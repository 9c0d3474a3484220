"""Pedersen commitments and Chaum-Pedersen proofs of commitment equality.

A commitment to ``m`` is ``c = g**m * h**r``.  An :class:`EqualityProof`
shows that two commitments open to the same ``m`` without revealing it; the
challenge is derived Fiat-Shamir style from ``(c1, c2, alpha1, alpha2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import DecodeError, ProofError
from .group import RISTRETTO255, SCALAR_LEN, Group, RandomSource, group_by_name
from .wire import Reader, Writer

NIZK_TAG = b"speranza/chaum-pedersen/v1"
SETUP_SEED = b"speranza/pedersen-setup/v1"


@dataclass(frozen=True)
class PublicParams:
    group: Group
    g: bytes
    h: bytes
    nizk_tag: bytes = NIZK_TAG

    def __post_init__(self) -> None:
        for name, e in (("g", self.g), ("h", self.h)):
            if not self.group.is_valid(e) or e == self.group.identity:
                raise ValueError(f"{name} is not a generator of {self.group.name}")
        if self.g == self.h:
            raise ValueError("g and h must differ")
        if not self.nizk_tag:
            raise ValueError("empty proof domain tag")

    def to_bytes(self) -> bytes:
        w = Writer().var(self.group.name.encode()).fixed(self.g).fixed(self.h).var(self.nizk_tag)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> PublicParams:
        r = Reader(data)
        group = group_by_name(r.var(256).decode())
        g = group.decode_element(r.fixed(group.element_len))
        h = group.decode_element(r.fixed(group.element_len))
        tag = r.var(256)
        r.done()
        try:
            return cls(group, g, h, tag)
        except ValueError as exc:
            raise DecodeError(str(exc)) from exc


def generate(group: Group = RISTRETTO255, seed: bytes = SETUP_SEED) -> PublicParams:
    """Nothing-up-my-sleeve setup: ``g`` is the standard generator, ``h`` is hashed from ``seed``.

    Nobody knows ``log_g h`` because ``h`` comes out of a hash-to-group map.
    """
    return PublicParams(group, group.generator, group.hash_to_element(seed + b"/h"))


@dataclass(frozen=True)
class Commitment:
    c: bytes

    def to_bytes(self) -> bytes:
        return self.c

    @classmethod
    def from_bytes(cls, group: Group, data: bytes) -> Commitment:
        return cls(group.decode_element(data))

    def __repr__(self) -> str:
        return f"Commitment({self.c.hex()[:16]}...)"


@dataclass(frozen=True)
class CommitmentKey:
    r: int

    def to_bytes(self) -> bytes:
        return self.r.to_bytes(SCALAR_LEN, "little")

    def __repr__(self) -> str:
        return "CommitmentKey(<secret>)"


@dataclass(frozen=True)
class EqualityProof:
    alpha1: bytes
    alpha2: bytes
    beta1: int
    beta2: int
    beta3: int

    def to_bytes(self, group: Group) -> bytes:
        return b"".join(
            (
                self.alpha1,
                self.alpha2,
                group.encode_scalar(self.beta1),
                group.encode_scalar(self.beta2),
                group.encode_scalar(self.beta3),
            )
        )

    @classmethod
    def size(cls, group: Group) -> int:
        return 2 * group.element_len + 3 * SCALAR_LEN

    @classmethod
    def from_bytes(cls, group: Group, data: bytes) -> EqualityProof:
        if len(data) != cls.size(group):
            raise DecodeError("equality proof has wrong length")
        r = Reader(data)
        a1 = group.decode_element(r.fixed(group.element_len))
        a2 = group.decode_element(r.fixed(group.element_len))
        b1, b2, b3 = (group.decode_scalar(r.fixed(SCALAR_LEN)) for _ in range(3))
        return cls(a1, a2, b1, b2, b3)


def commit(
    pp: PublicParams, m: int, rng: RandomSource | None = None, *, r: int | None = None
) -> tuple[Commitment, CommitmentKey]:
    """Commit to scalar ``m``.  ``r`` overrides the random opening (tests only)."""
    group = pp.group
    if r is None:
        r = group.random_scalar(rng)
    r %= group.order
    return Commitment(group.msm2(m, pp.g, r, pp.h)), CommitmentKey(r)


def verify(pp: PublicParams, m: int, c: Commitment, key: CommitmentKey) -> bool:
    try:
        return pp.group.msm2(m, pp.g, key.r, pp.h) == c.c
    except ValueError:
        return False


def challenge(pp: PublicParams, c1: bytes, c2: bytes, alpha1: bytes, alpha2: bytes) -> int:
    return pp.group.hash_to_scalar(pp.nizk_tag, (c1, c2, alpha1, alpha2))


def prove_eq(
    pp: PublicParams,
    m: int,
    c1: Commitment,
    r1: CommitmentKey,
    c2: Commitment,
    r2: CommitmentKey,
    rng: RandomSource | None = None,
    *,
    nonces: Sequence[int] | None = None,
) -> EqualityProof:
    """Prove ``c1`` and ``c2`` both open to ``m``.

    Raises:
        ProofError: if either opening does not verify; no proof is produced.
    """
    if not (verify(pp, m, c1, r1) and verify(pp, m, c2, r2)):
        raise ProofError("openings do not match the claimed message")
    group, q = pp.group, pp.group.order
    if nonces is None:
        s1, s2, s3 = (group.random_scalar(rng) for _ in range(3))
    else:
        s1, s2, s3 = (s % q for s in nonces)
    g_s1 = group.exp(pp.g, s1)
    alpha1 = group.mul(g_s1, group.exp(pp.h, s2))
    alpha2 = group.mul(g_s1, group.exp(pp.h, s3))
    d = challenge(pp, c1.c, c2.c, alpha1, alpha2)
    return EqualityProof(
        alpha1,
        alpha2,
        (d * m + s1) % q,
        (d * r1.r + s2) % q,
        (d * r2.r + s3) % q,
    )


def verify_eq(pp: PublicParams, c1: Commitment, c2: Commitment, proof: EqualityProof) -> bool:
    group, q = pp.group, pp.group.order
    if not all(0 <= b < q for b in (proof.beta1, proof.beta2, proof.beta3)):
        return False
    if not all(group.is_valid(e) for e in (c1.c, c2.c, proof.alpha1, proof.alpha2)):
        return False
    try:
        d = challenge(pp, c1.c, c2.c, proof.alpha1, proof.alpha2)
        g_b1 = group.exp(pp.g, proof.beta1)
        lhs1 = group.mul(proof.alpha1, group.exp(c1.c, d))
        if lhs1 != group.mul(g_b1, group.exp(pp.h, proof.beta2)):
            return False
        lhs2 = group.mul(proof.alpha2, group.exp(c2.c, d))
        return lhs2 == group.mul(g_b1, group.exp(pp.h, proof.beta3))
    except ValueError:
        return False
