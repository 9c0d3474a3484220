"""Anonymized ownership policies and the evidence that satisfies them.

Every identity inside a policy is a commitment.  A signer proves they are
one of the policy's signers by presenting a certificate (whose subject is a
fresh commitment to their identity), a signature under the certificate key,
and an equality proof linking the certificate subject to the policy
commitment at ``signer_index``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Sequence

from ..commitments import Commitment, EqualityProof, PublicParams, verify_eq
from ..errors import CertificateError, DecodeError
from ..group import Group
from ..identity import SIG_LEN, Certificate, cert_verify, digsig_verify
from ..wire import Reader, Writer, frame
from .trie import package_key

#: ``Endorsement.signer_index`` value that designates a head-signer policy's head.
HEAD = 0xFFFF
MAX_SIGNERS = 0xFFFE

REGISTER_TAG = b"speranza/register/v1"
CHANGE_TAG = b"speranza/policy-change/v1"


class PolicyKind(IntEnum):
    SINGLE_OWNER = 1
    THRESHOLD = 2
    HEAD_SIGNER = 3


@dataclass(frozen=True)
class Policy:
    kind: PolicyKind
    signers: tuple[Commitment, ...]
    threshold: int = 1
    head_signer: Commitment | None = None

    def __post_init__(self) -> None:
        n = len(self.signers)
        if not 1 <= n <= MAX_SIGNERS:
            raise ValueError("a policy needs between 1 and 65534 signers")
        if len({s.c for s in self.signers}) != n:
            raise ValueError("signer commitments must be pairwise distinct")
        if self.kind is PolicyKind.SINGLE_OWNER:
            if n != 1 or self.threshold != 1 or self.head_signer is not None:
                raise ValueError("single-owner policy has exactly one signer")
        elif self.kind is PolicyKind.THRESHOLD:
            if not 1 <= self.threshold <= n or self.head_signer is not None:
                raise ValueError("threshold must satisfy 1 <= t <= len(signers)")
        elif self.kind is PolicyKind.HEAD_SIGNER:
            if self.head_signer is None or self.threshold != 1:
                raise ValueError("head-signer policy needs a head signer")
        else:
            raise ValueError(f"unknown policy kind {self.kind!r}")

    @classmethod
    def single_owner(cls, owner: Commitment) -> Policy:
        return cls(PolicyKind.SINGLE_OWNER, (owner,))

    @classmethod
    def threshold_of(cls, signers: Sequence[Commitment], threshold: int) -> Policy:
        return cls(PolicyKind.THRESHOLD, tuple(signers), threshold)

    @classmethod
    def with_head(cls, head: Commitment, signers: Sequence[Commitment]) -> Policy:
        return cls(PolicyKind.HEAD_SIGNER, tuple(signers), 1, head)

    @property
    def publish_quorum(self) -> int:
        # Head-signer policies only constrain changes; any one listed signer
        # (the head included) may publish.
        return self.threshold if self.kind is PolicyKind.THRESHOLD else 1

    def commitment_at(self, index: int) -> Commitment | None:
        if index == HEAD:
            return self.head_signer
        if 0 <= index < len(self.signers):
            return self.signers[index]
        return None

    def commitments(self) -> list[Commitment]:
        out = list(self.signers)
        if self.head_signer is not None:
            out.append(self.head_signer)
        return out

    def to_bytes(self) -> bytes:
        w = Writer().u8(self.kind).u16(self.threshold).u16(len(self.signers))
        for s in self.signers:
            w.fixed(s.c)
        if self.head_signer is not None:
            w.fixed(self.head_signer.c)
        return w.getvalue()

    def digest(self) -> bytes:
        return hashlib.sha512(self.to_bytes()).digest()

    @classmethod
    def read(cls, group: Group, r: Reader) -> Policy:
        try:
            kind = PolicyKind(r.u8())
        except ValueError as exc:
            raise DecodeError(str(exc)) from exc
        threshold, n = r.u16(), r.u16()
        signers = tuple(Commitment.from_bytes(group, r.fixed(group.element_len)) for _ in range(n))
        head = None
        if kind is PolicyKind.HEAD_SIGNER:
            head = Commitment.from_bytes(group, r.fixed(group.element_len))
        try:
            return cls(kind, signers, threshold, head)
        except ValueError as exc:
            raise DecodeError(str(exc)) from exc

    @classmethod
    def from_bytes(cls, group: Group, data: bytes) -> Policy:
        r = Reader(data)
        policy = cls.read(group, r)
        r.done()
        return policy


@dataclass(frozen=True)
class Endorsement:
    """One signer's contribution: certificate, signature and linkage proof."""

    cert: Certificate
    sig: bytes
    eq_proof: EqualityProof
    signer_index: int = 0

    def write(self, group: Group, w: Writer) -> None:
        w.var(self.cert.to_bytes()).fixed(self.sig).fixed(self.eq_proof.to_bytes(group))
        w.u16(self.signer_index)

    @classmethod
    def read(cls, group: Group, r: Reader) -> Endorsement:
        cert = Certificate.from_bytes(group, r.var(4096))
        sig = r.fixed(SIG_LEN)
        proof = EqualityProof.from_bytes(group, r.fixed(EqualityProof.size(group)))
        return cls(cert, sig, proof, r.u16())


@dataclass(frozen=True)
class TrustRoots:
    """Public inputs every verifier needs: commitment parameters and the CA key."""

    pp: PublicParams
    ca_pk: bytes


def register_message(package: str, epoch: int, policy: Policy) -> bytes:
    return frame(REGISTER_TAG, package_key(package), epoch.to_bytes(8, "big"), policy.to_bytes())


def change_message(package: str, epoch: int, new_policy: Policy) -> bytes:
    return frame(CHANGE_TAG, package_key(package), epoch.to_bytes(8, "big"), new_policy.to_bytes())


def _endorsement_ok(trust: TrustRoots, e: Endorsement, message: bytes, now: int) -> bool:
    try:
        cert_verify(trust.ca_pk, e.cert, now)
    except CertificateError:
        return False
    return digsig_verify(e.cert.pk, message, e.sig)


def linked_signers(pp: PublicParams, policy: Policy, endorsements: Iterable[Endorsement]) -> set[int]:
    """Indices of policy commitments that some endorsement's equality proof links to."""
    linked = set()
    for e in endorsements:
        if e.signer_index in linked:
            continue
        target = policy.commitment_at(e.signer_index)
        if target is not None and verify_eq(pp, target, e.cert.subject, e.eq_proof):
            linked.add(e.signer_index)
    return linked


def _count_authorized(
    trust: TrustRoots, policy: Policy, endorsements: Iterable[Endorsement], message: bytes, now: int
) -> set[int]:
    valid = [e for e in endorsements if _endorsement_ok(trust, e, message, now)]
    return linked_signers(trust.pp, policy, valid)


def check_publish(
    trust: TrustRoots, policy: Policy, artifact_digest: bytes, endorsements: Sequence[Endorsement], now: int
) -> bool:
    """Whether ``endorsements`` authorize publishing the artifact with this digest."""
    linked = _count_authorized(trust, policy, endorsements, artifact_digest, now)
    return len(linked) >= policy.publish_quorum


def check_policy_change(
    trust: TrustRoots,
    policy: Policy,
    new_policy: Policy,
    endorsements: Sequence[Endorsement],
    *,
    package: str,
    epoch: int,
    now: int,
) -> bool:
    """Whether ``endorsements`` authorize replacing ``policy`` with ``new_policy``.

    Endorsements sign :func:`change_message`, which binds package, epoch and
    the exact bytes of ``new_policy``.
    """
    message = change_message(package, epoch, new_policy)
    if policy.kind is PolicyKind.HEAD_SIGNER:
        heads = [e for e in endorsements if e.signer_index == HEAD]
        return HEAD in _count_authorized(trust, policy, heads, message, now)
    linked = _count_authorized(trust, policy, endorsements, message, now)
    return len(linked) >= policy.threshold


def check_registration(
    trust: TrustRoots, package: str, policy: Policy, cert: Certificate, sig: bytes, *, epoch: int, now: int
) -> bool:
    """A registrant's certificate is valid, its subject is in ``policy``, and it signed the request."""
    try:
        subject = cert_verify(trust.ca_pk, cert, now)
    except CertificateError:
        return False
    if subject not in policy.commitments():
        return False
    return digsig_verify(cert.pk, register_message(package, epoch, policy), sig)
