"""The authorization record: package -> policy, authenticated by a Merkle trie.

State changes happen only through :meth:`AuthRecord.register` and
:meth:`AuthRecord.update`.  Each accepted change advances the epoch by one and
appends an :class:`UpdateEvent` carrying everything a monitor needs to replay
it from the previous digest alone: the public evidence, the prior policy,
and a lookup proof against the previous root.

Commitment keys handed over at registration are kept in a private map that
never enters any public encoding.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Iterable, Iterator

from ..commitments import Commitment, CommitmentKey
from ..errors import AuthorizationError, DecodeError
from ..group import Group
from ..identity import SIG_LEN, Certificate
from ..wire import Reader, Writer, frame
from .policy import (
    Endorsement,
    Policy,
    TrustRoots,
    check_policy_change,
    check_registration,
)
from .trie import HASH_LEN, LookupProof, MerkleTrie, package_key

DIGEST_TAG = b"speranza/digest/v1"
RECORD_MAGIC = b"SPRZREC1"
EVENT_MAGIC = b"SPRZEVT1"


@dataclass(frozen=True)
class Digest:
    """Root of the record at one epoch, plus monitor countersignatures."""

    root: bytes
    epoch: int
    monitor_sigs: tuple[tuple[str, bytes], ...] = ()

    def message(self) -> bytes:
        return frame(DIGEST_TAG, self.root, self.epoch.to_bytes(8, "big"))

    def unsigned(self) -> Digest:
        return Digest(self.root, self.epoch)

    def with_signature(self, monitor_id: str, sig: bytes) -> Digest:
        return replace(self, monitor_sigs=self.monitor_sigs + ((monitor_id, sig),))

    def to_bytes(self) -> bytes:
        w = Writer().fixed(self.root).u64(self.epoch).u16(len(self.monitor_sigs))
        for monitor_id, sig in self.monitor_sigs:
            w.var(monitor_id.encode("utf-8")).fixed(sig)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> Digest:
        r = Reader(data)
        root, epoch = r.fixed(HASH_LEN), r.u64()
        sigs = tuple((r.var(256).decode("utf-8"), r.fixed(SIG_LEN)) for _ in range(r.u16()))
        r.done()
        return cls(root, epoch, sigs)


class EventKind(IntEnum):
    REGISTER = 1
    UPDATE = 2


@dataclass(frozen=True)
class UpdateEvent:
    kind: EventKind
    package: str
    epoch: int
    timestamp: int
    new_policy: Policy
    prev_root: bytes
    new_root: bytes
    prior_proof: LookupProof
    prior_policy: Policy | None = None
    # REGISTER evidence: the registrant's certificate and request signature.
    cert: Certificate | None = None
    sig: bytes | None = None
    # UPDATE evidence.
    endorsements: tuple[Endorsement, ...] = ()

    def to_bytes(self, group: Group) -> bytes:
        w = Writer().fixed(EVENT_MAGIC).u8(self.kind).var(self.package.encode("utf-8"))
        w.u64(self.epoch).u64(self.timestamp).var(self.new_policy.to_bytes())
        w.fixed(self.prev_root).fixed(self.new_root).var(self.prior_proof.to_bytes())
        if self.kind is EventKind.REGISTER:
            w.var(self.cert.to_bytes()).fixed(self.sig)
        else:
            w.var(self.prior_policy.to_bytes()).u16(len(self.endorsements))
            for e in self.endorsements:
                e.write(group, w)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, group: Group, data: bytes) -> UpdateEvent:
        r = Reader(data)
        if r.fixed(len(EVENT_MAGIC)) != EVENT_MAGIC:
            raise DecodeError("not an update event")
        try:
            kind = EventKind(r.u8())
        except ValueError as exc:
            raise DecodeError(str(exc)) from exc
        package = r.var(4096).decode("utf-8")
        epoch, timestamp = r.u64(), r.u64()
        new_policy = Policy.from_bytes(group, r.var())
        prev_root, new_root = r.fixed(HASH_LEN), r.fixed(HASH_LEN)
        proof = LookupProof.from_bytes(r.var())
        if kind is EventKind.REGISTER:
            cert = Certificate.from_bytes(group, r.var(4096))
            event = cls(kind, package, epoch, timestamp, new_policy, prev_root, new_root, proof,
                        cert=cert, sig=r.fixed(SIG_LEN))
        else:
            prior = Policy.from_bytes(group, r.var())
            endorsements = tuple(Endorsement.read(group, r) for _ in range(r.u16()))
            event = cls(kind, package, epoch, timestamp, new_policy, prev_root, new_root, proof,
                        prior_policy=prior, endorsements=endorsements)
        r.done()
        return event


def verify_lookup(digest: Digest, package: str, result: Policy | None, proof: LookupProof) -> bool:
    """Check a lookup answer (``None`` = absent) against a published digest."""
    value = None if result is None else result.digest()
    return proof.verify(digest.root, package_key(package), value)


@dataclass
class AuthRecord:
    """Repository-side authorization record (single writer)."""

    trust: TrustRoots
    _trie: MerkleTrie = field(repr=False)
    _policies: dict[str, bytes] = field(repr=False)
    epoch: int = 0
    update_log: list[UpdateEvent] = field(default_factory=list, repr=False)
    _private_keys: dict[str, dict[bytes, CommitmentKey]] = field(default_factory=dict, repr=False)
    _last_time: int = 0

    def __post_init__(self) -> None:
        self._lock = threading.RLock()
        self.genesis = Digest(self._trie.root, self.epoch)

    @classmethod
    def initialize(
        cls, trust: TrustRoots, entries: Iterable[tuple[str, Policy]] = (), *, epoch: int = 0
    ) -> AuthRecord:
        """Build a record from existing ``(package, policy)`` pairs, no authorization needed.

        Raises:
            ValueError: on a duplicate package name.
        """
        policies: dict[str, bytes] = {}
        encoded: dict[Policy, bytes] = {}  # shared policies are encoded (and stored) once
        for package, policy in entries:
            if package in policies:
                raise ValueError(f"duplicate package {package!r}")
            pb = encoded.get(policy)
            if pb is None:
                pb = encoded[policy] = policy.to_bytes()
            policies[package] = pb
        return cls._from_encoded(trust, policies, epoch)

    @classmethod
    def _from_encoded(cls, trust: TrustRoots, policies: dict[str, bytes], epoch: int) -> AuthRecord:
        digests: dict[bytes, bytes] = {}

        def value(pb: bytes) -> bytes:
            h = digests.get(pb)
            if h is None:
                h = digests[pb] = hashlib.sha512(pb).digest()
            return h

        trie = MerkleTrie((package_key(name), value(pb)) for name, pb in policies.items())
        return cls(trust, trie, policies, epoch)

    def __len__(self) -> int:
        return len(self._policies)

    def __contains__(self, package: str) -> bool:
        return package in self._policies

    def packages(self) -> Iterator[str]:
        return iter(self._policies)

    @property
    def root(self) -> bytes:
        with self._lock:
            return self._trie.root

    def digest(self) -> Digest:
        with self._lock:
            return Digest(self._trie.root, self.epoch)

    def policy(self, package: str) -> Policy | None:
        pb = self._policies.get(package)
        return None if pb is None else Policy.from_bytes(self.trust.pp.group, pb)

    def lookup(self, package: str) -> tuple[Policy | None, LookupProof]:
        with self._lock:
            return self.policy(package), self._trie.prove(package_key(package))

    # -- private side ---------------------------------------------------

    def private_keys(self, package: str) -> dict[bytes, CommitmentKey]:
        """Commitment keys the repository holds for ``package`` (never published)."""
        return dict(self._private_keys.get(package, {}))

    def store_commitment_key(self, package: str, commitment: Commitment, key: CommitmentKey) -> None:
        self._private_keys.setdefault(package, {})[commitment.c] = key

    # -- transitions ----------------------------------------------------

    def register(
        self,
        package: str,
        cert: Certificate,
        sig: bytes,
        *,
        now: int,
        policy: Policy | None = None,
        commitment_key: CommitmentKey | None = None,
    ) -> UpdateEvent:
        """Register a new package to the certificate's subject (or to ``policy``).

        Raises:
            AuthorizationError: package exists, certificate or signature invalid.
        """
        with self._lock:
            if package in self._policies:
                raise AuthorizationError(f"package {package!r} is already registered")
            if policy is None:
                policy = Policy.single_owner(cert.subject)
            self._check_time(now)
            if not check_registration(self.trust, package, policy, cert, sig, epoch=self.epoch, now=now):
                raise AuthorizationError("registration evidence rejected")
            event = self._apply(EventKind.REGISTER, package, policy, now, cert=cert, sig=sig)
            if commitment_key is not None:
                self.store_commitment_key(package, cert.subject, commitment_key)
            return event

    def update(
        self, package: str, new_policy: Policy, endorsements: Iterable[Endorsement], *, now: int
    ) -> UpdateEvent:
        """Replace a package's policy if the current policy authorizes it.

        Raises:
            AuthorizationError: unknown package or change not authorized.
        """
        endorsements = tuple(endorsements)
        with self._lock:
            current = self.policy(package)
            if current is None:
                raise AuthorizationError(f"package {package!r} is not registered")
            self._check_time(now)
            if not check_policy_change(
                self.trust, current, new_policy, endorsements, package=package, epoch=self.epoch, now=now
            ):
                raise AuthorizationError("policy change not authorized")
            return self._apply(EventKind.UPDATE, package, new_policy, now, endorsements=endorsements)

    def _check_time(self, now: int) -> None:
        if now < self._last_time:
            raise AuthorizationError("event timestamps must not go backwards")

    def _apply(self, kind: EventKind, package: str, policy: Policy, now: int, **evidence) -> UpdateEvent:
        """State-machine step without authorization checks (callers check first)."""
        key = package_key(package)
        prev_root = self._trie.root
        prior_proof = self._trie.prove(key)
        prior_policy = self.policy(package) if kind is EventKind.UPDATE else None
        encoded = policy.to_bytes()
        self._policies[package] = encoded
        self._trie.set(key, policy.digest())
        self.epoch += 1
        self._last_time = now
        event = UpdateEvent(
            kind, package, self.epoch, now, policy, prev_root, self._trie.root, prior_proof,
            prior_policy=prior_policy, **evidence,
        )
        self.update_log.append(event)
        return event

    def replay(self, event: UpdateEvent) -> None:
        """Re-apply a logged event (e.g. when reloading state), re-running every check.

        Raises:
            AuthorizationError: the event does not apply cleanly on top of this record.
        """
        if event.epoch != self.epoch + 1 or event.prev_root != self.root:
            raise AuthorizationError(f"event for epoch {event.epoch} does not extend epoch {self.epoch}")
        if event.kind is EventKind.REGISTER:
            applied = self.register(event.package, event.cert, event.sig, now=event.timestamp,
                                    policy=event.new_policy)
        else:
            applied = self.update(event.package, event.new_policy, event.endorsements, now=event.timestamp)
        if applied.new_root != event.new_root:
            raise AuthorizationError(f"replayed root differs at epoch {event.epoch}")

    # -- public export --------------------------------------------------

    def export_public(self) -> bytes:
        """Everything a mirror may publish: epoch, root and every (package, policy)."""
        with self._lock:
            w = Writer().fixed(RECORD_MAGIC).u64(self.epoch).fixed(self._trie.root)
            w.u64(len(self._policies)).u64(self._last_time)
            for name in sorted(self._policies):
                w.var(name.encode("utf-8")).var(self._policies[name])
            return w.getvalue()

    @classmethod
    def from_public(cls, trust: TrustRoots, data: bytes) -> AuthRecord:
        r = Reader(data)
        if r.fixed(len(RECORD_MAGIC)) != RECORD_MAGIC:
            raise DecodeError("not an authorization-record snapshot")
        epoch, root = r.u64(), r.fixed(HASH_LEN)
        count, last_time = r.u64(), r.u64()
        policies = {}
        for _ in range(count):
            name = r.var(4096).decode("utf-8")
            policies[name] = r.var()
        r.done()
        record = cls._from_encoded(trust, policies, epoch)
        if record.root != root:
            raise DecodeError("snapshot root does not match its entries")
        record._last_time = last_time
        return record
