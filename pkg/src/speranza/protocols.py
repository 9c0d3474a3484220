"""End-to-end flows: package registration, signing and verification.

The three services are in-process objects: :class:`IdentityProvider`,
:class:`CertificateAuthority` and :class:`Repository`.  A maintainer never
reveals their identity to verifiers; the repository learns it only at login
and keeps just the commitment keys.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

from .cocommit import coco_commit, coco_prove, coco_verify
from .commitments import Commitment, CommitmentKey, PublicParams, generate
from .errors import AuthorizationError, CertificateError, DecodeError
from .group import Group, RandomSource
from .identity import (
    CA_AUDIENCE,
    REPO_AUDIENCE,
    Certificate,
    CertificateAuthority,
    IdentityProvider,
    OIDCToken,
    cert_verify,
    digsig_generate,
    digsig_sign,
    digsig_verify,
    oidc_verify,
)
from .record import (
    HEAD,
    AuthRecord,
    Digest,
    Endorsement,
    LookupProof,
    Policy,
    TrustRoots,
    UpdateEvent,
    change_message,
    check_publish,
    linked_signers,
    quorum_check,
    register_message,
    verify_lookup,
)
from .record.trie import HASH_LEN
from .wire import Reader, Writer

BUNDLE_MAGIC = b"SPRZ1"

#: Verification steps in the order they run; a failed :class:`Verdict` names one.
STEPS = ("digest", "certificate", "lookup", "signature", "co-commitment")


def artifact_digest(data: bytes) -> bytes:
    return hashlib.sha512(data).digest()


def _now(now: int | None) -> int:
    return int(time.time()) if now is None else now


@dataclass(frozen=True)
class SignatureBundle:
    """What a verifier downloads next to an artifact.

    ``endorsements[0]`` is the signer's (certificate, signature, equality
    proof); threshold policies carry one endorsement per co-signer.  The
    bundle pins the record digest its lookup proof was made against.
    """

    package_digest: bytes
    endorsements: tuple[Endorsement, ...]
    policy: Policy
    lookup_proof: LookupProof
    digest_root: bytes
    digest_epoch: int

    @property
    def cert(self) -> Certificate:
        return self.endorsements[0].cert

    @property
    def sig(self) -> bytes:
        return self.endorsements[0].sig

    @property
    def eq_proof(self):
        return self.endorsements[0].eq_proof

    def refreshed(self, policy: Policy, proof: LookupProof, digest: Digest) -> SignatureBundle:
        return replace(self, policy=policy, lookup_proof=proof, digest_root=digest.root, digest_epoch=digest.epoch)

    def to_bytes(self, group: Group) -> bytes:
        w = Writer().fixed(BUNDLE_MAGIC).fixed(self.package_digest).u16(len(self.endorsements))
        for e in self.endorsements:
            e.write(group, w)
        w.var(self.policy.to_bytes()).var(self.lookup_proof.to_bytes())
        return w.fixed(self.digest_root).u64(self.digest_epoch).getvalue()

    @classmethod
    def from_bytes(cls, group: Group, data: bytes) -> SignatureBundle:
        r = Reader(data)
        if r.fixed(len(BUNDLE_MAGIC)) != BUNDLE_MAGIC:
            raise DecodeError("not a signature bundle")
        package_digest = r.fixed(HASH_LEN)
        endorsements = tuple(Endorsement.read(group, r) for _ in range(r.u16()))
        if not endorsements:
            raise DecodeError("bundle carries no endorsement")
        policy = Policy.from_bytes(group, r.var())
        proof = LookupProof.from_bytes(r.var())
        root, epoch = r.fixed(HASH_LEN), r.u64()
        r.done()
        return cls(package_digest, endorsements, policy, proof, root, epoch)


class Repository:
    """Package repository holding the authorization record and published bundles."""

    def __init__(self, trust: TrustRoots, provider_pk: bytes, record: AuthRecord | None = None) -> None:
        self.trust = trust
        self.provider_pk = provider_pk
        self.record = record if record is not None else AuthRecord.initialize(trust)
        self._published: dict[str, list[SignatureBundle]] = {}

    @property
    def pp(self) -> PublicParams:
        return self.trust.pp

    def digest(self) -> Digest:
        return self.record.digest()

    def login(self, token: OIDCToken, now: int) -> str:
        return oidc_verify(self.provider_pk, token, audience=REPO_AUDIENCE, now=now)

    def register(
        self,
        package: str,
        *,
        login: OIDCToken,
        cert: Certificate,
        commitment_key: CommitmentKey,
        sig: bytes,
        now: int,
    ) -> UpdateEvent:
        identity = self.login(login, now)
        # The handed-over key must open the certificate subject to the logged-in identity.
        if not coco_verify(self.pp, identity, cert.subject, commitment_key):
            raise AuthorizationError("commitment key does not open the certificate subject")
        return self.record.register(package, cert, sig, now=now, commitment_key=commitment_key)

    def enroll(self, package: str, *, login: OIDCToken, commitment: Commitment, key: CommitmentKey, now: int) -> None:
        """Deposit a co-signer's commitment key ahead of a policy change naming them."""
        identity = self.login(login, now)
        if not coco_verify(self.pp, identity, commitment, key):
            raise AuthorizationError("commitment key does not open the commitment")
        self.record.store_commitment_key(package, commitment, key)

    def release_key(self, package: str, *, login: OIDCToken, now: int) -> tuple[Commitment, CommitmentKey, int]:
        """Hand the logged-in signer their stored commitment, its key, and its policy index.

        The repository stores no identities: it finds the signer by opening
        each stored commitment with the identity from the login token.
        """
        identity = self.login(login, now)
        policy = self.record.policy(package)
        if policy is None:
            raise AuthorizationError(f"package {package!r} is not registered")
        for c_bytes, key in self.record.private_keys(package).items():
            c = Commitment(c_bytes)
            index = _policy_index(policy, c)
            if index is not None and coco_verify(self.pp, identity, c, key):
                return c, key, index
        raise AuthorizationError(f"{package!r} has no signer matching this login")

    def lookup(self, package: str) -> tuple[Policy | None, LookupProof, Digest]:
        with self.record._lock:
            policy, proof = self.record.lookup(package)
            return policy, proof, self.record.digest()

    def publish(self, package: str, bundle: SignatureBundle, now: int) -> None:
        policy = self.record.policy(package)
        if policy is None:
            raise AuthorizationError(f"package {package!r} is not registered")
        if not check_publish(self.trust, policy, bundle.package_digest, bundle.endorsements, now):
            raise AuthorizationError("bundle does not satisfy the package policy")
        self._published.setdefault(package, []).append(bundle)

    def update(self, package: str, new_policy: Policy, endorsements: Sequence[Endorsement], now: int) -> UpdateEvent:
        return self.record.update(package, new_policy, endorsements, now=now)

    def fetch(self, package: str) -> SignatureBundle:
        """Latest published bundle, with a lookup proof against the current digest."""
        try:
            bundle = self._published[package][-1]
        except (KeyError, IndexError):
            raise KeyError(f"nothing published for {package!r}") from None
        policy, proof, digest = self.lookup(package)
        return bundle.refreshed(policy, proof, digest)


def _policy_index(policy: Policy, c: Commitment) -> int | None:
    # The head slot first: only it can authorize changes to a head-signer policy.
    if policy.head_signer == c:
        return HEAD
    for i, s in enumerate(policy.signers):
        if s == c:
            return i
    return None


@dataclass
class Actors:
    provider: IdentityProvider
    ca: CertificateAuthority
    repo: Repository
    pp: PublicParams = field(init=False)

    def __post_init__(self) -> None:
        self.pp = self.ca.pp

    @property
    def trust(self) -> TrustRoots:
        return self.repo.trust


def setup_actors(pp: PublicParams | None = None, rng: RandomSource | None = None) -> Actors:
    """Fresh provider, CA and empty repository."""
    pp = pp if pp is not None else generate()
    provider = IdentityProvider(digsig_generate(rng))
    ca = CertificateAuthority(digsig_generate(rng), pp, provider.pk)
    repo = Repository(TrustRoots(pp, ca.pk), provider.pk)
    return Actors(provider, ca, repo)


def obtain_certificate(
    actors: Actors, identity: str, rng: RandomSource | None, now: int
) -> tuple[bytes, Certificate, CommitmentKey]:
    """Steps 1-5 shared by every flow: token, ephemeral key pair, certificate.

    Returns ``(signing_key, cert, commitment_key)``.
    """
    token = actors.provider.issue(identity, CA_AUDIENCE, now)
    keys = digsig_generate(rng)
    cert, r = actors.ca.issue(token, keys.pk, now, rng)
    return keys.sk, cert, r


def register_package(
    actors: Actors, identity: str, package: str, rng: RandomSource | None = None, now: int | None = None
) -> UpdateEvent:
    """Register ``package`` to ``identity``.

    Raises:
        TokenError, AuthorizationError: on any rejected step.
    """
    now = _now(now)
    sk, cert, r = obtain_certificate(actors, identity, rng, now)
    policy = Policy.single_owner(cert.subject)
    sig = digsig_sign(sk, register_message(package, actors.repo.record.epoch, policy))
    login = actors.provider.issue(identity, REPO_AUDIENCE, now)
    return actors.repo.register(package, login=login, cert=cert, commitment_key=r, sig=sig, now=now)


def endorse(
    actors: Actors,
    identity: str,
    package: str,
    message: bytes,
    rng: RandomSource | None = None,
    now: int | None = None,
) -> Endorsement:
    """Fresh certificate, signature over ``message``, and a proof linking to the stored commitment."""
    now = _now(now)
    sk, cert, r_cert = obtain_certificate(actors, identity, rng, now)
    sig = digsig_sign(sk, message)
    login = actors.provider.issue(identity, REPO_AUDIENCE, now)
    c_repo, r_repo, index = actors.repo.release_key(package, login=login, now=now)
    proof = coco_prove(actors.pp, identity, c_repo, r_repo, cert.subject, r_cert, rng)
    return Endorsement(cert, sig, proof, index)


def sign_package(
    actors: Actors,
    identity: str,
    package: str,
    artifact: bytes,
    rng: RandomSource | None = None,
    now: int | None = None,
    *,
    cosigners: tuple[str, ...] = (),
) -> SignatureBundle:
    """Sign ``artifact`` as ``identity`` and publish the bundle.

    ``cosigners`` add endorsements for threshold policies.

    Raises:
        AuthorizationError: ``identity`` is not a signer, or the policy is not satisfied.
    """
    now = _now(now)
    digest = artifact_digest(artifact)
    endorsements = tuple(endorse(actors, who, package, digest, rng, now) for who in (identity, *cosigners))
    policy, proof, record_digest = actors.repo.lookup(package)
    bundle = SignatureBundle(digest, endorsements, policy, proof, record_digest.root, record_digest.epoch)
    actors.repo.publish(package, bundle, now)
    return bundle


def propose_signer(
    actors: Actors, identity: str, package: str, rng: RandomSource | None = None, now: int | None = None
) -> Commitment:
    """Commit to ``identity`` and deposit the key with the repository.

    The returned commitment can then be named in a new policy for ``package``.
    """
    now = _now(now)
    c, r = coco_commit(actors.pp, identity, rng)
    login = actors.provider.issue(identity, REPO_AUDIENCE, now)
    actors.repo.enroll(package, login=login, commitment=c, key=r, now=now)
    return c


def change_policy(
    actors: Actors,
    signers: Sequence[str],
    package: str,
    new_policy: Policy,
    rng: RandomSource | None = None,
    now: int | None = None,
) -> UpdateEvent:
    """Replace ``package``'s policy with endorsements from ``signers``.

    Raises:
        AuthorizationError: the current policy does not authorize the change.
    """
    now = _now(now)
    message = change_message(package, actors.repo.record.epoch, new_policy)
    endorsements = [endorse(actors, who, package, message, rng, now) for who in signers]
    return actors.repo.update(package, new_policy, endorsements, now)


@dataclass(frozen=True)
class Verdict:
    ok: bool
    step: str | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        return "OK" if self.ok else f"FAILED at {self.step}: {self.reason}"


def _fail(step: str, reason: str) -> Verdict:
    return Verdict(False, step, reason)


def verify_package(
    ca_pk: bytes,
    pp: PublicParams,
    digest: Digest,
    package: str,
    artifact: bytes,
    bundle: SignatureBundle,
    *,
    now: int | None = None,
    monitor_pks: dict[str, bytes] | None = None,
    quorum: int = 1,
    min_epoch: int | None = None,
) -> Verdict:
    """Verify a downloaded artifact; rejects at the first failing step.

    ``digest`` must be the record digest the client trusts.  Pass
    ``monitor_pks`` to have the monitor quorum checked here, and
    ``min_epoch`` to refuse digests older than one already seen.
    """
    now = _now(now)
    if monitor_pks is not None and not quorum_check(digest, monitor_pks, quorum):
        return _fail("digest", f"fewer than {quorum} monitor signatures")
    if min_epoch is not None and digest.epoch < min_epoch:
        return _fail("digest", f"digest epoch {digest.epoch} older than {min_epoch}")
    if (bundle.digest_root, bundle.digest_epoch) != (digest.root, digest.epoch):
        return _fail("digest", "bundle is pinned to a different record digest")
    if not bundle.endorsements:
        return _fail("certificate", "no endorsement")
    for e in bundle.endorsements:
        try:
            cert_verify(ca_pk, e.cert, now)
        except CertificateError as exc:
            return _fail("certificate", str(exc))
    if not verify_lookup(digest, package, bundle.policy, bundle.lookup_proof):
        return _fail("lookup", "policy not proven against the record digest")
    package_digest = artifact_digest(artifact)
    if package_digest != bundle.package_digest:
        return _fail("signature", "artifact does not match the signed digest")
    for e in bundle.endorsements:
        if not digsig_verify(e.cert.pk, package_digest, e.sig):
            return _fail("signature", "signature over the artifact is invalid")
    linked = linked_signers(pp, bundle.policy, bundle.endorsements)
    if len(linked) < bundle.policy.publish_quorum:
        return _fail("co-commitment", "certificate subject not linked to enough policy signers")
    return Verdict(True)


__all__ = [
    "Actors",
    "Repository",
    "STEPS",
    "SignatureBundle",
    "Verdict",
    "artifact_digest",
    "change_policy",
    "endorse",
    "obtain_certificate",
    "propose_signer",
    "register_package",
    "setup_actors",
    "sign_package",
    "verify_package",
]
