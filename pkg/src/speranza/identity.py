"""Signatures, a mock OIDC provider, certificates and the anonymizing CA.

Certificates use a compact binary layout rather than X.509.  Their subject
is a Pedersen commitment to the requester's identity, never the identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import pysodium

from .cocommit import coco_commit
from .commitments import Commitment, CommitmentKey, PublicParams
from .errors import CertificateError, DecodeError, TokenError
from .group import Group, RandomSource, default_rng
from .wire import Reader, Writer

PK_LEN = 32
SIG_LEN = 64

TOKEN_TAG = b"speranza/oidc-token/v1"
CERT_TAG = b"speranza/cert/v1"

#: Tokens older than this are refused.
TOKEN_MAX_AGE = 300
#: Certificates are short-lived, Sigstore style.
CERT_VALIDITY = 600

CA_AUDIENCE = "speranza-ca"
REPO_AUDIENCE = "speranza-repo"


@dataclass(frozen=True)
class SigKeypair:
    sk: bytes
    pk: bytes

    def __repr__(self) -> str:
        return f"SigKeypair(pk={self.pk.hex()[:16]}...)"

    @classmethod
    def from_seed(cls, seed: bytes) -> SigKeypair:
        pk, sk = pysodium.crypto_sign_seed_keypair(seed)
        return cls(sk, pk)


def digsig_generate(rng: RandomSource | None = None) -> SigKeypair:
    return SigKeypair.from_seed(default_rng(rng).randbytes(32))


def digsig_sign(sk: bytes, msg: bytes) -> bytes:
    return pysodium.crypto_sign_detached(msg, sk)


def digsig_verify(pk: bytes, msg: bytes, sig: bytes) -> bool:
    if len(pk) != PK_LEN or len(sig) != SIG_LEN:
        return False
    try:
        pysodium.crypto_sign_verify_detached(sig, msg, pk)
    except ValueError:
        return False
    return True


@dataclass(frozen=True)
class OIDCToken:
    id: str
    issued_at: int
    audience: str
    sig: bytes

    def payload(self) -> bytes:
        w = Writer().var(TOKEN_TAG).var(self.id.encode("utf-8")).u64(self.issued_at)
        return w.var(self.audience.encode("utf-8")).getvalue()

    def to_bytes(self) -> bytes:
        return self.payload() + self.sig

    @classmethod
    def from_bytes(cls, data: bytes) -> OIDCToken:
        r = Reader(data)
        if r.var(64) != TOKEN_TAG:
            raise DecodeError("not an OIDC token")
        ident = r.var(4096).decode("utf-8")
        issued_at = r.u64()
        audience = r.var(4096).decode("utf-8")
        sig = r.fixed(SIG_LEN)
        r.done()
        return cls(ident, issued_at, audience, sig)


def oidc_issue(provider_sk: bytes, identity: str, audience: str, now: int) -> OIDCToken:
    if not identity:
        raise ValueError("identity must be non-empty")
    unsigned = OIDCToken(identity, now, audience, b"")
    return OIDCToken(identity, now, audience, digsig_sign(provider_sk, unsigned.payload()))


def oidc_verify(
    provider_pk: bytes, tok: OIDCToken, *, audience: str, now: int, max_age: int = TOKEN_MAX_AGE
) -> str:
    """Return the token's identity.

    Raises:
        TokenError: bad signature, wrong audience, expired or future-dated.
    """
    if not digsig_verify(provider_pk, tok.payload(), tok.sig):
        raise TokenError("token signature invalid")
    if tok.audience != audience:
        raise TokenError(f"token audience {tok.audience!r} != {audience!r}")
    if not tok.issued_at <= now <= tok.issued_at + max_age:
        raise TokenError("token expired or not yet valid")
    if not tok.id:
        raise TokenError("token carries an empty identity")
    return tok.id


@dataclass(frozen=True)
class Certificate:
    subject: Commitment
    pk: bytes
    not_before: int
    not_after: int
    ca_sig: bytes = b""

    def tbs(self) -> bytes:
        w = Writer().var(CERT_TAG).var(self.subject.c).fixed(self.pk)
        return w.u64(self.not_before).u64(self.not_after).getvalue()

    def to_bytes(self) -> bytes:
        return self.tbs() + self.ca_sig

    @classmethod
    def from_bytes(cls, group: Group, data: bytes) -> Certificate:
        r = Reader(data)
        cert = cls.read(group, r)
        r.done()
        return cert

    @classmethod
    def read(cls, group: Group, r: Reader) -> Certificate:
        if r.var(64) != CERT_TAG:
            raise DecodeError("not a certificate")
        subject = Commitment.from_bytes(group, r.var(group.element_len))
        return cls(subject, r.fixed(PK_LEN), r.u64(), r.u64(), r.fixed(SIG_LEN))


def ca_issue(
    ca_sk: bytes,
    provider_pk: bytes,
    tok: OIDCToken,
    signer_pk: bytes,
    now: int,
    pp: PublicParams,
    rng: RandomSource | None = None,
    *,
    validity: int = CERT_VALIDITY,
) -> tuple[Certificate, CommitmentKey]:
    """Issue a certificate whose subject commits to the token's identity.

    The commitment key goes back to the requester only; the CA keeps nothing.

    Raises:
        TokenError: if the token does not verify.
    """
    identity = oidc_verify(provider_pk, tok, audience=CA_AUDIENCE, now=now)
    if len(signer_pk) != PK_LEN:
        raise ValueError("signer public key must be 32 bytes")
    c, r = coco_commit(pp, identity, rng)
    unsigned = Certificate(c, signer_pk, now, now + validity)
    cert = Certificate(c, signer_pk, now, now + validity, digsig_sign(ca_sk, unsigned.tbs()))
    return cert, r


def cert_verify(ca_pk: bytes, cert: Certificate, now: int) -> Commitment:
    """Return the certificate subject.

    Raises:
        CertificateError: bad CA signature or ``now`` outside the validity window.
    """
    if not cert.not_before < cert.not_after:
        raise CertificateError("empty validity window")
    if not digsig_verify(ca_pk, cert.tbs(), cert.ca_sig):
        raise CertificateError("CA signature invalid")
    if cert.not_before >= cert.not_after:
        raise CertificateError("empty validity window")
    if not cert.not_before <= now <= cert.not_after:
        raise CertificateError("certificate not valid at this time")
    return cert.subject


class IdentityProvider:
    """Mock OIDC provider: signs tokens for whatever identity it is asked for."""

    def __init__(self, keys: SigKeypair) -> None:
        self.keys = keys

    @property
    def pk(self) -> bytes:
        return self.keys.pk

    def issue(self, identity: str, audience: str, now: int) -> OIDCToken:
        return oidc_issue(self.keys.sk, identity, audience, now)


class CertificateAuthority:
    """Stateless anonymizing CA."""

    def __init__(self, keys: SigKeypair, pp: PublicParams, provider_pk: bytes) -> None:
        self.keys = keys
        self.pp = pp
        self.provider_pk = provider_pk

    @property
    def pk(self) -> bytes:
        return self.keys.pk

    def issue(
        self, tok: OIDCToken, signer_pk: bytes, now: int, rng: RandomSource | None = None
    ) -> tuple[Certificate, CommitmentKey]:
        return ca_issue(self.keys.sk, self.provider_pk, tok, signer_pk, now, self.pp, rng)
