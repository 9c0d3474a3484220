import random
from dataclasses import replace

import pytest

from conftest import T0
from speranza.cocommit import coco_verify
from speranza.commitments import generate
from speranza.errors import CertificateError, DecodeError, TokenError
from speranza.group import RISTRETTO255
from speranza.identity import (
    CA_AUDIENCE,
    CERT_VALIDITY,
    REPO_AUDIENCE,
    TOKEN_MAX_AGE,
    Certificate,
    CertificateAuthority,
    IdentityProvider,
    OIDCToken,
    ca_issue,
    cert_verify,
    digsig_generate,
    digsig_sign,
    digsig_verify,
    oidc_issue,
    oidc_verify,
)


def _flip(data: bytes, bit: int) -> bytes:
    b = bytearray(data)
    b[bit // 8] ^= 1 << (bit % 8)
    return bytes(b)


@pytest.fixture
def infra(rng):
    pp = generate(RISTRETTO255)
    provider = IdentityProvider(digsig_generate(rng))
    ca = CertificateAuthority(digsig_generate(rng), pp, provider.pk)
    return pp, provider, ca


def test_sign_verify_roundtrip(rng):
    k = digsig_generate(rng)
    other = digsig_generate(rng)
    sig = digsig_sign(k.sk, b"")
    assert digsig_verify(k.pk, b"", sig)
    assert not digsig_verify(other.pk, b"", sig)
    assert not digsig_verify(k.pk[:-1], b"", sig)
    assert not digsig_verify(k.pk, b"", sig[:-1])


def test_signature_mutation_fuzz():
    rng = random.Random(11)
    k = digsig_generate(rng)
    accepted = 0
    for _ in range(1000):
        msg = rng.randbytes(rng.randrange(1, 64))
        sig = digsig_sign(k.sk, msg)
        if rng.random() < 0.5:
            accepted += digsig_verify(k.pk, _flip(msg, rng.randrange(8 * len(msg))), sig)
        else:
            accepted += digsig_verify(k.pk, msg, _flip(sig, rng.randrange(512)))
    assert accepted == 0


def test_oidc_roundtrip_and_failures(infra, rng):
    _, provider, _ = infra
    tok = provider.issue("alice@example.com", CA_AUDIENCE, T0)
    assert oidc_verify(provider.pk, tok, audience=CA_AUDIENCE, now=T0 + 10) == "alice@example.com"
    assert OIDCToken.from_bytes(tok.to_bytes()) == tok
    forged = replace(tok, id="mallory@example.com")
    with pytest.raises(TokenError):
        oidc_verify(provider.pk, forged, audience=CA_AUDIENCE, now=T0)
    with pytest.raises(TokenError):
        oidc_verify(provider.pk, tok, audience=REPO_AUDIENCE, now=T0)
    assert oidc_verify(provider.pk, tok, audience=CA_AUDIENCE, now=T0 + TOKEN_MAX_AGE)
    with pytest.raises(TokenError):
        oidc_verify(provider.pk, tok, audience=CA_AUDIENCE, now=T0 + 301)
    with pytest.raises(TokenError):
        oidc_verify(provider.pk, tok, audience=CA_AUDIENCE, now=T0 - 1)
    self_signed = oidc_issue(digsig_generate(rng).sk, "alice@example.com", CA_AUDIENCE, T0)
    with pytest.raises(TokenError):
        oidc_verify(provider.pk, self_signed, audience=CA_AUDIENCE, now=T0)
    with pytest.raises(ValueError):
        provider.issue("", CA_AUDIENCE, T0)
    with pytest.raises(DecodeError):
        OIDCToken.from_bytes(tok.to_bytes() + b"x")


def test_ca_issue_commits_to_identity(infra, rng):
    pp, provider, ca = infra
    signer = digsig_generate(rng)
    tok = provider.issue("alice@example.com", CA_AUDIENCE, T0)
    cert, r = ca.issue(tok, signer.pk, T0, rng)
    assert coco_verify(pp, "alice@example.com", cert.subject, r)
    assert cert.pk == signer.pk and cert.not_after - cert.not_before == CERT_VALIDITY
    assert cert_verify(ca.pk, cert, T0 + 1) == cert.subject
    data = cert.to_bytes()
    assert Certificate.from_bytes(pp.group, data) == cert
    assert b"alice@example.com" not in data and r.to_bytes() not in data
    cert2, _ = ca.issue(tok, signer.pk, T0, rng)
    assert cert2.subject != cert.subject


def test_ca_refuses_bad_tokens(infra, rng):
    pp, provider, ca = infra
    signer = digsig_generate(rng)
    tok = provider.issue("alice@example.com", CA_AUDIENCE, T0)
    with pytest.raises(TokenError):
        ca.issue(tok, signer.pk, T0 + 301, rng)
    with pytest.raises(TokenError):
        ca.issue(provider.issue("alice@example.com", REPO_AUDIENCE, T0), signer.pk, T0, rng)
    with pytest.raises(TokenError):
        ca_issue(ca.keys.sk, provider.pk, replace(tok, id="eve@example.com"), signer.pk, T0, pp, rng)


def test_cert_verify_failures(infra, rng):
    pp, provider, ca = infra
    tok = provider.issue("alice@example.com", CA_AUDIENCE, T0)
    cert, _ = ca.issue(tok, digsig_generate(rng).pk, T0, rng)
    with pytest.raises(CertificateError):
        cert_verify(ca.pk, replace(cert, ca_sig=_flip(cert.ca_sig, 3)), T0)
    assert cert_verify(ca.pk, cert, T0 + 10 * 60)
    with pytest.raises(CertificateError):
        cert_verify(ca.pk, cert, T0 + 11 * 60)
    with pytest.raises(CertificateError):
        cert_verify(ca.pk, cert, T0 - 1)
    with pytest.raises(CertificateError):
        cert_verify(digsig_generate(rng).pk, cert, T0)
    with pytest.raises(CertificateError):
        cert_verify(ca.pk, replace(cert, not_after=T0 + 10_000), T0)
    inverted = Certificate(cert.subject, cert.pk, T0, T0)
    inverted = replace(inverted, ca_sig=digsig_sign(ca.keys.sk, inverted.tbs()))
    with pytest.raises(CertificateError):
        cert_verify(ca.pk, inverted, T0)
