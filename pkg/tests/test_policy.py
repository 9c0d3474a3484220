import itertools
import random
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from conftest import T0
from helpers import committed, endorse_with, threshold_policy
from speranza.commitments import generate
from speranza.errors import DecodeError
from speranza.group import TOY
from speranza.identity import digsig_sign
from speranza.protocols import obtain_certificate, setup_actors
from speranza.record import (
    HEAD,
    Policy,
    PolicyKind,
    change_message,
    check_policy_change,
    check_publish,
    check_registration,
    linked_signers,
    register_message,
)

DIGEST = bytes(range(64))
SIGNERS = ["a@x", "b@x", "c@x"]


def test_policy_validation(actors, rng):
    (c1, _), (c2, _) = committed(actors, ["a", "b"], rng)
    with pytest.raises(ValueError):
        Policy.threshold_of([c1, c2], 3)
    with pytest.raises(ValueError):
        Policy.threshold_of([c1, c2], 0)
    with pytest.raises(ValueError):
        Policy.threshold_of([c1, c1], 1)
    with pytest.raises(ValueError):
        Policy(PolicyKind.SINGLE_OWNER, (c1, c2))
    with pytest.raises(ValueError):
        Policy(PolicyKind.HEAD_SIGNER, (c1,))
    with pytest.raises(ValueError):
        Policy.threshold_of([], 1)


def test_policy_encoding_roundtrip(actors, rng):
    (c1, _), (c2, _), (c3, _) = committed(actors, SIGNERS, rng)
    group = actors.pp.group
    for p in (Policy.single_owner(c1), Policy.threshold_of([c1, c2, c3], 2), Policy.with_head(c1, [c2, c3])):
        data = p.to_bytes()
        assert Policy.from_bytes(group, data) == p
        assert len(p.digest()) == 64
        with pytest.raises(DecodeError):
            Policy.from_bytes(group, data + b"\x00")
    bad_kind = b"\x09" + Policy.single_owner(c1).to_bytes()[1:]
    with pytest.raises(DecodeError):
        Policy.from_bytes(group, bad_kind)
    bad_threshold = Policy.threshold_of([c1, c2], 2).to_bytes()
    bad_threshold = bad_threshold[:1] + b"\x00\x05" + bad_threshold[3:]
    with pytest.raises(DecodeError):
        Policy.from_bytes(group, bad_threshold)


def test_commitment_at_and_quorum(actors, rng):
    (c1, _), (c2, _), (c3, _) = committed(actors, SIGNERS, rng)
    head = Policy.with_head(c1, [c2, c3])
    assert head.commitment_at(HEAD) == c1 and head.commitment_at(1) == c3 and head.commitment_at(2) is None
    assert head.publish_quorum == 1 and head.commitments() == [c2, c3, c1]
    assert Policy.threshold_of([c1, c2, c3], 2).publish_quorum == 2
    assert Policy.single_owner(c1).commitment_at(HEAD) is None


def test_threshold_two_of_three(actors, rng):
    policy, op = threshold_policy(actors, SIGNERS, 2, rng)
    e = [endorse_with(actors, SIGNERS[i], op[i], i, DIGEST, T0, rng) for i in range(3)]
    trust = actors.trust
    assert check_publish(trust, policy, DIGEST, [e[0], e[1]], T0)
    assert check_publish(trust, policy, DIGEST, e, T0)
    assert not check_publish(trust, policy, DIGEST, [e[2]], T0)
    # Two endorsements linking to the same policy commitment count once.
    dup = endorse_with(actors, SIGNERS[0], op[0], 0, DIGEST, T0, rng)
    assert not check_publish(trust, policy, DIGEST, [e[0], dup], T0)
    # A valid endorsement relabelled with another index does not link.
    assert not check_publish(trust, policy, DIGEST, [e[0], replace(e[1], signer_index=0)], T0)
    assert not check_publish(trust, policy, DIGEST, [e[0], replace(e[1], signer_index=7)], T0)
    # Signature over another artifact, or an expired certificate.
    assert not check_publish(trust, policy, bytes(64), [e[0], e[1]], T0)
    assert not check_publish(trust, policy, DIGEST, [e[0], e[1]], T0 + 3600)


def test_outsider_cannot_fill_threshold(actors, rng):
    policy, op = threshold_policy(actors, SIGNERS, 2, rng)
    good = endorse_with(actors, "a@x", op[0], 0, DIGEST, T0, rng)
    mine = committed(actors, ["eve@x"], rng)[0]
    eve = endorse_with(actors, "eve@x", mine, 1, DIGEST, T0, rng)  # proof links to eve's own commitment
    assert not check_publish(actors.trust, policy, DIGEST, [good, eve], T0)


def test_linked_signers(actors, rng):
    policy, op = threshold_policy(actors, SIGNERS, 2, rng)
    e0 = endorse_with(actors, "a@x", op[0], 0, DIGEST, T0, rng)
    e2 = endorse_with(actors, "c@x", op[2], 2, DIGEST, T0, rng)
    assert linked_signers(actors.pp, policy, [e0, e2, e0]) == {0, 2}


def test_head_signer_change_rules(actors, rng):
    (ch, rh), (c1, r1), (c2, r2) = committed(actors, ["head@x", "s1@x", "s2@x"], rng)
    policy = Policy.with_head(ch, [c1, c2])
    new = Policy.single_owner(c1)
    msg = change_message("pkg", 5, new)
    kw = dict(package="pkg", epoch=5, now=T0)
    head = endorse_with(actors, "head@x", (ch, rh), HEAD, msg, T0, rng)
    s1 = endorse_with(actors, "s1@x", (c1, r1), 0, msg, T0, rng)
    s2 = endorse_with(actors, "s2@x", (c2, r2), 1, msg, T0, rng)
    assert check_policy_change(actors.trust, policy, new, [head], **kw)
    assert not check_policy_change(actors.trust, policy, new, [s1, s2], **kw)
    assert not check_policy_change(actors.trust, policy, new, [replace(s1, signer_index=HEAD)], **kw)
    # The signed message binds package, epoch and exact new-policy bytes.
    other = Policy.single_owner(c2)
    assert not check_policy_change(actors.trust, policy, other, [head], **kw)
    assert not check_policy_change(actors.trust, policy, new, [head], package="pkg2", epoch=5, now=T0)
    assert not check_policy_change(actors.trust, policy, new, [head], package="pkg", epoch=6, now=T0)
    # Any listed signer (or the head) may publish.
    pub = endorse_with(actors, "s2@x", (c2, r2), 1, DIGEST, T0, rng)
    assert check_publish(actors.trust, policy, DIGEST, [pub], T0)
    assert check_publish(actors.trust, policy, DIGEST, [endorse_with(actors, "head@x", (ch, rh), HEAD, DIGEST, T0, rng)], T0)


def test_threshold_and_owner_change_rules(actors, rng):
    policy, op = threshold_policy(actors, SIGNERS, 2, rng)
    new = Policy.single_owner(op[0][0])
    msg = change_message("p", 0, new)
    e = [endorse_with(actors, SIGNERS[i], op[i], i, msg, T0, rng) for i in range(3)]
    assert check_policy_change(actors.trust, policy, new, e[:2], package="p", epoch=0, now=T0)
    assert not check_policy_change(actors.trust, policy, new, e[:1], package="p", epoch=0, now=T0)
    owner = Policy.single_owner(op[1][0])
    assert check_policy_change(actors.trust, owner, new, [replace(e[1], signer_index=0)], package="p", epoch=0, now=T0)
    assert not check_policy_change(actors.trust, owner, new, [replace(e[0], signer_index=0)], package="p", epoch=0, now=T0)


def test_check_registration(actors, rng):
    sk, cert, _ = obtain_certificate(actors, "a@x", rng, T0)
    policy = Policy.single_owner(cert.subject)
    sig = digsig_sign(sk, register_message("pkg", 0, policy))
    assert check_registration(actors.trust, "pkg", policy, cert, sig, epoch=0, now=T0)
    assert not check_registration(actors.trust, "other", policy, cert, sig, epoch=0, now=T0)
    assert not check_registration(actors.trust, "pkg", policy, cert, sig, epoch=1, now=T0)
    assert not check_registration(actors.trust, "pkg", policy, cert, sig, epoch=0, now=T0 + 700)
    stranger = Policy.single_owner(committed(actors, ["b@x"], rng)[0][0])
    sig2 = digsig_sign(sk, register_message("pkg", 0, stranger))
    assert not check_registration(actors.trust, "pkg", stranger, cert, sig2, epoch=0, now=T0)


_TOY_ACTORS = None


def _toy_actors():
    global _TOY_ACTORS
    if _TOY_ACTORS is None:
        _TOY_ACTORS = setup_actors(generate(TOY), random.Random(1))
    return _TOY_ACTORS


claims = st.lists(st.tuples(st.sampled_from(SIGNERS + ["eve@x"]), st.integers(0, 2)), max_size=4)


@settings(max_examples=60)
@given(claims=claims, seed=st.integers(0, 2**32))
def test_anonymized_policy_matches_cleartext_rule(claims, seed):
    """2-of-3 over commitments accepts exactly what the cleartext rule accepts."""
    rng = random.Random(seed)
    actors = _toy_actors()
    policy, op = threshold_policy(actors, SIGNERS, 2, rng)
    own = {ident: committed(actors, [ident], rng)[0] for ident in SIGNERS + ["eve@x"]}
    evidence = []
    for ident, index in claims:
        # Honest signers link to their own policy slot; anyone else can only
        # present a proof to a commitment they can open.
        target = op[SIGNERS.index(ident)] if ident == SIGNERS[index] else own[ident]
        evidence.append(endorse_with(actors, ident, target, index, DIGEST, T0, rng))
    cleartext = len({i for ident, i in claims if SIGNERS[i] == ident}) >= 2
    assert check_publish(actors.trust, policy, DIGEST, evidence, T0) == cleartext


def test_all_evidence_subsets_two_of_three(actors, rng):
    policy, op = threshold_policy(actors, SIGNERS, 2, rng)
    honest = [endorse_with(actors, SIGNERS[i], op[i], i, DIGEST, T0, rng) for i in range(3)]
    for k in range(4):
        for subset in itertools.combinations(range(3), k):
            assert check_publish(actors.trust, policy, DIGEST, [honest[i] for i in subset], T0) == (k >= 2)
