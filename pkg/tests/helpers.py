"""Shortcuts for building evidence by hand in tests."""

from __future__ import annotations

from speranza.cocommit import coco_commit, coco_prove
from speranza.identity import digsig_sign
from speranza.protocols import Actors, obtain_certificate
from speranza.record import Endorsement, Policy


def committed(actors: Actors, identities, rng):
    """Fresh ``(commitment, key)`` per identity."""
    return [coco_commit(actors.pp, ident, rng) for ident in identities]


def endorse_with(actors: Actors, identity: str, target, index: int, message: bytes, now: int, rng) -> Endorsement:
    """Endorsement by ``identity`` linking its new certificate to ``target = (c, r)``."""
    sk, cert, r_cert = obtain_certificate(actors, identity, rng, now)
    c, r = target
    proof = coco_prove(actors.pp, identity, c, r, cert.subject, r_cert, rng)
    return Endorsement(cert, digsig_sign(sk, message), proof, index)


def threshold_policy(actors: Actors, identities, t: int, rng):
    openings = committed(actors, identities, rng)
    return Policy.threshold_of([c for c, _ in openings], t), openings


def build_history(actors: Actors, events: int, rng, *, updates_every: int = 11, t0: int = 1_700_000_000):
    """Honest history of ``events`` changes, roughly 10 registrations per ownership change.

    Returns the owner of every package at the end.
    """
    from speranza.protocols import change_policy, propose_signer, register_package

    owners: dict[str, str] = {}
    names = []
    for i in range(events):
        now = t0 + i
        if names and i % updates_every == updates_every - 1:
            package = names[rng.randrange(len(names))]
            successor = f"heir{i}@example.com"
            c = propose_signer(actors, successor, package, rng, now)
            change_policy(actors, [owners[package]], package, Policy.single_owner(c), rng, now)
            owners[package] = successor
        else:
            package, owner = f"pkg-{i:05d}", f"dev{i}@example.com"
            register_package(actors, owner, package, rng, now)
            owners[package] = owner
            names.append(package)
    return owners
