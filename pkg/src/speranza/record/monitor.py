"""Third-party monitors: replay every record change and countersign digests.

A monitor holds no copy of the record.  Starting from a genesis digest it
checks each event against the running root using the event's own lookup
proof, re-runs the public authorization checks, recomputes the new root,
and only then moves on.  Clients accept a digest once a quorum of distinct
monitors has signed it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from ..identity import SigKeypair, digsig_sign, digsig_verify
from .policy import TrustRoots, check_policy_change, check_registration
from .store import Digest, EventKind, UpdateEvent
from .trie import package_key


@dataclass(frozen=True)
class Violation:
    index: int
    check: str
    detail: str = ""

    def __str__(self) -> str:
        return f"event {self.index}: {self.check} check failed ({self.detail})"


@dataclass(frozen=True)
class ReplayResult:
    digest: Digest
    violation: Violation | None = None

    def __bool__(self) -> bool:
        return self.violation is None


def _check_event(trust: TrustRoots, event: UpdateEvent, root: bytes, epoch: int, last_time: int) -> tuple[str, str] | None:
    if event.epoch != epoch + 1:
        return "sequence", f"expected epoch {epoch + 1}, got {event.epoch}"
    if event.prev_root != root:
        return "sequence", "previous root does not match the replayed root"
    if event.timestamp < last_time:
        return "timestamp", "event time goes backwards"
    key = package_key(event.package)
    if event.kind is EventKind.REGISTER:
        if not event.prior_proof.verify(root, key, None):
            return "lookup", "no valid absence proof for a new package"
        if event.cert is None or event.sig is None or not check_registration(
            trust, event.package, event.new_policy, event.cert, event.sig, epoch=epoch, now=event.timestamp
        ):
            return "authorization", "registration evidence rejected"
    else:
        if event.prior_policy is None or not event.prior_proof.verify(root, key, event.prior_policy.digest()):
            return "lookup", "prior policy not proven against the replayed root"
        if not check_policy_change(
            trust, event.prior_policy, event.new_policy, event.endorsements,
            package=event.package, epoch=epoch, now=event.timestamp,
        ):
            return "authorization", "policy change not authorized by the prior policy"
    if event.prior_proof.root_after(key, event.new_policy.digest()) != event.new_root:
        return "digest", "published root differs from the replayed root"
    return None


def replay(trust: TrustRoots, events: Sequence[UpdateEvent], genesis: Digest, expected: Digest | None = None) -> ReplayResult:
    """Replay ``events`` from ``genesis``; report the first violating event.

    If ``expected`` is given (the digest the server published), a mismatch
    with the replayed final state is reported at index ``len(events)``.
    """
    root, epoch, last_time = genesis.root, genesis.epoch, 0
    for i, event in enumerate(events):
        failure = _check_event(trust, event, root, epoch, last_time)
        if failure is not None:
            return ReplayResult(Digest(root, epoch), Violation(i, *failure))
        root, epoch, last_time = event.new_root, event.epoch, event.timestamp
    final = Digest(root, epoch)
    if expected is not None and (expected.root, expected.epoch) != (root, epoch):
        return ReplayResult(final, Violation(len(events), "final-digest", "server digest differs from replay"))
    return ReplayResult(final)


class Monitor:
    def __init__(self, monitor_id: str, keys: SigKeypair, trust: TrustRoots) -> None:
        self.monitor_id = monitor_id
        self.keys = keys
        self.trust = trust

    @property
    def pk(self) -> bytes:
        return self.keys.pk

    def sign(self, digest: Digest) -> Digest:
        return digest.with_signature(self.monitor_id, digsig_sign(self.keys.sk, digest.message()))

    def replay(self, events: Sequence[UpdateEvent], genesis: Digest, expected: Digest | None = None) -> ReplayResult:
        """Replay and, if clean, countersign the final digest (keeping ``expected``'s signatures)."""
        result = replay(self.trust, events, genesis, expected)
        if not result:
            return result
        base = expected if expected is not None else result.digest
        return ReplayResult(self.sign(base))


def monitor_replay(
    events: Sequence[UpdateEvent],
    genesis: Digest,
    monitor: Monitor,
    expected: Digest | None = None,
) -> ReplayResult:
    return monitor.replay(events, genesis, expected)


def quorum_check(digest: Digest, monitor_pks: Mapping[str, bytes], required: int) -> bool:
    """At least ``required`` distinct known monitors signed ``(root, epoch)``."""
    message = digest.message()
    signed = {
        monitor_id
        for monitor_id, sig in digest.monitor_sigs
        if monitor_id in monitor_pks and digsig_verify(monitor_pks[monitor_id], message, sig)
    }
    return len(signed) >= required
