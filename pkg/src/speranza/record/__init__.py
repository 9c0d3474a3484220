"""Authorization record: policies, Merkle trie, state machine and monitors."""

from .monitor import Monitor, ReplayResult, Violation, monitor_replay, quorum_check, replay
from .policy import (
    HEAD,
    Endorsement,
    Policy,
    PolicyKind,
    TrustRoots,
    change_message,
    check_policy_change,
    check_publish,
    check_registration,
    linked_signers,
    register_message,
)
from .store import AuthRecord, Digest, EventKind, UpdateEvent, verify_lookup
from .trie import EMPTY_HASH, LookupProof, MerkleTrie, package_key

__all__ = [
    "AuthRecord",
    "Digest",
    "EMPTY_HASH",
    "Endorsement",
    "EventKind",
    "HEAD",
    "LookupProof",
    "MerkleTrie",
    "Monitor",
    "Policy",
    "PolicyKind",
    "ReplayResult",
    "TrustRoots",
    "UpdateEvent",
    "Violation",
    "change_message",
    "check_policy_change",
    "check_publish",
    "check_registration",
    "linked_signers",
    "monitor_replay",
    "package_key",
    "quorum_check",
    "register_message",
    "replay",
    "verify_lookup",
]
