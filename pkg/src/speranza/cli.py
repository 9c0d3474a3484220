"""``speranza`` command-line tool.

All services run in-process against a state directory::

    config.json           monitor ids and quorum
    params.bin            commitment public parameters
    keys/provider.seed    identity-provider signing seed
    keys/ca.seed          CA signing seed
    keys/monitor-<id>.seed
    events.log            append-only record events (u32 length + event)
    snapshots/epoch-NNNNNNNN.bin   public record snapshot every 1000 epochs
    private.keys          repository-private commitment keys
    digest.bin            latest monitor-signed record digest

Timestamps default to the wall clock; ``--at`` pins them (Unix seconds).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Sequence

from . import bench
from .commitments import Commitment, CommitmentKey, PublicParams, generate
from .errors import SperanzaError
from .group import default_rng
from .identity import CertificateAuthority, IdentityProvider, SigKeypair
from .protocols import Actors, Repository, SignatureBundle, register_package, sign_package, verify_package
from .record import AuthRecord, Digest, Monitor, TrustRoots, UpdateEvent, quorum_check, replay, verify_lookup
from .record.trie import EMPTY_HASH
from .wire import Reader, Writer

SNAPSHOT_EVERY = 1000
EXIT_FAIL = 1
EXIT_ERROR = 2


class StateDir:
    def __init__(self, root: Path) -> None:
        self.root = root
        self.keys = root / "keys"
        self.snapshots = root / "snapshots"
        self.events_path = root / "events.log"
        self.digest_path = root / "digest.bin"
        self.private_path = root / "private.keys"

    # -- creation -------------------------------------------------------

    @classmethod
    def create(cls, root: Path, monitors: int, quorum: int) -> StateDir:
        if not 1 <= quorum <= monitors:
            raise ValueError("quorum must be between 1 and the number of monitors")
        state = cls(root)
        if (root / "config.json").exists():
            raise FileExistsError(f"{root} already holds a Speranza state")
        state.keys.mkdir(parents=True, exist_ok=True)
        state.snapshots.mkdir(exist_ok=True)
        rng = default_rng(None)
        pp = generate()
        ids = [f"m{i + 1}" for i in range(monitors)]
        (root / "config.json").write_text(json.dumps({"monitors": ids, "quorum": quorum}, indent=2))
        (root / "params.bin").write_bytes(pp.to_bytes())
        for name in ["provider", "ca", *(f"monitor-{m}" for m in ids)]:
            (state.keys / f"{name}.seed").write_bytes(rng.randbytes(32))
        state.events_path.write_bytes(b"")
        state.private_path.write_bytes(b"")
        state._load()
        state._snapshot(state.actors.repo.record)
        state.save_digest(state.sign_all(state.actors.repo.digest()))
        return state

    @classmethod
    def open(cls, root: Path, *, with_record: bool = True) -> StateDir:
        """Load keys and parameters; ``with_record=False`` skips rebuilding the record (monitors)."""
        if not (root / "config.json").exists():
            raise FileNotFoundError(f"{root} is not a Speranza state directory (run `speranza setup`)")
        state = cls(root)
        state._load(with_record)
        return state

    # -- loading --------------------------------------------------------

    def _keypair(self, name: str) -> SigKeypair:
        return SigKeypair.from_seed((self.keys / f"{name}.seed").read_bytes())

    def _load(self, with_record: bool = True) -> None:
        config = json.loads((self.root / "config.json").read_text())
        self.quorum: int = config["quorum"]
        self.pp = PublicParams.from_bytes((self.root / "params.bin").read_bytes())
        provider = IdentityProvider(self._keypair("provider"))
        ca = CertificateAuthority(self._keypair("ca"), self.pp, provider.pk)
        self.trust = TrustRoots(self.pp, ca.pk)
        self.monitors = [Monitor(m, self._keypair(f"monitor-{m}"), self.trust) for m in config["monitors"]]
        record = self._load_record() if with_record else None
        self.actors = Actors(provider, ca, Repository(self.trust, provider.pk, record))

    def _load_record(self) -> AuthRecord:
        snaps = sorted(self.snapshots.glob("epoch-*.bin"))
        if snaps:
            record = AuthRecord.from_public(self.trust, snaps[-1].read_bytes())
        else:
            record = AuthRecord.initialize(self.trust)
        for event in self.events():
            if event.epoch > record.epoch:
                record.replay(event)
        for package, c, key in self._read_private():
            record.store_commitment_key(package, c, key)
        return record

    def events(self) -> list[UpdateEvent]:
        if not self.events_path.exists():
            return []
        r = Reader(self.events_path.read_bytes())
        out = []
        while r.remaining():
            out.append(UpdateEvent.from_bytes(self.pp.group, r.var()))
        return out

    def _read_private(self) -> list[tuple[str, Commitment, CommitmentKey]]:
        r = Reader(self.private_path.read_bytes() if self.private_path.exists() else b"")
        out = []
        while r.remaining():
            package = r.var(4096).decode("utf-8")
            c = Commitment(r.fixed(self.pp.group.element_len))
            out.append((package, c, CommitmentKey(self.pp.group.decode_scalar(r.fixed(32)))))
        return out

    def digest(self) -> Digest:
        return Digest.from_bytes(self.digest_path.read_bytes())

    @property
    def monitor_pks(self) -> dict[str, bytes]:
        return {m.monitor_id: m.pk for m in self.monitors}

    # -- persistence ----------------------------------------------------

    def sign_all(self, digest: Digest) -> Digest:
        for m in self.monitors:
            digest = m.sign(digest)
        return digest

    def save_digest(self, digest: Digest) -> None:
        self.digest_path.write_bytes(digest.to_bytes())

    def _snapshot(self, record: AuthRecord) -> None:
        (self.snapshots / f"epoch-{record.epoch:08d}.bin").write_bytes(record.export_public())

    def commit_event(self, event: UpdateEvent) -> Digest:
        """Persist ``event`` and have every monitor check it before countersigning."""
        record = self.actors.repo.record
        with self.events_path.open("ab") as f:
            f.write(Writer().var(event.to_bytes(self.pp.group)).getvalue())
        w = Writer()
        for package in record.packages():
            for c, key in record.private_keys(package).items():
                w.var(package.encode("utf-8")).fixed(c).fixed(key.to_bytes())
        self.private_path.write_bytes(w.getvalue())
        if event.epoch % SNAPSHOT_EVERY == 0:
            self._snapshot(record)
        previous = self.digest().unsigned()
        digest = record.digest()
        for m in self.monitors:
            result = m.replay([event], previous, digest)
            if not result:
                raise SperanzaError(f"monitor {m.monitor_id} refused the update: {result.violation}")
            digest = result.digest
        self.save_digest(digest)
        return digest


def _now(args: argparse.Namespace) -> int:
    return int(time.time()) if args.at is None else args.at


def _short(b: bytes) -> str:
    return b.hex()[:16]


def cmd_setup(args: argparse.Namespace) -> int:
    state = StateDir.create(Path(args.state_dir), args.monitors, args.quorum)
    d = state.digest()
    print(f"initialized {state.root} (group {state.pp.group.name}, {len(state.monitors)} monitors, quorum {state.quorum})")
    print(f"genesis root {d.root.hex()}")
    return 0


def cmd_register(args: argparse.Namespace) -> int:
    state = StateDir.open(Path(args.state_dir))
    event = register_package(state.actors, args.id, args.package, now=_now(args))
    digest = state.commit_event(event)
    print(f"registered {args.package} at epoch {digest.epoch}; root {digest.root.hex()}")
    return 0


def cmd_sign(args: argparse.Namespace) -> int:
    state = StateDir.open(Path(args.state_dir))
    artifact = Path(args.artifact)
    bundle = sign_package(state.actors, args.id, args.package, artifact.read_bytes(), now=_now(args))
    out = Path(args.out) if args.out else artifact.with_name(artifact.name + ".sprz")
    out.write_bytes(bundle.to_bytes(state.pp.group))
    print(f"signed {artifact} for {args.package}; bundle written to {out}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    state = StateDir.open(Path(args.state_dir))
    artifact = Path(args.artifact)
    bundle_path = Path(args.bundle) if args.bundle else artifact.with_name(artifact.name + ".sprz")
    bundle = SignatureBundle.from_bytes(state.pp.group, bundle_path.read_bytes())
    digest = state.digest()
    # Pin the bundle to the latest quorum-signed digest with a fresh lookup proof.
    policy, proof = state.actors.repo.record.lookup(args.package)
    if policy is not None:
        bundle = bundle.refreshed(policy, proof, digest)
    verdict = verify_package(
        state.trust.ca_pk, state.pp, digest, args.package, artifact.read_bytes(), bundle,
        now=_now(args), monitor_pks=state.monitor_pks, quorum=state.quorum,
    )
    if not verdict:
        if policy is None:
            verdict = type(verdict)(False, "lookup", f"package {args.package!r} is not registered")
        print(f"verification failed at step {verdict.step}: {verdict.reason}", file=sys.stderr)
        return EXIT_FAIL
    print(f"OK: {artifact} is a valid release of {args.package} (epoch {digest.epoch})")
    return 0


def cmd_lookup(args: argparse.Namespace) -> int:
    state = StateDir.open(Path(args.state_dir))
    digest = state.digest()
    policy, proof = state.actors.repo.record.lookup(args.package)
    ok = verify_lookup(digest, args.package, policy, proof)
    print(f"package:  {args.package}")
    print(f"digest:   epoch {digest.epoch} root {digest.root.hex()}")
    if policy is None:
        print("status:   absent")
    else:
        print(f"status:   registered ({policy.kind.name.lower().replace('_', '-')}, threshold {policy.threshold})")
        for i, c in enumerate(policy.signers):
            print(f"signer {i}: {c.c.hex()}")
        if policy.head_signer is not None:
            print(f"head:     {policy.head_signer.c.hex()}")
    print(f"proof:    {proof.to_bytes().hex()}")
    print(f"proof ok: {'yes' if ok else 'NO'} ({len(proof.to_bytes())} bytes, depth {proof.depth})")
    return 0 if ok else EXIT_FAIL


def cmd_monitor(args: argparse.Namespace) -> int:
    state = StateDir.open(Path(args.state_dir), with_record=False)
    events = state.events()
    genesis = Digest(EMPTY_HASH, 0)
    published = state.digest()
    result = replay(state.trust, events, genesis, published)
    if not result:
        print(f"VIOLATION: {result.violation}", file=sys.stderr)
        return EXIT_FAIL
    for m in state.monitors:
        res = m.replay(events, genesis, published)
        print(f"monitor {m.monitor_id}: replayed {len(events)} events, epoch {res.digest.epoch} root {_short(res.digest.root)}")
    if not quorum_check(published, state.monitor_pks, state.quorum):
        print(f"published digest lacks a quorum of {state.quorum} monitor signatures", file=sys.stderr)
        return EXIT_FAIL
    print(f"published digest carries a quorum of {state.quorum} monitor signatures")
    return 0


def _sizes(packages: int) -> list[int]:
    sizes, n = [], 1000
    while n < packages:
        sizes.append(n)
        n *= 10
    sizes.append(packages)
    return sizes


def cmd_bench(args: argparse.Namespace) -> int:
    report = bench.run(_sizes(args.packages), trials=args.trials)
    print(report.table())
    out = Path(args.out)
    out.write_text(report.to_json() + "\n")
    print(f"\nreport written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="speranza", description="Privacy-preserving package signing.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, fn, help: str, *, state: bool = True, at: bool = False) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help)
        if state:
            p.add_argument("--state-dir", default=".speranza", help="state directory (default: .speranza)")
        if at:
            p.add_argument("--at", "--now", dest="at", type=int, help="Unix timestamp to use instead of the clock")
        p.set_defaults(func=fn)
        return p

    p = add("setup", cmd_setup, "create keys, parameters and an empty record")
    p.add_argument("--monitors", type=int, default=3)
    p.add_argument("--quorum", type=int, default=2)

    p = add("register", cmd_register, "register a package to an identity", at=True)
    p.add_argument("--id", required=True)
    p.add_argument("--package", required=True)

    p = add("sign", cmd_sign, "sign an artifact and write its bundle", at=True)
    p.add_argument("--id", required=True)
    p.add_argument("--package", required=True)
    p.add_argument("--artifact", required=True)
    p.add_argument("--out", help="bundle path (default: <artifact>.sprz)")

    p = add("verify", cmd_verify, "verify an artifact against its bundle", at=True)
    p.add_argument("--package", required=True)
    p.add_argument("--artifact", required=True)
    p.add_argument("--bundle", help="bundle path (default: <artifact>.sprz)")

    p = add("lookup", cmd_lookup, "print a package's policy and lookup proof")
    p.add_argument("--package", required=True)

    add("monitor", cmd_monitor, "replay the event log and check the published digest")

    p = add("bench", cmd_bench, "run micro and end-to-end benchmarks", state=False)
    p.add_argument("--packages", type=int, default=100_000, help="largest repository size")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--out", default="speranza-bench.json", help="JSON report path")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SperanzaError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
