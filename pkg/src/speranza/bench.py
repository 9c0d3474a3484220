"""Benchmark harness: cryptographic microbenchmarks and end-to-end costs.

Timings use :func:`time.perf_counter`, discard one warm-up run, and report
medians in microseconds.  Reports serialize to a stable JSON schema so
runs can be diffed and checked by machines.
"""

from __future__ import annotations

import json
import statistics
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

from .cocommit import coco_commit, coco_prove, identity_scalar
from .commitments import PublicParams, commit, generate, prove_eq, verify, verify_eq
from .group import RandomSource, default_rng
from .identity import digsig_generate, digsig_sign, digsig_verify
from .protocols import Actors, register_package, setup_actors, sign_package, verify_package
from .record import AuthRecord, Monitor, Policy

SCHEMA = "speranza-bench/v1"
MIN_TRIALS = 10
DEFAULT_SIZES = (1_000, 10_000, 100_000, 1_000_000)
POLICY_POOL = 1024
MICRO_OPS = ("ed25519_signature", "pedersen_commitment", "equality_proof", "co_commitment")

_T0 = 1_700_000_000


def _median_us(fn: Callable[[], object], trials: int) -> float:
    fn()  # warm-up
    samples = []
    for _ in range(trials):
        t = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t)
    return statistics.median(samples) * 1e6


@dataclass
class OpRow:
    create_us: float
    verify_us: float
    samples: int
    median: bool = True  # create_us/verify_us are medians over ``samples`` trials


@dataclass
class E2ERow:
    packages: int
    init_s: float
    sign_us: float
    verify_us: float
    proof_bytes: int
    digest_bytes: int
    bundle_bytes: int


@dataclass
class BenchReport:
    group: str
    trials: int
    ops: dict[str, OpRow] = field(default_factory=dict)
    e2e: list[E2ERow] = field(default_factory=list)
    schema: str = SCHEMA

    @property
    def repo_scale(self) -> int:
        return max((row.packages for row in self.e2e), default=0)

    @property
    def sizes(self) -> dict[str, int]:
        if not self.e2e:
            return {}
        row = max(self.e2e, key=lambda r: r.packages)
        return {"proof_bytes": row.proof_bytes, "digest_bytes": row.digest_bytes, "bundle_bytes": row.bundle_bytes}

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "group": self.group,
            "trials": self.trials,
            "ops": {name: asdict(row) for name, row in self.ops.items()},
            "e2e": [asdict(row) for row in self.e2e],
            "sizes": self.sizes,
            "repo_scale": self.repo_scale,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> BenchReport:
        if data.get("schema") != SCHEMA:
            raise ValueError(f"unsupported report schema {data.get('schema')!r}")
        return cls(
            group=data["group"],
            trials=data["trials"],
            ops={name: OpRow(**row) for name, row in data["ops"].items()},
            e2e=[E2ERow(**row) for row in data["e2e"]],
        )

    def table(self) -> str:
        lines = []
        if self.ops:
            lines.append(f"{'operation':<22}{'create (us)':>14}{'verify (us)':>14}{'trials':>8}")
            for name, row in self.ops.items():
                lines.append(f"{name:<22}{row.create_us:>14.1f}{row.verify_us:>14.1f}{row.samples:>8}")
        if self.e2e:
            if lines:
                lines.append("")
            lines.append(
                f"{'packages':>10}{'init (s)':>10}{'sign (us)':>12}{'verify (us)':>13}"
                f"{'proof B':>9}{'digest B':>10}{'bundle B':>10}"
            )
            for r in self.e2e:
                lines.append(
                    f"{r.packages:>10}{r.init_s:>10.2f}{r.sign_us:>12.1f}{r.verify_us:>13.1f}"
                    f"{r.proof_bytes:>9}{r.digest_bytes:>10}{r.bundle_bytes:>10}"
                )
        return "\n".join(lines)


def bench_micro(
    pp: PublicParams | None = None, rng: RandomSource | None = None, trials: int = 100
) -> dict[str, OpRow]:
    """Create/verify medians for the four primitive rows."""
    if trials < MIN_TRIALS:
        raise ValueError(f"need at least {MIN_TRIALS} trials")
    pp = pp if pp is not None else generate()
    rng = default_rng(rng)
    msg = rng.randbytes(64)
    rows: dict[str, OpRow] = {}

    keys = digsig_generate(rng)
    sig = digsig_sign(keys.sk, msg)
    rows["ed25519_signature"] = OpRow(
        _median_us(lambda: digsig_sign(keys.sk, msg), trials),
        _median_us(lambda: digsig_verify(keys.pk, msg, sig), trials),
        trials,
    )

    m = identity_scalar(pp.group, "bench@example.com")
    c1, r1 = commit(pp, m, rng)
    c2, r2 = commit(pp, m, rng)
    rows["pedersen_commitment"] = OpRow(
        _median_us(lambda: commit(pp, m, rng), trials),
        _median_us(lambda: verify(pp, m, c1, r1), trials),
        trials,
    )

    proof = prove_eq(pp, m, c1, r1, c2, r2, rng)
    rows["equality_proof"] = OpRow(
        _median_us(lambda: prove_eq(pp, m, c1, r1, c2, r2, rng), trials),
        _median_us(lambda: verify_eq(pp, c1, c2, proof), trials),
        trials,
    )

    # A co-commitment is a fresh commitment to an identity plus the proof
    # linking it to an existing one.
    ident = "bench@example.com"
    ca, ra = coco_commit(pp, ident, rng)

    def coco_create():
        c, r = coco_commit(pp, ident, rng)
        return c, coco_prove(pp, ident, ca, ra, c, r, rng)

    cb, pi = coco_create()
    rows["co_commitment"] = OpRow(
        _median_us(coco_create, trials),
        _median_us(lambda: verify_eq(pp, ca, cb, pi), trials),
        trials,
    )
    return rows


def synthetic_record(actors: Actors, packages: int, rng: RandomSource | None = None) -> AuthRecord:
    """Record with ``packages`` single-owner entries drawn cyclically from a pool of real commitments."""
    rng = default_rng(rng)
    pool = [
        Policy.single_owner(coco_commit(actors.pp, f"maintainer{i}@example.com", rng)[0])
        for i in range(min(POLICY_POOL, max(packages, 1)))
    ]
    entries = ((f"pkg-{i:08d}", pool[i % len(pool)]) for i in range(packages))
    return AuthRecord.initialize(actors.trust, entries)


def bench_e2e(
    packages: int, rng: RandomSource | None = None, trials: int = 20, pp: PublicParams | None = None
) -> E2ERow:
    """Sign and verify one package in a repository holding ``packages`` others."""
    if trials < MIN_TRIALS:
        raise ValueError(f"need at least {MIN_TRIALS} trials")
    rng = default_rng(rng)
    actors = setup_actors(pp, rng)
    t = time.perf_counter()
    record = synthetic_record(actors, packages, rng)
    _ = record.root
    init_s = time.perf_counter() - t
    actors.repo.record = record

    ident, package, artifact = "signer@example.com", "bench-target", rng.randbytes(4096)
    register_package(actors, ident, package, rng, _T0)
    monitor = Monitor("bench-monitor", digsig_generate(rng), actors.trust)
    digest = monitor.sign(actors.repo.digest())
    monitor_pks = {monitor.monitor_id: monitor.pk}

    bundle = sign_package(actors, ident, package, artifact, rng, _T0)
    sign_us = _median_us(lambda: sign_package(actors, ident, package, artifact, rng, _T0), trials)

    def check():
        verdict = verify_package(
            actors.ca.pk, actors.pp, digest, package, artifact, bundle,
            now=_T0, monitor_pks=monitor_pks, quorum=1,
        )
        if not verdict:
            raise RuntimeError(f"benchmark bundle rejected: {verdict}")

    verify_us = _median_us(check, trials)
    return E2ERow(
        packages=packages,
        init_s=init_s,
        sign_us=sign_us,
        verify_us=verify_us,
        proof_bytes=len(bundle.lookup_proof.to_bytes()),
        digest_bytes=len(digest.root),
        bundle_bytes=len(bundle.to_bytes(actors.pp.group)),
    )


def run(
    sizes: Sequence[int] = DEFAULT_SIZES,
    trials: int = 100,
    rng: RandomSource | None = None,
    pp: PublicParams | None = None,
) -> BenchReport:
    pp = pp if pp is not None else generate()
    report = BenchReport(group=pp.group.name, trials=trials)
    report.ops = bench_micro(pp, rng, trials)
    for n in sizes:
        report.e2e.append(bench_e2e(n, rng, trials, pp))
    return report


__all__ = [
    "BenchReport",
    "DEFAULT_SIZES",
    "E2ERow",
    "MICRO_OPS",
    "OpRow",
    "SCHEMA",
    "bench_e2e",
    "bench_micro",
    "run",
    "synthetic_record",
]
