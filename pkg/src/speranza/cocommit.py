"""Identity co-commitments.

Identity strings are mapped to scalars and committed with Pedersen; two
commitments linked by an equality proof are *co-commitments*.  A connected
graph of co-commitments all hide the same identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .commitments import (
    Commitment,
    CommitmentKey,
    EqualityProof,
    PublicParams,
    commit,
    prove_eq,
    verify,
    verify_eq,
)
from .errors import DecodeError
from .group import Group, RandomSource
from .wire import Reader, Writer

ID_TAG = b"speranza/id/v1"


def identity_scalar(group: Group, identity: str) -> int:
    return group.hash_to_scalar(ID_TAG, [identity.encode("utf-8")])


def coco_commit(
    pp: PublicParams, identity: str, rng: RandomSource | None = None, *, r: int | None = None
) -> tuple[Commitment, CommitmentKey]:
    return commit(pp, identity_scalar(pp.group, identity), rng, r=r)


def coco_verify(pp: PublicParams, identity: str, c: Commitment, key: CommitmentKey) -> bool:
    return verify(pp, identity_scalar(pp.group, identity), c, key)


def coco_prove(
    pp: PublicParams,
    identity: str,
    c1: Commitment,
    r1: CommitmentKey,
    c2: Commitment,
    r2: CommitmentKey,
    rng: RandomSource | None = None,
) -> EqualityProof:
    return prove_eq(pp, identity_scalar(pp.group, identity), c1, r1, c2, r2, rng)


coco_verify_eq = verify_eq


def edge_list(structure: Sequence[Iterable[int]]) -> list[tuple[int, int]]:
    """Canonical ``(i, j)`` edges, ``i < j``, from an undirected adjacency list."""
    n = len(structure)
    edges = set()
    for i, neighbours in enumerate(structure):
        for j in neighbours:
            if not 0 <= j < n:
                raise ValueError(f"node {i} has out-of-range neighbour {j}")
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            edges.add((min(i, j), max(i, j)))
    return sorted(edges)


@dataclass
class CoCommitGraph:
    """Nodes are commitments, edges carry equality proofs.

    ``keys`` holds the openings and exists only on the party that built the
    graph; :meth:`public` strips it.  Edges are keyed ``(i, j)`` with
    ``i < j`` and the proof is over ``(nodes[i], nodes[j])`` in that order.
    """

    nodes: list[Commitment]
    edges: dict[tuple[int, int], EqualityProof] = field(default_factory=dict)
    keys: list[CommitmentKey] | None = None

    def public(self) -> CoCommitGraph:
        return CoCommitGraph(list(self.nodes), dict(self.edges))

    def to_bytes(self, group: Group) -> bytes:
        w = Writer().u32(len(self.nodes)).u32(len(self.edges))
        for node in self.nodes:
            w.fixed(node.c)
        for (i, j), proof in sorted(self.edges.items()):
            w.u32(i).u32(j).fixed(proof.to_bytes(group))
        return w.getvalue()

    @classmethod
    def from_bytes(cls, group: Group, data: bytes) -> CoCommitGraph:
        r = Reader(data)
        n, m = r.u32(), r.u32()
        nodes = [Commitment.from_bytes(group, r.fixed(group.element_len)) for _ in range(n)]
        edges = {}
        for _ in range(m):
            i, j = r.u32(), r.u32()
            edges[(i, j)] = EqualityProof.from_bytes(group, r.fixed(EqualityProof.size(group)))
        r.done()
        if len(edges) != m:
            raise DecodeError("duplicate edge")
        return cls(nodes, edges)


def fill_graph(
    pp: PublicParams, structure: Sequence[Iterable[int]], identity: str, rng: RandomSource | None = None
) -> CoCommitGraph:
    m = identity_scalar(pp.group, identity)
    edges = edge_list(structure)
    openings = [commit(pp, m, rng) for _ in range(len(structure))]
    nodes = [c for c, _ in openings]
    keys = [k for _, k in openings]
    proofs = {
        (i, j): prove_eq(pp, m, nodes[i], keys[i], nodes[j], keys[j], rng) for i, j in edges
    }
    return CoCommitGraph(nodes, proofs, keys)


def verify_graph(pp: PublicParams, graph: CoCommitGraph) -> bool:
    n = len(graph.nodes)
    for (i, j), proof in graph.edges.items():
        if not (0 <= i < j < n):
            return False
        if not verify_eq(pp, graph.nodes[i], graph.nodes[j], proof):
            return False
    return True
