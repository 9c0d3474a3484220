import random

import pytest
from hypothesis import given, strategies as st

from oracles import h_to_scalar, toy_oracle
from speranza.cocommit import (
    ID_TAG,
    CoCommitGraph,
    coco_commit,
    coco_prove,
    coco_verify,
    edge_list,
    fill_graph,
    identity_scalar,
    verify_graph,
)
from speranza.commitments import generate, verify_eq
from speranza.errors import ProofError
from speranza.group import TOY, TOY_SMALL

ALICE_TOY_SMALL = 772
ALICE_TOY = 342621


@pytest.mark.parametrize("group,expected", [(TOY_SMALL, ALICE_TOY_SMALL), (TOY, ALICE_TOY)])
def test_identity_scalar_frozen(group, expected):
    assert identity_scalar(group, "alice@example.com") == expected
    assert expected == h_to_scalar(ID_TAG, [b"alice@example.com"], group.order)


def test_toy_coco_commit_matches_oracle():
    o = toy_oracle(TOY.order)
    pp = generate(TOY)
    c, _ = coco_commit(pp, "alice@example.com", r=7)
    assert c.c == o.commit(o.dlog(pp.h), ALICE_TOY, 7)


def test_coco_commit_fresh_and_verifying(pp, rng):
    c1, r1 = coco_commit(pp, "alice@x", rng)
    c2, r2 = coco_commit(pp, "alice@x", rng)
    assert c1 != c2
    assert coco_verify(pp, "alice@x", c1, r1) and coco_verify(pp, "alice@x", c2, r2)
    assert not coco_verify(pp, "bob@x", c1, r1)
    c, r = coco_commit(pp, "", rng)
    assert coco_verify(pp, "", c, r)


def test_coco_prove(pp, rng):
    c1, r1 = coco_commit(pp, "alice@x", rng)
    c2, r2 = coco_commit(pp, "alice@x", rng)
    c3, r3 = coco_commit(pp, "alice@x", rng)
    assert verify_eq(pp, c1, c2, coco_prove(pp, "alice@x", c1, r1, c2, r2, rng))
    assert verify_eq(pp, c2, c3, coco_prove(pp, "alice@x", c2, r2, c3, r3, rng))
    cb, rb = coco_commit(pp, "bob@x", rng)
    with pytest.raises(ProofError):
        coco_prove(pp, "alice@x", c1, r1, cb, rb, rng)


def test_edge_list():
    assert edge_list([]) == []
    assert edge_list([[1], [0]]) == [(0, 1)]
    assert edge_list([[1, 2], [], []]) == [(0, 1), (0, 2)]
    with pytest.raises(ValueError):
        edge_list([[0]])
    with pytest.raises(ValueError):
        edge_list([[3]])


def test_fill_graph_shapes(pp, rng):
    empty = fill_graph(pp, [], "a", rng)
    assert empty.nodes == [] and empty.edges == {} and verify_graph(pp, empty)
    one = fill_graph(pp, [[1], []], "a", rng)
    assert len(one.nodes) == 2 and list(one.edges) == [(0, 1)] and verify_graph(pp, one)
    k4 = fill_graph(pp, [[1, 2, 3], [2, 3], [3], []], "a", rng)
    assert len(k4.nodes) == 4 and len(k4.edges) == 6 and verify_graph(pp, k4)
    isolated = fill_graph(pp, [[], [], []], "a", rng)
    assert isolated.edges == {} and verify_graph(pp, isolated)


def test_graph_serialization_strips_keys(pp, rng):
    g = fill_graph(pp, [[1, 2], [2], []], "alice@x", rng)
    data = g.to_bytes(pp.group)
    back = CoCommitGraph.from_bytes(pp.group, data)
    assert back == g.public() and back.keys is None and verify_graph(pp, back)
    for key in g.keys:
        assert key.to_bytes() not in data
    assert b"alice@x" not in data


def test_adversarial_edge_rejected(pp, rng):
    g = fill_graph(pp, [[1, 2], [2], []], "alice@x", rng)
    other = fill_graph(pp, [[1], []], "bob@x", rng)
    g.edges[(0, 1)] = other.edges[(0, 1)]
    assert not verify_graph(pp, g)


def test_bad_index_rejected(pp, rng):
    g = fill_graph(pp, [[1], []], "alice@x", rng)
    g.edges[(1, 5)] = g.edges[(0, 1)]
    assert not verify_graph(pp, g.public())


structures = st.integers(1, 6).flatmap(
    lambda n: st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=10).map(
        lambda pairs: _adjacency(n, pairs)
    )
)


def _adjacency(n, pairs):
    adj = [set() for _ in range(n)]
    for i, j in pairs:
        if i != j:
            adj[i].add(j)
            adj[j].add(i)
    return [sorted(a) for a in adj]


@given(structure=structures, ident=st.text(max_size=20), seed=st.integers(0, 2**32))
def test_fill_graph_always_verifies(structure, ident, seed):
    pp = generate(TOY)
    g = fill_graph(pp, structure, ident, random.Random(seed))
    assert verify_graph(pp, g)
    m = identity_scalar(TOY, ident)
    assert all(coco_verify(pp, ident, c, k) for c, k in zip(g.nodes, g.keys))
    assert all(k.r < TOY.order for k in g.keys) and m < TOY.order


@given(seed=st.integers(0, 2**32))
def test_linkability_no_cross_identity_graph(seed):
    # Adversary holds honest openings for two identities and tries to join
    # them with proofs built without the trapdoor; nothing verifies.
    rng = random.Random(seed)
    pp = generate(TOY)
    a = fill_graph(pp, [[1], []], "alice@x", rng)
    b = fill_graph(pp, [[1], []], "bob@x", rng)
    nodes = a.nodes + b.nodes
    candidates = list(a.edges.values()) + list(b.edges.values())
    for proof in candidates:
        bridged = CoCommitGraph(nodes, {(0, 1): a.edges[(0, 1)], (2, 3): b.edges[(0, 1)], (1, 2): proof})
        assert not verify_graph(pp, bridged)


def test_privacy_fresh_randomness_gives_disjoint_encodings(pp, rng):
    structure = [[1, 2], [2], []]
    runs = [fill_graph(pp, structure, "alice@x", rng).to_bytes(pp.group) for _ in range(3)]
    runs.append(fill_graph(pp, structure, "bob@x", rng).to_bytes(pp.group))
    elen = pp.group.element_len
    chunks = [{r[8 + i * elen: 8 + (i + 1) * elen] for i in range(3)} for r in runs]
    for i in range(len(chunks)):
        for j in range(i + 1, len(chunks)):
            assert not chunks[i] & chunks[j]
    # Equal-length encodings: structure, not identity, fixes the size.
    assert len({len(r) for r in runs}) == 1
