import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncbcast.gf3 import KnowledgeBasis
from ncbcast.knowledge import (
    DisjointSet,
    ReceiverState,
    class_partition,
    decoded_set,
    deficit,
    heard_set,
    receive,
    seen_set,
)

import oracles


def state(*rows):
    return ReceiverState(1, KnowledgeBasis(rows))


def test_receive_examples():
    s = ReceiverState()
    assert receive(s, {3: 1}) and s.rank == 1
    s = state({1: 1})
    assert not receive(s, {1: 2})
    s = state({1: 1, 2: 1})
    assert receive(s, {2: 1, 3: 1}) and s.rank == 2


def test_decoded_set_examples():
    assert decoded_set(state({1: 1}, {2: 1})) == {1, 2}
    assert decoded_set(state({1: 1, 2: 1})) == set()
    # non-reduced input rows are brought to RREF on insertion
    assert decoded_set(state({1: 1, 2: 1}, {2: 1})) == {1, 2}


def test_heard_set_examples():
    assert heard_set(state({1: 1, 2: 1})) == {1, 2}
    assert heard_set(state()) == set()
    s = state({1: 1, 3: 2}, {2: 1, 3: 1})
    assert heard_set(s) == {1, 2, 3}
    assert heard_set(s) == oracles.heard(oracles.span(s.basis.rows(), 3), 3)


def test_seen_set_examples():
    assert seen_set(state({1: 1, 2: 1})) == {1}
    assert seen_set(state({2: 1})) == {2}
    s = state({1: 1, 3: 2}, {2: 1, 3: 1})
    assert seen_set(s) == {1, 2}
    assert oracles.seen(oracles.span([{1: 1, 3: 2}, {2: 1, 3: 1}], 3), 3) == {1, 2}


def test_class_partition_examples():
    p = class_partition(state({1: 1, 2: 1}), {1, 2})
    assert p.decoded == frozenset() and p.nontrivial == [frozenset({1, 2})] and p.deficit == 1

    p = class_partition(state({1: 1}, {2: 1}), {1, 2})
    assert p.decoded == {1, 2} and p.deficit == 0

    p = class_partition(state({1: 1, 2: 1}, {3: 1, 4: 2}), {1, 2, 3, 4})
    assert p.nontrivial == [frozenset({1, 2}), frozenset({3, 4})] and p.deficit == 2


def test_deficit_examples():
    assert deficit(state(), {1, 2}) == 0
    assert deficit(state({1: 1, 2: 1}), {1, 2}) == 1
    assert deficit(state({1: 1}, {2: 1}), {1, 2}) == 0


def test_heard_but_isolated_packet_is_a_singleton_class():
    p = class_partition(state({1: 1, 2: 1, 3: 1}), {1, 2, 3})
    assert p.classes == [frozenset({1}), frozenset({2}), frozenset({3})]
    assert p.deficit == 0


def test_disjoint_set():
    ds = DisjointSet([1, 2, 3, 4])
    ds.union(4, 2)
    ds.union(3, 1)
    assert ds.groups() == [frozenset({1, 3}), frozenset({2, 4})]
    assert ds.find(4) == 2


def random_state(rng: random.Random, n: int, max_rank: int = 8) -> ReceiverState:
    s = ReceiverState()
    for _ in range(rng.randint(0, 12)):
        size = rng.randint(1, min(n, 3) if rng.random() < 0.7 else n)
        v = {p: rng.randint(1, 2) for p in rng.sample(range(1, n + 1), size)}
        if s.basis.copy().insert(v) and s.rank >= max_rank:
            continue
        s.receive(v)
    return s


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 9), st.randoms(use_true_random=False))
def test_structure_matches_enumeration(n, rnd):
    s = random_state(rnd, n)
    space = oracles.span(s.basis.rows(), n)
    assert s.rank == oracles.rank_of(space) == len(seen_set(s))
    assert seen_set(s) == oracles.seen(space, n)
    assert decoded_set(s) == oracles.decoded(space, n)
    assert heard_set(s) == oracles.heard(space, n)
    assert decoded_set(s) <= seen_set(s) <= heard_set(s)
    zero, classes = oracles.partition(space, range(1, n + 1), n)
    got = class_partition(s, range(1, n + 1))
    assert got.decoded == zero
    assert got.classes == classes


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 9), st.randoms(use_true_random=False))
def test_revealing_one_packet_reveals_its_class(n, rnd):
    s = random_state(rnd, n)
    part = class_partition(s, range(1, n + 1))
    for cls in part.nontrivial:
        probe = s.copy()
        probe.receive({rnd.choice(sorted(cls)): 1})
        assert cls <= decoded_set(probe)
