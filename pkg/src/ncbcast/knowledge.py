"""Per-receiver knowledge state and the structure derived from it."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Set, Tuple

from .gf3 import CoeffVector, KnowledgeBasis


class DisjointSet:
    def __init__(self, items: Iterable[int] = ()):
        self.parent: Dict[int, int] = {}
        for x in items:
            self.parent[x] = x

    def find(self, x: int) -> int:
        self.parent.setdefault(x, x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x: int, y: int) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            # keep the smaller label as root so output order is stable
            if ry < rx:
                rx, ry = ry, rx
            self.parent[ry] = rx

    def groups(self) -> List[FrozenSet[int]]:
        out: Dict[int, Set[int]] = {}
        for x in self.parent:
            out.setdefault(self.find(x), set()).add(x)
        return sorted((frozenset(g) for g in out.values()), key=min)


@dataclass
class ClassPartition:
    """Equivalence classes of one receiver's heard packets.

    ``decoded`` is the class of the fictitious zero packet. ``classes``
    holds the remaining classes of heard packets; unheard packets are
    singletons and are not stored.
    """

    decoded: FrozenSet[int]
    classes: List[FrozenSet[int]] = field(default_factory=list)

    @property
    def nontrivial(self) -> List[FrozenSet[int]]:
        return [c for c in self.classes if len(c) > 1]

    @property
    def deficit(self) -> int:
        return len(self.nontrivial)


class ReceiverState:
    __slots__ = ("id", "basis")

    def __init__(self, rid: int = 1, basis: KnowledgeBasis | None = None):
        self.id = rid
        self.basis = basis if basis is not None else KnowledgeBasis()

    @property
    def rank(self) -> int:
        return self.basis.rank

    def receive(self, v: CoeffVector) -> Tuple[bool, List[int]]:
        """Apply a delivered combination; return (innovative, newly decoded)."""
        return self.basis.absorb(v)

    def is_decoded(self, p: int) -> bool:
        return self.basis.is_decoded(p)

    def decoded_upto(self, m: int) -> bool:
        """True iff every packet 1..m is decoded."""
        return self.basis.floor >= m

    def heard_undecoded(self) -> Set[int]:
        out: Set[int] = set()
        for row in self.basis.coded_rows().values():
            out.update(row)
        return out

    def copy(self) -> "ReceiverState":
        return ReceiverState(self.id, self.basis.copy())

    def __repr__(self) -> str:
        return f"ReceiverState(id={self.id}, {self.basis!r})"


def receive(state: ReceiverState, v: CoeffVector) -> bool:
    return state.receive(v)[0]


def decoded_set(state: ReceiverState) -> Set[int]:
    b = state.basis
    return set(range(1, b.floor + 1)) | set(b.decoded_above_floor())


def heard_set(state: ReceiverState) -> Set[int]:
    return decoded_set(state) | state.heard_undecoded()


def seen_set(state: ReceiverState) -> Set[int]:
    return decoded_set(state) | set(state.basis.coded_rows())


def class_partition(state: ReceiverState, ground: Iterable[int]) -> ClassPartition:
    """Partition by the pairwise relation 'knows p_x + p_y or p_x + 2 p_y'."""
    ground = set(ground)
    decoded = frozenset(p for p in ground if state.is_decoded(p))
    candidates = sorted(p for p in state.heard_undecoded() if p in ground)
    ds = DisjointSet(candidates)
    b = state.basis
    for i, x in enumerate(candidates):
        for y in candidates[i + 1:]:
            if ds.find(x) == ds.find(y):
                continue
            if b.in_span({x: 1, y: 1}) or b.in_span({x: 1, y: 2}):
                ds.union(x, y)
    return ClassPartition(decoded=decoded, classes=ds.groups())


def deficit(state: ReceiverState, ground: Iterable[int]) -> int:
    return class_partition(state, ground).deficit
