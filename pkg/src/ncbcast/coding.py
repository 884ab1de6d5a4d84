"""Sender-side choice of the coded packet for each slot.

The sender sees every receiver's knowledge exactly (perfect feedback) and
picks a GF(3) combination of at most three queued packets. Receivers are
numbered 1..3; ``m`` is the largest receiver rank and the receivers at
rank ``m`` are the leaders.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, List, Optional, Sequence, Tuple

from .gf3 import CoeffVector, format_vector
from .knowledge import ReceiverState


class InvariantViolation(RuntimeError):
    """A property the algorithm is supposed to maintain did not hold."""

    def __init__(self, kind: str, message: str, dump: Optional[dict] = None):
        super().__init__(f"{kind}: {message}")
        self.kind = kind
        self.dump = dump or {}


class NoValidCoefficients(InvariantViolation):
    def __init__(self, message: str, dump: Optional[dict] = None):
        super().__init__("no_valid_coefficients", message, dump)


class CaseLabel(str, enum.Enum):
    ALL_LEADERS = "ALL_LEADERS"
    TWO_LEADERS_DELEGATE = "TWO_LEADERS_DELEGATE"
    TWO_LEADERS_A = "TWO_LEADERS_A"
    TWO_LEADERS_B = "TWO_LEADERS_B"
    TWO_LEADERS_C = "TWO_LEADERS_C"
    UL_CASE1 = "UL_CASE1"
    UL_CASE2 = "UL_CASE2"
    UL_CASE3 = "UL_CASE3"
    UL_CASE4 = "UL_CASE4"
    UL_CASE5 = "UL_CASE5"
    UL_CASE6 = "UL_CASE6"
    UL_CASE7 = "UL_CASE7"
    UL_CASE8 = "UL_CASE8"
    UL_CASE9 = "UL_CASE9"
    UL_CASE10 = "UL_CASE10"
    IDLE = "IDLE"


UL_CASES = tuple(CaseLabel[f"UL_CASE{k}"] for k in range(1, 11))


@dataclass(frozen=True)
class NineSetPartition:
    """The sets S1..S9 seen from the two non-leaders.

    ``sets[k]`` is S_{k+1} as an ascending list. Unless the partition was
    built with ``complete=True``, S1 only lists packets still queued at the
    sender; every dropped packet belongs to S1 as well.
    """

    sets: Tuple[List[int], ...]
    non_leaders: Tuple[int, int]
    universe_max: int

    def __getitem__(self, k: int) -> List[int]:
        return self.sets[k - 1]

    def locate(self, p: int) -> int:
        for k, s in enumerate(self.sets, start=1):
            if p in s:
                return k
        return 1

    @property
    def h1_minus_d1(self) -> List[int]:
        return sorted(self[3] + self[4] + self[7])

    @property
    def h2_minus_d2(self) -> List[int]:
        return sorted(self[2] + self[4] + self[8])


@dataclass(frozen=True)
class TransmissionPlan:
    support: Tuple[int, ...] = ()
    coeffs: Tuple[int, ...] = ()
    case: CaseLabel = CaseLabel.IDLE
    # unique-leader label reached through two-leader delegation
    subcase: Optional[CaseLabel] = None
    # a case's preference list ran dry and p_{m+1} went out alone
    fallback: bool = False
    partition: Optional[NineSetPartition] = field(default=None, compare=False, repr=False)

    @property
    def idle(self) -> bool:
        return not self.support

    @property
    def vector(self) -> CoeffVector:
        return dict(zip(self.support, self.coeffs))

    def __str__(self) -> str:
        return f"{self.case.value} {format_vector(self.vector)}"


IDLE_PLAN = TransmissionPlan()


class SenderView:
    """What the sender knows at the start of a slot.

    ``queue`` lists the packets not yet decoded by all receivers in
    ascending order. When omitted it is recomputed from the receivers,
    which costs O(arrived) and is meant for small hand-built states.
    """

    def __init__(
        self,
        arrived: int,
        receivers: Sequence[ReceiverState],
        queue: Optional[Iterable[int]] = None,
    ):
        if len(receivers) != 3:
            raise ValueError("the coding module serves exactly three receivers")
        self.arrived = arrived
        self.receivers = tuple(receivers)
        if queue is None:
            queue = [
                p for p in range(1, arrived + 1)
                if not all(r.is_decoded(p) for r in self.receivers)
            ]
        self.queue = list(queue)
        self.ranks = tuple(r.rank for r in self.receivers)
        self.m = max(self.ranks)
        self.leaders = tuple(i + 1 for i, k in enumerate(self.ranks) if k == self.m)
        # receivers that do not yet know everything the sender knows
        self.needy = tuple(r for r, k in zip(self.receivers, self.ranks) if k < arrived)

    def rx(self, rid: int) -> ReceiverState:
        return self.receivers[rid - 1]

    @property
    def next_arrived(self) -> bool:
        """Whether p_{m+1} is at the sender."""
        return self.arrived > self.m

    def dump(self) -> dict:
        return {
            "arrived": self.arrived,
            "ranks": list(self.ranks),
            "queue": list(self.queue),
            "receivers": [
                {
                    "floor": r.basis.floor,
                    "decoded_above_floor": sorted(r.basis.decoded_above_floor()),
                    "rows": {str(p): format_vector(row) for p, row in sorted(r.basis.coded_rows().items())},
                }
                for r in self.receivers
            ],
        }


def compute_leaders(view: SenderView) -> Tuple[int, Tuple[int, ...]]:
    return view.m, view.leaders


def nine_sets(d1: set, h1: set, d2: set, h2: set, universe: set) -> Tuple[set, ...]:
    """S1..S9 straight from the set definitions."""
    u1, u2 = h1 - d1, h2 - d2
    return (
        d1 & d2 & universe,
        d1 & u2 & universe,
        d2 & u1 & universe,
        u1 & u2 & universe,
        (d1 - h2) & universe,
        (d2 - h1) & universe,
        (u1 - h2) & universe,
        (u2 - h1) & universe,
        universe - (h1 | h2),
    )


def partition_sets(
    view: SenderView, leader: Optional[int] = None, complete: bool = False
) -> NineSetPartition:
    if leader is None:
        if len(view.leaders) != 1:
            raise ValueError("partition_sets needs a unique leader")
        leader = view.leaders[0]
    n1, n2 = (i for i in (1, 2, 3) if i != leader)
    r1, r2 = view.rx(n1), view.rx(n2)
    hu1, hu2 = r1.heard_undecoded(), r2.heard_undecoded()
    f1, f2 = r1.basis.floor, r2.basis.floor
    x1, x2 = r1.basis.decoded_above_floor(), r2.basis.decoded_above_floor()
    top = view.m + 1 if view.next_arrived else view.m
    packets = range(1, top + 1) if complete else [p for p in view.queue if p <= top]
    sets: Tuple[List[int], ...] = tuple([] for _ in range(9))
    for p in packets:
        d1 = p <= f1 or p in x1
        d2 = p <= f2 or p in x2
        u1, u2 = p in hu1, p in hu2
        if d1:
            k = 1 if d2 else (2 if u2 else 5)
        elif d2:
            k = 3 if u1 else 6
        elif u1:
            k = 4 if u2 else 7
        else:
            k = 8 if u2 else 9
        sets[k - 1].append(p)
    return NineSetPartition(sets, (n1, n2), top)


def choose_coefficients(support: Sequence[int], view: SenderView) -> Tuple[int, ...]:
    """Lexicographically first coefficients in {1, 2} that are innovative to
    every receiver that does not yet know everything the sender knows."""
    if not 1 <= len(support) <= 3:
        raise ValueError(f"support size {len(support)} outside 1..3")
    needy = view.needy
    for coeffs in itertools.product((1, 2), repeat=len(support)):
        v = dict(zip(support, coeffs))
        if not any(r.basis.in_span(v) for r in needy):
            return coeffs
    raise NoValidCoefficients(f"no coefficients over support {list(support)}", view.dump())


def _plan(view: SenderView, support: Iterable[int], case: CaseLabel, **kw) -> TransmissionPlan:
    support = tuple(sorted(set(support)))
    if not support:
        # keep the branch that chose to idle for diagnostics
        return TransmissionPlan(case=CaseLabel.IDLE, subcase=case, partition=kw.get("partition"))
    return TransmissionPlan(support, choose_coefficients(support, view), case, **kw)


def select_all_leaders(view: SenderView) -> TransmissionPlan:
    if not view.next_arrived:
        return IDLE_PLAN
    top = view.m + 1
    support = []
    for r in view.receivers:
        unseen = [p for p in view.queue if p <= top and not r.basis.is_seen(p)]
        if len(unseen) != 1:
            raise InvariantViolation(
                "all_leaders_unseen",
                f"receiver {r.id} has {len(unseen)} unseen packets in 1..{top}",
                view.dump(),
            )
        support.append(unseen[0])
    return _plan(view, support, CaseLabel.ALL_LEADERS)


def _oldest_undecoded(view: SenderView, r: ReceiverState) -> Optional[int]:
    heard = r.heard_undecoded()
    if heard:
        return min(heard)
    for p in view.queue:
        if not r.is_decoded(p):
            return p
    return None


def select_two_leaders(view: SenderView) -> TransmissionPlan:
    a, b = view.leaders
    (n,) = (i for i in (1, 2, 3) if i not in view.leaders)
    m = view.m
    done_a, done_b = view.rx(a).decoded_upto(m), view.rx(b).decoded_upto(m)
    if not (done_a or done_b):
        raise InvariantViolation(
            "leader_decode", f"neither leader {a} nor {b} has decoded 1..{m}", view.dump()
        )
    if done_a != done_b:
        sub = select_unique_leader(view, leader=a if done_a else b)
        if sub.idle:
            return sub
        return replace(sub, case=CaseLabel.TWO_LEADERS_DELEGATE, subcase=sub.case)

    non_leader = view.rx(n)
    other = _oldest_undecoded(view, non_leader)
    if not view.next_arrived:
        return _plan(view, [other] if other is not None else [], CaseLabel.TWO_LEADERS_A)
    nxt = m + 1
    if non_leader.is_decoded(nxt):
        if other is None:
            return _plan(view, [nxt], CaseLabel.TWO_LEADERS_B, fallback=True)
        return _plan(view, [other, nxt], CaseLabel.TWO_LEADERS_B)
    return _plan(view, [nxt], CaseLabel.TWO_LEADERS_C)


# preference orders for the partner of p_{m+1}, keyed by the set holding it
_PARTNER_ORDER = {
    2: (3, 4, 6, 8, 7, 9),
    3: (2, 4, 5, 7, 8, 9),
    5: (3, 6, 4, 8, 7, 9),
    6: (2, 5, 4, 7, 8, 9),
}
_CASE1_PAIRS = ((2, 3), (3, 5), (2, 6), (5, 6))
_CASE1_SINGLES = (7, 8, 9, 2, 3, 5, 6)
# set index -> unique-leader case number when p_{m+1} lies in that set
_CASE_OF_SET = {1: 2, 2: 3, 3: 4, 4: 5, 5: 6, 6: 7, 7: 8, 8: 9, 9: 10}


def _case1_choice(s: NineSetPartition) -> List[int]:
    if s[4]:
        return [s[4][0]]
    for i, j in _CASE1_PAIRS:
        if s[i] and s[j]:
            return [s[i][0], s[j][0]]
    for i in _CASE1_SINGLES:
        if s[i]:
            return [s[i][0]]
    return []


def select_unique_leader(view: SenderView, leader: Optional[int] = None) -> TransmissionPlan:
    s = partition_sets(view, leader)
    if not view.next_arrived:
        return _plan(view, _case1_choice(s), CaseLabel.UL_CASE1, partition=s)

    nxt = view.m + 1
    where = s.locate(nxt)
    case = UL_CASES[_CASE_OF_SET[where] - 1]
    if where == 1:
        base = _case1_choice(s)
        return _plan(view, base + [nxt], case, fallback=not base, partition=s)
    if where in _PARTNER_ORDER:
        for k in _PARTNER_ORDER[where]:
            if s[k]:
                return _plan(view, [s[k][0], nxt], case, partition=s)
        return _plan(view, [nxt], case, fallback=True, partition=s)
    return _plan(view, [nxt], case, partition=s)


def next_transmission(view: SenderView) -> TransmissionPlan:
    if view.arrived == 0:
        return IDLE_PLAN
    n = len(view.leaders)
    if n == 3:
        return select_all_leaders(view)
    if n == 2:
        return select_two_leaders(view)
    return select_unique_leader(view)
