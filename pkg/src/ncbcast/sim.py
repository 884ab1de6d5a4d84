"""Slotted-time simulation of the coded three-receiver broadcast link and
of the single-receiver ARQ baseline.

Within a slot: an arrival is drawn, the sender picks a transmission from
feedback-current receiver state, each receiver independently gets it
with probability ``mu``, and packets decoded by everyone leave the queue.
Random draws are consumed in a fixed order (arrival, then receivers 1, 2,
3, and only when something is sent) so a seed fixes the whole run.
"""

from __future__ import annotations

import enum
import logging
import random
from array import array
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, NamedTuple, Optional, Tuple

from .coding import InvariantViolation, SenderView, TransmissionPlan, next_transmission
from .gf3 import format_vector
from .knowledge import ReceiverState

log = logging.getLogger(__name__)

RNG_NAME = "python-random-MT19937"

HARD_INVARIANTS = (
    "innovation",
    "idle_with_demand",
    "index_bound",
    "undecoded_le2",
    "leader_decode",
    "seen_rank",
    "rank_step",
)
MONITORED = ("both_nonleaders_partial",)


class Mode(str, enum.Enum):
    THREE_RX_CODED = "coded"
    SINGLE_RX_ARQ = "arq"


class AssertLevel(str, enum.Enum):
    OFF = "off"
    MONITOR = "monitor"
    STRICT = "strict"


@dataclass
class SimConfig:
    lam: float
    mu: float
    slots: int
    seed: int = 0
    mode: Mode = Mode.THREE_RX_CODED
    drain: bool = True
    assert_level: AssertLevel = AssertLevel.MONITOR
    keep_trace: bool = True

    def __post_init__(self):
        self.mode = Mode(self.mode)
        self.assert_level = AssertLevel(self.assert_level)
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"arrival probability {self.lam} outside [0, 1]")
        if not 0.0 < self.mu <= 1.0:
            raise ValueError(f"delivery probability {self.mu} outside (0, 1]")
        if self.slots < 0:
            raise ValueError("slots must be nonnegative")
        if self.lam >= self.mu:
            log.warning("load factor %.4g >= 1: the queue is not stable", self.rho)

    @property
    def rho(self) -> float:
        return self.lam / self.mu

    def as_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode.value
        d["assert_level"] = self.assert_level.value
        d["rho"] = self.rho
        d["rng"] = RNG_NAME
        return d


class SlotRecord(NamedTuple):
    slot: int
    arrival: bool
    plan: TransmissionPlan
    delivered: Tuple[bool, ...]
    ranks: Tuple[int, ...]
    queue: int


class PacketRecord:
    __slots__ = ("id", "arrival_slot", "decode", "drop_slot")

    def __init__(self, pid: int, arrival_slot: int, receivers: int = 3):
        self.id = pid
        self.arrival_slot = arrival_slot
        self.decode: List[Optional[int]] = [None] * receivers
        self.drop_slot: Optional[int] = None

    def delays(self) -> List[Optional[int]]:
        return [None if d is None else d - self.arrival_slot for d in self.decode]

    def __repr__(self) -> str:
        return f"PacketRecord({self.id}, arrival={self.arrival_slot}, decode={self.decode}, drop={self.drop_slot})"


@dataclass
class Monitor:
    """Per-run invariant counters; raises on the first hard failure when strict."""

    level: AssertLevel = AssertLevel.MONITOR
    counts: Dict[str, int] = field(default_factory=lambda: dict.fromkeys(HARD_INVARIANTS + MONITORED, 0))
    first: Dict[str, dict] = field(default_factory=dict)
    fallbacks: int = 0

    def hard(self, kind: str, slot: int, message: str, dump: Callable[[], dict]) -> None:
        self.counts[kind] += 1
        if kind not in self.first:
            self.first[kind] = {"slot": slot, "message": message, "state": dump()}
        if self.level is AssertLevel.STRICT:
            raise InvariantViolation(kind, f"slot {slot}: {message}", dump())
        log.error("invariant %s violated at slot %d: %s", kind, slot, message)

    def soft(self, kind: str, slot: int, message: str) -> None:
        self.counts[kind] += 1
        self.first.setdefault(kind, {"slot": slot, "message": message})

    @property
    def hard_total(self) -> int:
        return sum(self.counts[k] for k in HARD_INVARIANTS)


@dataclass
class SimResult:
    config: SimConfig
    packets: List[PacketRecord]
    queue_sizes: array
    trace: Optional[List[SlotRecord]]
    monitor: Monitor
    slots_run: int = 0
    case_counts: Dict[str, int] = field(default_factory=dict)


class BroadcastSim:
    """One coded three-receiver run. Call :meth:`step` or :meth:`run`."""

    def __init__(self, config: SimConfig, on_slot: Optional[Callable[[SlotRecord], None]] = None):
        self.config = config
        self.rng = random.Random(config.seed)
        self.receivers = [ReceiverState(i) for i in (1, 2, 3)]
        self.arrived = 0
        self.slot = 0
        self.queue: Dict[int, PacketRecord] = {}
        self.packets: List[PacketRecord] = []
        self.queue_sizes = array("q")
        self.trace: Optional[List[SlotRecord]] = [] if config.keep_trace else None
        self.monitor = Monitor(config.assert_level)
        self.case_counts: Dict[str, int] = {}
        self.on_slot = on_slot

    def view(self) -> SenderView:
        return SenderView(self.arrived, self.receivers, self.queue)

    def step(self, arrivals: bool = True) -> SlotRecord:
        cfg = self.config
        rng = self.rng
        self.slot += 1
        slot = self.slot

        arrival = arrivals and rng.random() < cfg.lam
        if arrival:
            self.arrived += 1
            rec = PacketRecord(self.arrived, slot)
            self.queue[self.arrived] = rec
            self.packets.append(rec)

        view = self.view()
        plan = next_transmission(view)
        label = plan.case.value
        self.case_counts[label] = self.case_counts.get(label, 0) + 1
        checking = cfg.assert_level is not AssertLevel.OFF
        if checking:
            self._check_plan(view, plan)

        delivered: Tuple[bool, ...] = (False, False, False)
        if plan.support:
            vec = plan.vector
            delivered = (rng.random() < cfg.mu, rng.random() < cfg.mu, rng.random() < cfg.mu)
            for i, r in enumerate(self.receivers):
                if not delivered[i]:
                    continue
                before = r.rank
                innovative, newly = r.receive(vec)
                if checking and r.rank - before != int(innovative):
                    self.monitor.hard("rank_step", slot, f"receiver {r.id} rank jumped", view.dump)
                for p in newly:
                    self._decoded(p, i, slot)
        if checking:
            for r in self.receivers:
                problems = r.basis.check()
                if problems:
                    self.monitor.hard("seen_rank", slot, f"receiver {r.id}: {problems[0]}", self.view().dump)

        ranks = (self.receivers[0].rank, self.receivers[1].rank, self.receivers[2].rank)
        record = SlotRecord(slot, arrival, plan, delivered, ranks, len(self.queue))
        self.queue_sizes.append(len(self.queue))
        if self.trace is not None:
            self.trace.append(record)
        if self.on_slot is not None:
            self.on_slot(record)
        return record

    def _decoded(self, p: int, i: int, slot: int) -> None:
        rec = self.queue[p]
        rec.decode[i] = slot
        if None not in rec.decode:
            rec.drop_slot = slot
            del self.queue[p]

    def _check_plan(self, view: SenderView, plan: TransmissionPlan) -> None:
        mon, slot, m = self.monitor, self.slot, view.m
        if plan.fallback:
            mon.fallbacks += 1
        if not any(view.rx(i).decoded_upto(m) for i in view.leaders):
            mon.hard("leader_decode", slot, f"no leader has decoded 1..{m}", view.dump)
        needy = view.needy
        if plan.idle:
            if needy:
                mon.hard("idle_with_demand", slot, "idle while a receiver lags the sender", view.dump)
        else:
            vec = plan.vector
            if max(plan.support) > m + 1:
                mon.hard("index_bound", slot, f"{plan} exceeds m+1={m + 1}", view.dump)
            for r in needy:
                if r.basis.in_span(vec):
                    mon.hard("innovation", slot, f"{plan} not innovative for receiver {r.id}", view.dump)
            for r in view.receivers:
                if sum(1 for p in plan.support if not r.is_decoded(p)) > 2:
                    mon.hard("undecoded_le2", slot,
                             f"{plan} has 3 undecoded packets for receiver {r.id}", view.dump)
        s = plan.partition
        if s is not None and s.h1_minus_d1 and s.h2_minus_d2:
            mon.soft("both_nonleaders_partial", slot,
                     f"non-leaders {s.non_leaders} both hold heard-undecoded packets")

    def run(self) -> SimResult:
        cfg = self.config
        for _ in range(cfg.slots):
            self.step()
        if cfg.drain:
            while self.queue:
                self.step(arrivals=False)
        return SimResult(cfg, self.packets, self.queue_sizes, self.trace, self.monitor,
                         self.slot, dict(sorted(self.case_counts.items())))


def run(config: SimConfig, on_slot: Optional[Callable[[SlotRecord], None]] = None) -> SimResult:
    if config.mode is Mode.SINGLE_RX_ARQ:
        return run_arq_single(config, on_slot)
    return BroadcastSim(config, on_slot).run()


def run_arq_single(config: SimConfig, on_slot: Optional[Callable[[SlotRecord], None]] = None) -> SimResult:
    """Single receiver, retransmit the head-of-line packet until delivered."""
    rng = random.Random(config.seed)
    lam, mu = config.lam, config.mu
    queue: List[PacketRecord] = []
    head = 0
    packets: List[PacketRecord] = []
    sizes = array("q")
    trace: Optional[List[SlotRecord]] = [] if config.keep_trace else None
    delivered_count = 0
    slot = 0

    def one(arrivals: bool) -> None:
        nonlocal slot, head, delivered_count
        slot += 1
        arrival = arrivals and rng.random() < lam
        if arrival:
            rec = PacketRecord(len(packets) + 1, slot, receivers=1)
            packets.append(rec)
            queue.append(rec)
        plan = TransmissionPlan()
        got = False
        if head < len(queue):
            hol = queue[head]
            if trace is not None or on_slot is not None:
                plan = TransmissionPlan((hol.id,), (1,))
            got = rng.random() < mu
            if got:
                hol.decode[0] = slot
                hol.drop_slot = slot
                head += 1
                delivered_count += 1
        size = len(queue) - head
        sizes.append(size)
        if trace is not None or on_slot is not None:
            record = SlotRecord(slot, arrival, plan, (got,), (delivered_count,), size)
            if trace is not None:
                trace.append(record)
            if on_slot is not None:
                on_slot(record)

    for _ in range(config.slots):
        one(True)
    if config.drain:
        while head < len(queue):
            one(False)
    return SimResult(config, packets, sizes, trace, Monitor(AssertLevel.OFF), slot)


def trace_row(record: SlotRecord) -> list:
    plan = record.plan
    if len(record.delivered) == 1:
        # ARQ baseline: no case label, one receiver
        return [record.slot, int(record.arrival), format_vector(plan.vector),
                int(record.delivered[0]), record.ranks[0], record.queue]
    return [
        record.slot,
        int(record.arrival),
        plan.case.value,
        format_vector(plan.vector),
        *(int(d) for d in record.delivered),
        *record.ranks,
        record.queue,
    ]
