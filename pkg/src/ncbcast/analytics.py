"""Delay and queue statistics, single-receiver closed forms, and log-log
slope fitting for delay-versus-load sweeps."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

from .sim import PacketRecord


@dataclass
class StatsReport:
    per_rx_mean_delay: List[float]
    mean_delay: float
    mean_queue: float
    max_queue: int
    packets: int
    censored: int = 0
    config: Dict = field(default_factory=dict)
    violations: Dict[str, int] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "per_rx_mean_delay": self.per_rx_mean_delay,
            "mean_delay": self.mean_delay,
            "mean_queue": self.mean_queue,
            "max_queue": self.max_queue,
            "packets": self.packets,
            "censored": self.censored,
            "config": self.config,
            "violations": self.violations,
        }


@dataclass(frozen=True)
class ScalingPoint:
    rho: float
    delay: float

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho={self.rho} outside (0, 1)")

    @property
    def x(self) -> float:
        return 1.0 / (1.0 - self.rho)


def summarize(
    packets: Sequence[PacketRecord],
    queue_sizes: Sequence[int] = (),
    warmup: int = 0,
    horizon: Optional[int] = None,
) -> StatsReport:
    """Mean decoding delay per receiver and time-averaged queue size.

    Packets arriving in slots ``<= warmup`` are skipped, as are packets some
    receiver never decoded (counted in ``censored``). Queue statistics use
    slots ``warmup+1 .. horizon`` of ``queue_sizes`` (slot ``t`` at index
    ``t-1``); ``horizon`` defaults to the whole series.
    """
    kept = [p for p in packets if p.arrival_slot > warmup]
    if not kept:
        raise ValueError("no packets to summarize")
    n_rx = len(kept[0].decode)
    complete = [p for p in kept if None not in p.decode]
    censored = len(kept) - len(complete)
    if not complete:
        raise ValueError("every packet is censored")
    sums = [0] * n_rx
    for p in complete:
        a = p.arrival_slot
        for i, d in enumerate(p.decode):
            sums[i] += d - a
    per_rx = [s / len(complete) for s in sums]
    window = list(queue_sizes[warmup:horizon])
    return StatsReport(
        per_rx_mean_delay=per_rx,
        mean_delay=sum(per_rx) / n_rx,
        mean_queue=sum(window) / len(window) if window else 0.0,
        max_queue=max(window) if window else 0,
        packets=len(complete),
        censored=censored,
    )


def analytic_queue(rho: float, mu: float) -> float:
    """Steady-state mean queue of the single-receiver ARQ chain."""
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho={rho} outside (0, 1)")
    return rho * (1.0 - mu) / (1.0 - rho)


def analytic_delay(rho: float, mu: float, lam: Optional[float] = None) -> float:
    """Mean per-packet delay of single-receiver ARQ, by Little's law."""
    if lam is None:
        lam = rho * mu
    elif not math.isclose(lam, rho * mu, rel_tol=1e-12):
        raise ValueError(f"lambda={lam} inconsistent with rho*mu={rho * mu}")
    return analytic_queue(rho, mu) / lam


def loglog_slope(points: Iterable[ScalingPoint]) -> float:
    """Least-squares slope of log(delay) against log(1/(1-rho))."""
    points = list(points)
    if len(points) < 2:
        raise ValueError("need at least two points")
    if any(p.delay <= 0 for p in points):
        raise ValueError("delays must be positive")
    xs = [math.log(p.x) for p in points]
    if len(set(xs)) < 2:
        raise ValueError("need at least two distinct rho values")
    ys = [math.log(p.delay) for p in points]
    return statistics.linear_regression(xs, ys).slope
