"""Feedback-adaptive GF(3) network coding for a three-receiver erasure
broadcast channel, with a slotted simulator and delay analytics."""

from .analytics import ScalingPoint, StatsReport, analytic_delay, analytic_queue, loglog_slope, summarize
from .coding import (
    CaseLabel,
    InvariantViolation,
    NoValidCoefficients,
    SenderView,
    TransmissionPlan,
    next_transmission,
)
from .gf3 import KnowledgeBasis
from .knowledge import ReceiverState
from .sim import Mode, PacketRecord, SimConfig, SimResult, run, run_arq_single

__version__ = "0.1.0"
