"""
Discrete-time simulation of the two criticality buffers.

Packets arrive in a Poisson stream, are classified high/low criticality per
packet, and drain at the allocated service rates gated by the per-slot
blockage state: the HC stream needs the reflected route up, the LC stream
the direct route.  Queue lengths are fluid (service per slot is generally a
non-integer packet count).  Delay statistics follow from the time-averaged
queue lengths divided by the per-class arrival rates.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .link import BlockageState, ScenarioParams, sample_blockage_batch


@dataclass(frozen=True)
class QueueState:
    """Buffer levels (packets, fluid) after slot t."""

    q_h: float
    q_l: float
    t: int = 0

    def __post_init__(self):
        if self.q_h < 0.0 or self.q_l < 0.0:
            raise ValueError("queue lengths must be nonnegative")


@dataclass
class QueueTrace:
    """Per-slot record of a simulation run plus its provenance."""

    a_h: np.ndarray       # HC arrivals per slot
    a_l: np.ndarray       # LC arrivals per slot
    s_h: np.ndarray       # HC service offered per slot (packets, gated)
    s_l: np.ndarray       # LC service offered per slot
    beta_d: np.ndarray    # direct-route availability
    beta_r: np.ndarray    # reflected-route availability
    q_h: np.ndarray       # HC queue after the slot
    q_l: np.ndarray       # LC queue after the slot
    seed: int
    scenario_digest: str

    def __len__(self) -> int:
        return len(self.q_h)


@dataclass(frozen=True)
class DelayStats:
    """Little's-law delay summary; per-class values absent when unloaded."""

    tau_h_slots: float | None
    tau_l_slots: float | None
    tau_h_seconds: float | None
    tau_l_seconds: float | None
    tau_total_slots: float | None
    mean_q_h: float
    mean_q_l: float
    stable: bool


def classify_arrivals(
    total: int, alpha: float, rng: np.random.Generator
) -> tuple[int, int]:
    """Split a batch of arrivals by independent per-packet classification."""
    if total < 0:
        raise ValueError("total must be nonnegative")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    a_h = int(rng.binomial(total, alpha))
    return a_h, total - a_h


def step_queues(
    state: QueueState,
    arrivals: tuple[float, float],
    b: BlockageState,
    stream_rates: tuple[float, float],
    slot_duration: float,
    packet_size: float,
) -> QueueState:
    """
    One slot of buffer evolution: serve (if the stream's route is up), clamp
    at empty, then add the new arrivals.
    """
    serve_h = b.beta_r * (slot_duration / packet_size) * stream_rates[0]
    serve_l = b.beta_d * (slot_duration / packet_size) * stream_rates[1]
    return QueueState(
        q_h=max(state.q_h - serve_h, 0.0) + arrivals[0],
        q_l=max(state.q_l - serve_l, 0.0) + arrivals[1],
        t=state.t + 1,
    )


def run_simulation(
    scenario: ScenarioParams,
    stream_rates: tuple[float, float],
    slots: int,
    seed: int,
) -> QueueTrace:
    """
    Simulate both buffers for the given number of slots.

    Per slot: Poisson total arrivals, binomial criticality split, one joint
    blockage draw, then the queue update.  The draw order (all arrivals,
    then all splits, then all blockage uniforms) is fixed, so a seed pins
    the full trace bit for bit.
    """
    if slots < 1:
        raise ValueError("slots must be >= 1")
    rng = np.random.default_rng(seed)
    totals = rng.poisson(scenario.arrival_rate, slots)
    a_h = rng.binomial(totals, scenario.alpha)
    a_l = totals - a_h
    beta_d, beta_r = sample_blockage_batch(scenario.q_d, scenario.q_r, slots, rng)

    per_slot = scenario.slot_duration / scenario.packet_size
    s_h = beta_r * (per_slot * stream_rates[0])
    s_l = beta_d * (per_slot * stream_rates[1])

    q_h = np.empty(slots)
    q_l = np.empty(slots)
    level_h = 0.0
    level_l = 0.0
    for t in range(slots):
        level_h = max(level_h - s_h[t], 0.0) + a_h[t]
        level_l = max(level_l - s_l[t], 0.0) + a_l[t]
        q_h[t] = level_h
        q_l[t] = level_l

    digest = hashlib.sha256(repr(scenario).encode()).hexdigest()[:16]
    return QueueTrace(
        a_h=a_h.astype(np.int64),
        a_l=a_l.astype(np.int64),
        s_h=s_h.astype(float),
        s_l=s_l.astype(float),
        beta_d=beta_d,
        beta_r=beta_r,
        q_h=q_h,
        q_l=q_l,
        seed=seed,
        scenario_digest=digest,
    )


def _diverging(q: np.ndarray, warm: int) -> bool:
    """
    Trend test on the second half of a queue trajectory.

    The second half is split into blocks; a positive regression slope on the
    block means beyond three standard errors, together with a second-half
    mean materially above the first-half mean, flags divergence.  Stable
    near-critical queues wander widely, so both conditions are required.
    """
    n = len(q)
    mid = n // 2
    if mid <= warm:
        warm = 0
    mean1 = float(q[warm:mid].mean()) if mid > warm else float(q[:mid].mean())
    mean2 = float(q[mid:].mean())
    blocks = np.array_split(q[mid:], 10)
    bm = np.array([b.mean() for b in blocks if len(b)])
    if len(bm) < 3:
        return mean2 > mean1 + max(0.05 * mean1, 1.0)
    x = np.arange(len(bm), dtype=float)
    xc = x - x.mean()
    denom = float(np.sum(xc * xc))
    slope = float(np.sum(xc * (bm - bm.mean())) / denom)
    resid = bm - bm.mean() - slope * xc
    dof = max(len(bm) - 2, 1)
    se = float(np.sqrt(np.sum(resid * resid) / dof / denom))
    significant = slope > 3.0 * se
    grew = mean2 > mean1 + max(0.05 * mean1, 1.0)
    return significant and grew


def mean_delay(
    trace: QueueTrace,
    alpha: float,
    arrival: float,
    slot_duration: float | None = None,
) -> DelayStats:
    """
    Delay statistics from the trace via Little's law.

    Time averages exclude the first tenth of the trace as start-up
    transient.  A class with zero arrival rate has no defined delay and is
    reported as absent.  ``tau_total_slots`` is the packet-averaged waiting
    time over both classes.
    """
    if len(trace) == 0:
        raise ValueError("trace is empty")
    warm = len(trace) // 10
    mean_q_h = float(trace.q_h[warm:].mean())
    mean_q_l = float(trace.q_l[warm:].mean())

    rate_h = alpha * arrival
    rate_l = (1.0 - alpha) * arrival
    tau_h = mean_q_h / rate_h if rate_h > 0.0 else None
    tau_l = mean_q_l / rate_l if rate_l > 0.0 else None
    tau_total = (mean_q_h + mean_q_l) / arrival if arrival > 0.0 else None

    stable = not (_diverging(trace.q_h, warm) or _diverging(trace.q_l, warm))
    return DelayStats(
        tau_h_slots=tau_h,
        tau_l_slots=tau_l,
        tau_h_seconds=None if (tau_h is None or slot_duration is None) else tau_h * slot_duration,
        tau_l_seconds=None if (tau_l is None or slot_duration is None) else tau_l * slot_duration,
        tau_total_slots=tau_total,
        mean_q_h=mean_q_h,
        mean_q_l=mean_q_l,
        stable=stable,
    )
