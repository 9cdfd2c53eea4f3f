"""Queue-simulation tests: evolution law, conservation, delays, stability."""

import math
from dataclasses import replace

import numpy as np
import pytest

from duallink import (
    BlockageState,
    QueueState,
    QueueTrace,
    ScenarioParams,
    classify_arrivals,
    mean_delay,
    run_simulation,
    step_queues,
)


@pytest.fixture(scope="module")
def scenario():
    return ScenarioParams()


def test_classify_arrivals_degenerate():
    rng = np.random.default_rng(1)
    assert classify_arrivals(100, 0.0, rng) == (0, 100)
    assert classify_arrivals(100, 1.0, rng) == (100, 0)
    assert classify_arrivals(0, 0.5, rng) == (0, 0)


def test_classify_arrivals_fraction():
    rng = np.random.default_rng(2)
    total = 0
    hc = 0
    for _ in range(1000):
        a_h, a_l = classify_arrivals(1000, 0.15, rng)
        assert a_h + a_l == 1000
        hc += a_h
        total += 1000
    sigma = math.sqrt(0.15 * 0.85 / total)
    assert abs(hc / total - 0.15) < 3.0 * sigma


def test_step_queues_arithmetic():
    state = QueueState(q_h=5.0, q_l=1.0, t=0)
    # service of 2 packets/slot needs rate = 2 * packet_size / slot_duration
    nxt = step_queues(
        state, (3.0, 0.0), BlockageState(1, 1),
        (2e8, 5e8), slot_duration=0.1, packet_size=1e7,
    )
    assert nxt.q_h == pytest.approx(6.0)   # 5 - 2 + 3
    assert nxt.q_l == pytest.approx(0.0)   # clamped at empty
    assert nxt.t == 1


def test_step_queues_outage_gating():
    state = QueueState(q_h=5.0, q_l=5.0, t=3)
    nxt = step_queues(
        state, (0.0, 0.0), BlockageState(0, 0),
        (1e9, 1e9), slot_duration=0.1, packet_size=1e7,
    )
    assert nxt.q_h == 5.0 and nxt.q_l == 5.0


def test_simulation_no_arrivals(scenario):
    sc = replace(scenario, arrival_rate=0.0)
    trace = run_simulation(sc, (1e9, 1e9), 2000, seed=3)
    assert np.all(trace.q_h == 0.0)
    assert np.all(trace.q_l == 0.0)


def test_simulation_zero_rates_diverges(scenario):
    trace = run_simulation(scenario, (0.0, 0.0), 5000, seed=4)
    stats = mean_delay(trace, scenario.alpha, scenario.arrival_rate,
                       scenario.slot_duration)
    assert not stats.stable
    assert np.all(np.diff(trace.q_l) >= 0)  # no service, never drains


def test_flow_conservation_exact(scenario):
    trace = run_simulation(scenario, (2e10, 8e10), 20000, seed=5)
    for q, a, s in ((trace.q_h, trace.a_h, trace.s_h),
                    (trace.q_l, trace.a_l, trace.s_l)):
        level = 0.0
        for t in range(len(trace)):
            level = max(level - s[t], 0.0) + a[t]
        assert level == q[-1]


def test_queue_nonnegative(scenario):
    trace = run_simulation(scenario, (1e10, 1e11), 20000, seed=6)
    assert np.min(trace.q_h) >= 0.0
    assert np.min(trace.q_l) >= 0.0


def test_seeded_reproducibility(scenario):
    t1 = run_simulation(scenario, (1.4e10, 9.6e10), 30000, seed=77)
    t2 = run_simulation(scenario, (1.4e10, 9.6e10), 30000, seed=77)
    assert t1.q_h.tobytes() == t2.q_h.tobytes()
    assert t1.q_l.tobytes() == t2.q_l.tobytes()
    assert np.array_equal(t1.a_h, t2.a_h)
    assert np.array_equal(t1.beta_d, t2.beta_d)
    assert t1.scenario_digest == t2.scenario_digest
    t3 = run_simulation(scenario, (1.4e10, 9.6e10), 30000, seed=78)
    assert not np.array_equal(t1.a_h, t3.a_h)


def test_stability_with_service_margin(scenario):
    # 20% service margin on both streams: time averages must not drift up.
    serv = scenario.slot_duration / scenario.packet_size
    rate_h = 1.2 * scenario.alpha * scenario.arrival_rate / ((1 - scenario.q_r) * serv)
    rate_l = 1.2 * (1 - scenario.alpha) * scenario.arrival_rate / ((1 - scenario.q_d) * serv)
    trace = run_simulation(scenario, (rate_h, rate_l), 100000, seed=8)
    warm = len(trace) // 10
    mid = len(trace) // 2
    for q in (trace.q_h, trace.q_l):
        first = q[warm:mid].mean()
        second = q[mid:].mean()
        assert second <= first + max(0.05 * first, 1.0)
    stats = mean_delay(trace, scenario.alpha, scenario.arrival_rate,
                       scenario.slot_duration)
    assert stats.stable


def _constant_trace(level_h: float, level_l: float, slots: int) -> QueueTrace:
    zeros = np.zeros(slots)
    return QueueTrace(
        a_h=np.zeros(slots, dtype=np.int64),
        a_l=np.zeros(slots, dtype=np.int64),
        s_h=zeros, s_l=zeros,
        beta_d=np.ones(slots, dtype=np.int8),
        beta_r=np.ones(slots, dtype=np.int8),
        q_h=np.full(slots, level_h),
        q_l=np.full(slots, level_l),
        seed=0, scenario_digest="synthetic",
    )


def test_mean_delay_constant_queue():
    trace = _constant_trace(10.0, 0.0, 1000)
    stats = mean_delay(trace, alpha=0.5, arrival=10.0, slot_duration=0.1)
    assert stats.tau_h_slots == pytest.approx(2.0)
    assert stats.tau_h_seconds == pytest.approx(0.2)
    assert stats.stable


def test_mean_delay_absent_sides():
    trace = _constant_trace(0.0, 8.0, 1000)
    stats = mean_delay(trace, alpha=0.0, arrival=4.0, slot_duration=0.1)
    assert stats.tau_h_slots is None
    assert stats.tau_l_slots == pytest.approx(2.0)
    stats = mean_delay(trace, alpha=1.0, arrival=4.0, slot_duration=0.1)
    assert stats.tau_l_slots is None


def test_mean_delay_matches_md1_theory():
    # Single always-served queue at half load: service capacity exactly one
    # packet per slot, Poisson arrivals at 0.5/slot.  The fixed-service
    # single-server queue has mean occupancy rho + rho^2 / (2 (1 - rho)).
    lam = 0.5
    sc = ScenarioParams(alpha=1.0, q_d=0.0, q_r=0.0, arrival_rate=lam)
    rate_h = 1.0 * sc.packet_size / sc.slot_duration  # one packet per slot
    trace = run_simulation(sc, (rate_h, 0.0), 100000, seed=9)
    stats = mean_delay(trace, 1.0, lam, sc.slot_duration)
    rho = 0.5
    occupancy = rho + rho * rho / (2.0 * (1.0 - rho))
    tau_theory = occupancy / lam
    assert stats.tau_h_slots == pytest.approx(tau_theory, rel=0.15)


def test_mean_delay_rejects_empty():
    trace = _constant_trace(1.0, 1.0, 10)
    trace.q_h = np.array([])
    trace.q_l = np.array([])
    with pytest.raises(ValueError):
        mean_delay(trace, 0.5, 1.0, 0.1)


def test_queue_state_validation():
    with pytest.raises(ValueError):
        QueueState(q_h=-1.0, q_l=0.0)
