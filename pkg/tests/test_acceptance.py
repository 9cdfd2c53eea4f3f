"""
Acceptance suite: the nine gate criteria, each at its stated tolerance.

Every test prints one PASS/FAIL line (visible with ``pytest -s`` or on
failure) and asserts both the numeric bound and its runtime budget.  The
scenario-level criteria (1, 2, 6, 7) are banded behavioural checks; the
rest are exact property checks.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from duallink import (
    BlockageState,
    PowerAllocation,
    ScenarioParams,
    approx_sinrs,
    brute_force_oracle,
    exact_sinrs,
    g_h,
    g_l,
    link_gains,
    mean_delay,
    oma_optimize,
    optimal_mu,
    run_simulation,
    sca_power_allocation,
    spectral_efficiency,
)

BASELINE = ScenarioParams()  # table defaults incl. 10 Mbit packets, 100 ms slots


def _report(num: int, ok: bool, detail: str, elapsed: float, budget: float) -> None:
    verdict = "PASS" if ok and elapsed <= budget else "FAIL"
    print(f"criterion {num}: {verdict} ({detail}) [{elapsed:.1f}s / budget {budget:.0f}s]")
    assert ok, f"criterion {num}: {detail}"
    assert elapsed <= budget, f"criterion {num} exceeded runtime budget: {elapsed:.1f}s"


def _first_unstable_alpha(objective_at) -> float:
    for k in range(1, 26):
        alpha = round(0.01 * k, 2)
        if objective_at(alpha) < 0.0:
            return alpha
    return math.inf


def test_criterion_1_stability_thresholds():
    start = time.time()

    def mcsc_objective(alpha: float) -> float:
        return sca_power_allocation(
            BASELINE, alpha, 700.0, stop_when_nonneg=True
        ).objective

    def oma_objective(alpha: float) -> float:
        return oma_optimize(BASELINE, alpha, 700.0).objective

    onset_mcsc = _first_unstable_alpha(mcsc_objective)
    onset_oma = _first_unstable_alpha(oma_objective)
    ok = 0.16 <= onset_mcsc <= 0.22 and 0.03 <= onset_oma <= 0.08
    _report(1, ok, f"onset mcsc={onset_mcsc}, oma={onset_oma}",
            time.time() - start, 30.0)


def test_criterion_2_delay_flatness():
    start = time.time()
    delays = {}
    for alpha in (0.01, 0.10):
        res = sca_power_allocation(BASELINE, alpha, 700.0)
        scenario = replace(BASELINE, alpha=alpha)
        trace = run_simulation(scenario, (res.rate_h, res.rate_l),
                               100000, seed=20260808)
        stats = mean_delay(trace, alpha, 700.0, scenario.slot_duration)
        delays[alpha] = stats.tau_total_slots
    ratio = delays[0.10] / delays[0.01]
    ok = ratio <= 1.5
    _report(2, ok, f"delay(0.10)/delay(0.01)={ratio:.3f} <= 1.5",
            time.time() - start, 60.0)


def test_criterion_3_se_anchor():
    start = time.time()
    gains = link_gains(BASELINE)
    snr = BASELINE.n_b * gains.eta_d**2 * BASELINE.p_max / gains.noise_w
    closed_form = (1.0 - BASELINE.q_d) * math.log2(1.0 + snr)
    _, _, se_sum = spectral_efficiency(BASELINE, 0.0, "mcsc")
    rel_err = abs(se_sum - closed_form) / closed_form
    ok = rel_err <= 0.005
    _report(3, ok, f"se_sum={se_sum:.4f} vs closed form {closed_form:.4f} "
            f"(rel err {rel_err:.2e})", time.time() - start, 5.0)


def _random_scenario(rng: np.random.Generator) -> tuple[ScenarioParams, float]:
    # Route gains scaled independently over [0.5, 2] via the antenna-gain
    # product (both routes) and the element aperture (reflected route only).
    s_d = rng.uniform(0.5, 2.0)
    s_r = rng.uniform(0.5, 2.0)
    q_d = rng.uniform(0.1, 0.5)
    q_r = rng.uniform(0.02, q_d)
    alpha = rng.uniform(0.0, 0.3)
    base = ScenarioParams()
    scenario = replace(
        base,
        g_b=base.g_b * s_d**2,
        l_x=base.l_x * s_r / s_d,
        q_d=q_d,
        q_r=q_r,
    )
    return scenario, alpha


def test_criterion_4_oracle_equivalence():
    start = time.time()
    rng = np.random.default_rng(42)
    worst = math.inf
    for _ in range(20):
        scenario, alpha = _random_scenario(rng)
        res = sca_power_allocation(scenario, alpha, 700.0)
        _, oracle = brute_force_oracle(scenario, alpha, 700.0, grid_n=101)
        margin = res.objective - (oracle - 0.01 * abs(oracle))
        worst = min(worst, margin)
    ok = worst >= 0.0
    _report(4, ok, f"min margin over oracle-1% = {worst:.4f} pkt/slot",
            time.time() - start, 300.0)


def test_criterion_5_transform_identity():
    start = time.time()
    gains = link_gains(BASELINE)
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        p = PowerAllocation(*(rng.random(4) * BASELINE.p_max / 4))
        beta_d = int(rng.random() < 0.5)
        gamma_h = rng.random() * 20.0
        gamma_l = rng.random() * 2e4
        mu = optimal_mu(p, gains, BASELINE.n_b, BASELINE.n_r)
        mu_h = mu.mu_h1 if beta_d else mu.mu_h0
        sinr_h, _ = approx_sinrs(gains, BASELINE.n_b, BASELINE.n_r, p,
                                 BlockageState(beta_d, 1))
        _, sinr_l = approx_sinrs(gains, BASELINE.n_b, BASELINE.n_r, p,
                                 BlockageState(1, 1))
        err_h = abs(
            g_h(p, gamma_h, mu_h, beta_d, gains, BASELINE.n_b, BASELINE.n_r)
            - (gamma_h - sinr_h)
        ) / max(1.0, abs(gamma_h))
        err_l = abs(
            g_l(p, gamma_l, mu.mu_l, gains, BASELINE.n_b, BASELINE.n_r)
            - (gamma_l - sinr_l)
        ) / max(1.0, abs(gamma_l))
        worst = max(worst, err_h, err_l)
    ok = worst <= 1e-9
    _report(5, ok, f"max identity error {worst:.2e} <= 1e-9",
            time.time() - start, 1.0)


def test_criterion_6_blockage_sensitivity():
    start = time.time()
    decay = {}
    for q_d in (0.2, 0.4):
        scenario = replace(BASELINE, q_d=q_d)
        se0 = spectral_efficiency(scenario, 0.0, "mcsc")[2]
        se15 = spectral_efficiency(scenario, 0.15, "mcsc")[2]
        decay[q_d] = (se0 - se15) / se0
    ok = decay[0.4] < decay[0.2]
    _report(6, ok, f"decay(q_d=0.4)={decay[0.4]:.4f} < decay(q_d=0.2)={decay[0.2]:.4f}",
            time.time() - start, 30.0)


def test_criterion_7_ris_size():
    start = time.time()
    scenario = replace(BASELINE, n_r=40000)
    se0 = spectral_efficiency(scenario, 0.0, "mcsc")[2]
    se15 = spectral_efficiency(scenario, 0.15, "mcsc")[2]
    ok = se15 >= se0 * 0.98
    _report(7, ok, f"se_sum(0.15)={se15:.4f} >= 0.98*se_sum(0)={0.98 * se0:.4f}",
            time.time() - start, 30.0)


def test_criterion_8_queue_laws():
    start = time.time()
    scenario = replace(BASELINE, alpha=0.05)
    res = sca_power_allocation(scenario, 0.05, 700.0)
    trace = run_simulation(scenario, (res.rate_h, res.rate_l), 50000, seed=99)

    conserved = True
    for q, a, s in ((trace.q_h, trace.a_h, trace.s_h),
                    (trace.q_l, trace.a_l, trace.s_l)):
        level = 0.0
        for t in range(len(trace)):
            level = max(level - s[t], 0.0) + a[t]
        conserved = conserved and (level == q[-1])

    stats = mean_delay(trace, 0.05, 700.0, scenario.slot_duration)
    warm = len(trace) // 10
    little_h = trace.q_h[warm:].mean() / (0.05 * 700.0)
    little_l = trace.q_l[warm:].mean() / (0.95 * 700.0)
    little_ok = (stats.tau_h_slots == little_h) and (stats.tau_l_slots == little_l)

    again = run_simulation(scenario, (res.rate_h, res.rate_l), 50000, seed=99)
    repro = (
        trace.q_h.tobytes() == again.q_h.tobytes()
        and trace.q_l.tobytes() == again.q_l.tobytes()
        and trace.s_h.tobytes() == again.s_h.tobytes()
        and np.array_equal(trace.a_h, again.a_h)
        and np.array_equal(trace.beta_d, again.beta_d)
    )
    ok = conserved and little_ok and repro
    _report(8, ok, f"conservation={conserved}, little={little_ok}, repro={repro}",
            time.time() - start, 10.0)


def test_criterion_9_approximation_validity():
    start = time.time()
    gains = link_gains(BASELINE)
    quarter = BASELINE.p_max / 4
    p = PowerAllocation(quarter, quarter, quarter, quarter)
    both_up = BlockageState(1, 1)

    exact = exact_sinrs(BASELINE, p, both_up)
    approx = approx_sinrs(gains, BASELINE.n_b, BASELINE.n_r, p, both_up)
    default_dev = max(
        abs(e - a) / a for e, a in zip(exact, approx)
    )

    worst_orth = 0.0
    rng = np.random.default_rng(3)
    for m in (1, 2, 5):
        scenario = replace(
            BASELINE,
            phi_bu=math.asin(0.05),
            phi_br=math.asin(0.05 + 2.0 * m / BASELINE.n_b),
            phi_rb=0.0,
            phi_ru=0.8,
        )
        for _ in range(3):
            p_rand = PowerAllocation(*(rng.random(4) * quarter))
            for b in (BlockageState(1, 1), BlockageState(0, 1)):
                e = exact_sinrs(scenario, p_rand, b)
                a = approx_sinrs(gains, scenario.n_b, scenario.n_r, p_rand, b)
                for ev, av in zip(e, a):
                    worst_orth = max(worst_orth, abs(ev - av) / max(1.0, abs(av)))

    ok = default_dev <= 0.05 and worst_orth <= 1e-12
    _report(9, ok, f"default geometry dev {default_dev:.2e} <= 5%, "
            f"orthogonal pairs dev {worst_orth:.2e} <= 1e-12",
            time.time() - start, 1.0)
