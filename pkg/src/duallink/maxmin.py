"""
Dense log-barrier interior-point solver for small smooth max-min programs.

Solves  maximize_x min_i f_i(x)  subject to  g_j(x) <= 0  and x >= lb,
with concave f_i and convex twice-differentiable g_j, via the epigraph
reformulation  maximize t  s.t.  t - f_i(x) <= 0.  Problems here are tiny
(around ten variables and a dozen constraints), so plain dense Newton steps
with backtracking are entirely adequate and keep the package dependency-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

# x -> (value, gradient); treated as affine beyond first order.
TermFn = Callable[[np.ndarray], tuple[float, np.ndarray]]
# x -> (value, gradient, hessian or None for affine).  A callable may also
# carry a `value_only` attribute (x -> float); line searches use it to skip
# derivative work.
ConstraintFn = Callable[[np.ndarray], tuple[float, np.ndarray, np.ndarray | None]]

STATUS_CONVERGED = "converged"
STATUS_MAX_ITERATIONS = "max-iterations"
STATUS_INFEASIBLE_START = "infeasible-start"

_TINY = 1e-300


@dataclass
class MaxMinProblem:
    """
    Epigraph-ready max-min problem description.

    terms: concave objective pieces, each returning (value, gradient).
       The overall objective is their pointwise minimum.
    constraints: convex inequalities g(x) <= 0 returning (value, gradient,
       hessian); hessian None means affine.
    x0: starting point, ideally strictly feasible (phase I repairs it
       otherwise).
    lower_bounds: per-variable lower bounds; None means all zeros. Use
       -inf entries to leave a variable unbounded below.
    """

    n: int
    terms: Sequence[TermFn]
    constraints: Sequence[ConstraintFn]
    x0: np.ndarray
    lower_bounds: np.ndarray | None = None

    def bounds(self) -> np.ndarray:
        if self.lower_bounds is None:
            return np.zeros(self.n)
        return np.asarray(self.lower_bounds, dtype=float)


@dataclass
class BarrierSettings:
    """Fixed solver settings; defaults are deliberately unadventurous."""

    t_init: float = 1.0
    t_mult: float = 10.0
    gap_tol: float = 1e-8      # outer loop runs until m / t_barrier < gap_tol
    newton_tol: float = 1e-10  # on half the squared Newton decrement
    armijo: float = 0.3
    backtrack: float = 0.5
    max_newton: int = 80
    max_outer: int = 48
    kkt_tol: float = 1e-3      # on the KKT residual relative to its terms' size
    feas_tol: float = 1e-9


@dataclass
class KernelResult:
    x: np.ndarray
    value: float
    max_violation: float
    kkt_residual: float
    newton_iters: int
    outer_iters: int
    status: str
    multipliers: dict = field(default_factory=dict)


def _value_fn(con) -> Callable[[np.ndarray], float]:
    fast = getattr(con, "value_only", None)
    if fast is not None:
        return fast
    return lambda z: con(z)[0]


def _solve_newton_system(hess: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Solve H d = -grad with diagonal equilibration and a ridge fallback."""
    d = np.sqrt(np.maximum(np.diag(hess), 1e-300))
    scaled = hess / np.outer(d, d)
    rhs = -grad / d
    ridge = 0.0
    for _ in range(6):
        try:
            step = np.linalg.solve(scaled + ridge * np.eye(len(grad)), rhs)
            return step / d
        except np.linalg.LinAlgError:
            ridge = 1e-12 if ridge == 0.0 else ridge * 100.0
    step, *_ = np.linalg.lstsq(scaled, rhs, rcond=None)
    return step / d


def _center(
    z: np.ndarray,
    t_bar: float,
    f0_grad: np.ndarray,
    cons: Sequence[ConstraintFn],
    lb: np.ndarray,
    settings: BarrierSettings,
) -> tuple[np.ndarray, int]:
    """Newton centering of t_bar * f0 + barrier at fixed barrier weight."""
    n = len(z)
    bounded = np.isfinite(lb)
    lb_b = lb[bounded]
    value_fns = [_value_fn(c) for c in cons]

    def psi_at(point: np.ndarray) -> float:
        slack_b = point[bounded] - lb_b
        if slack_b.size and np.min(slack_b) <= 0.0:
            return np.inf
        total = t_bar * float(f0_grad @ point)
        if slack_b.size:
            total -= float(np.sum(np.log(slack_b)))
        for vfn in value_fns:
            v = vfn(point)
            if v >= 0.0:
                return np.inf
            total -= math.log(-v)
        return total

    def in_domain(point: np.ndarray) -> bool:
        slack_b = point[bounded] - lb_b
        if slack_b.size and np.min(slack_b) <= 0.0:
            return False
        return all(vfn(point) < 0.0 for vfn in value_fns)

    iters = 0
    for _ in range(settings.max_newton):
        grad = t_bar * f0_grad.copy()
        hess = np.zeros((n, n))
        psi = t_bar * float(f0_grad @ z)
        slack_b = z[bounded] - lb_b
        if slack_b.size:
            psi -= float(np.sum(np.log(slack_b)))
            inv = 1.0 / slack_b
            grad[bounded] -= inv
            hess[bounded, bounded] += inv * inv
        for c in cons:
            v, g, h = c(z)
            s = max(-v, _TINY)
            psi -= math.log(s)
            gs = g / s
            grad += gs
            hess += np.outer(gs, gs)
            if h is not None:
                hess += h / s
        step = _solve_newton_system(hess, grad)
        decrement = -float(grad @ step)
        if decrement <= 0.0 or 0.5 * decrement <= settings.newton_tol:
            break
        iters += 1
        lam = math.sqrt(decrement)
        # Damped Newton: inside the quadratic-convergence region the full
        # step is taken on a domain check alone; the centering cost there
        # changes by less than float resolution, so an Armijo test on it
        # would only thrash.  Farther out, backtrack on the cost as usual.
        if lam <= 0.25:
            t_step = 1.0
            while t_step > 1e-16 and not in_domain(z + t_step * step):
                t_step *= settings.backtrack
            if t_step <= 1e-16:
                break
            z = z + t_step * step
        else:
            t_step = 1.0 / (1.0 + lam)
            while t_step > 1e-16 and not in_domain(z + t_step * step):
                t_step *= settings.backtrack
            accepted = False
            while t_step > 1e-16:
                cand = z + t_step * step
                if psi_at(cand) <= psi - settings.armijo * t_step * decrement:
                    accepted = True
                    break
                t_step *= settings.backtrack
            if not accepted:
                break
            z = cand
    return z, iters


def _lift(con: ConstraintFn, n: int, extra: int = 1) -> ConstraintFn:
    """Reuse an n-variable constraint on z = [x, appended variables]."""

    def lifted(z: np.ndarray):
        v, g, h = con(z[:n])
        grad = np.zeros(n + extra)
        grad[:n] = g
        hess = None
        if h is not None:
            hess = np.zeros((n + extra, n + extra))
            hess[:n, :n] = h
        return v, grad, hess

    fast = getattr(con, "value_only", None)
    if fast is not None:
        lifted.value_only = lambda z: fast(z[:n])
    else:
        lifted.value_only = lambda z: con(z[:n])[0]
    return lifted


def _term_cap(term: TermFn, n: int) -> ConstraintFn:
    """Epigraph constraint t - f(x) <= 0 over z = [x, t]."""

    def cap(z: np.ndarray):
        v, g = term(z[:n])
        grad = np.zeros(n + 1)
        grad[:n] = -g
        grad[n] = 1.0
        return z[n] - v, grad, None

    fast = getattr(term, "value_only", None)
    if fast is not None:
        cap.value_only = lambda z: z[n] - fast(z[:n])
    else:
        cap.value_only = lambda z: z[n] - term(z[:n])[0]
    return cap


def _phase_one(
    x: np.ndarray,
    problem: MaxMinProblem,
    settings: BarrierSettings,
) -> tuple[np.ndarray, bool, int]:
    """
    Minimise the maximum constraint violation to recover a strictly
    feasible point.  Works on w = [x, s] with constraints g_j(x) - s <= 0
    plus the original lower bounds; stops as soon as s can be pushed
    negative.
    """
    n = problem.n
    lb = problem.bounds()
    x = x.copy()
    bounded = np.isfinite(lb)
    x[bounded] = np.maximum(x[bounded], lb[bounded] + 1e-9)

    def max_violation(point: np.ndarray) -> float:
        if not problem.constraints:
            return -1.0
        return max(_value_fn(c)(point) for c in problem.constraints)

    def shift(con: ConstraintFn) -> ConstraintFn:
        lifted = _lift(con, n)

        def shifted(w: np.ndarray):
            v, g, h = lifted(w)
            g = g.copy()
            g[n] = -1.0
            return v - w[n], g, h

        base_val = lifted.value_only
        shifted.value_only = lambda w: base_val(w) - w[n]
        return shifted

    cons = [shift(c) for c in problem.constraints]
    s0 = max(max_violation(x), 0.0) + 1.0
    w = np.concatenate([x, [s0]])
    f0_grad = np.zeros(n + 1)
    f0_grad[n] = 1.0  # minimise s
    lb_w = np.concatenate([lb, [-np.inf]])

    t_bar = settings.t_init
    newton_total = 0
    for _ in range(settings.max_outer):
        w, it = _center(w, t_bar, f0_grad, cons, lb_w, settings)
        newton_total += it
        if max_violation(w[:n]) < -1e-12:
            return w[:n], True, newton_total
        if (len(cons) + int(bounded.sum())) / t_bar < settings.gap_tol:
            break
        t_bar *= settings.t_mult
    return w[:n], max_violation(w[:n]) < 0.0, newton_total


def solve_maxmin(
    problem: MaxMinProblem,
    settings: BarrierSettings | None = None,
) -> KernelResult:
    """
    Maximise the minimum of the objective terms subject to the constraints.

    Runs a standard barrier method on the epigraph form.  Returns the best
    iterate with KKT diagnostics; status is ``converged`` when the duality
    gap surrogate, the KKT residual, and feasibility all clear their
    tolerances, ``infeasible-start`` when phase I cannot find a strictly
    feasible point, and ``max-iterations`` otherwise.
    """
    settings = settings or BarrierSettings()
    n = problem.n
    lb = problem.bounds()
    x = np.asarray(problem.x0, dtype=float).copy()
    if x.shape != (n,):
        raise ValueError("x0 must have shape (n,)")

    newton_total = 0
    bounded = np.isfinite(lb)
    strictly_ok = np.all(x[bounded] > lb[bounded]) and all(
        _value_fn(c)(x) < 0.0 for c in problem.constraints
    )
    if not strictly_ok:
        x, ok, it = _phase_one(x, problem, settings)
        newton_total += it
        if not ok:
            value = min(t(x)[0] for t in problem.terms)
            viol = max((_value_fn(c)(x) for c in problem.constraints), default=0.0)
            return KernelResult(
                x=x,
                value=value,
                max_violation=max(viol, 0.0),
                kkt_residual=np.inf,
                newton_iters=newton_total,
                outer_iters=0,
                status=STATUS_INFEASIBLE_START,
            )

    cons = [_term_cap(t, n) for t in problem.terms]
    cons.extend(_lift(c, n) for c in problem.constraints)
    m = len(cons) + int(bounded.sum())
    t0 = min(t(x)[0] for t in problem.terms)
    z = np.concatenate([x, [t0 - max(1.0, 0.1 * abs(t0))]])
    lb_z = np.concatenate([lb, [-np.inf]])
    f0_grad = np.zeros(n + 1)
    f0_grad[n] = -1.0  # maximise t

    t_bar = settings.t_init
    outer = 0
    gap_ok = False
    while outer < settings.max_outer:
        z, it = _center(z, t_bar, f0_grad, cons, lb_z, settings)
        newton_total += it
        outer += 1
        if m / t_bar < settings.gap_tol:
            gap_ok = True
            break
        t_bar *= settings.t_mult

    x_star = z[:n]
    value = min(t(x_star)[0] for t in problem.terms)
    viol = max((_value_fn(c)(x_star) for c in problem.constraints), default=0.0)

    n_terms = len(problem.terms)
    lam_cons = np.array([1.0 / (t_bar * max(-c(z)[0], _TINY)) for c in cons])
    lam_bounds = np.zeros(n)
    slack_b = z[:n][bounded] - lb[bounded]
    lam_bounds[bounded] = 1.0 / (t_bar * np.maximum(slack_b, _TINY))
    multipliers = {
        "terms": lam_cons[:n_terms],
        "constraints": lam_cons[n_terms:],
        "bounds": lam_bounds,
    }
    kkt = kkt_residual(problem, x_star, multipliers)
    # The residual is judged relative to the size of the terms it cancels;
    # in raw units a badly scaled problem leaves dual noise proportional to
    # the multiplier magnitudes even at an optimal point.
    kkt_scale = 1.0 + float(np.sum(np.abs(lam_bounds)))
    for lam, term in zip(multipliers["terms"], problem.terms):
        kkt_scale += lam * float(np.linalg.norm(term(x_star)[1]))
    for lam, con in zip(multipliers["constraints"], problem.constraints):
        kkt_scale += lam * float(np.linalg.norm(con(x_star)[1]))
    status = (
        STATUS_CONVERGED
        if gap_ok
        and kkt <= settings.kkt_tol * kkt_scale
        and max(viol, 0.0) <= settings.feas_tol
        else STATUS_MAX_ITERATIONS
    )
    return KernelResult(
        x=x_star,
        value=value,
        max_violation=max(viol, 0.0),
        kkt_residual=kkt,
        newton_iters=newton_total,
        outer_iters=outer,
        status=status,
        multipliers=multipliers,
    )


def kkt_residual(problem: MaxMinProblem, x: np.ndarray, multipliers: dict) -> float:
    """
    KKT residual of the epigraph problem at (x, t = min_i f_i(x)).

    Sums the stationarity norm with the absolute complementary-slackness
    products for the term caps, the constraints, and the active lower
    bounds.  Zero exactly at a KKT point.
    """
    lam_t = np.asarray(multipliers["terms"], dtype=float)
    lam_g = np.asarray(multipliers["constraints"], dtype=float)
    lam_b = np.asarray(multipliers["bounds"], dtype=float)
    lb = problem.bounds()

    term_vals = []
    term_grads = []
    for term in problem.terms:
        v, g = term(x)
        term_vals.append(v)
        term_grads.append(g)
    t = min(term_vals)

    stat_x = np.zeros(problem.n)
    comp = 0.0
    for lam, v, g in zip(lam_t, term_vals, term_grads):
        stat_x -= lam * g
        comp += abs(lam * (t - v))
    for lam, con in zip(lam_g, problem.constraints):
        v, g, _ = con(x)
        stat_x += lam * g
        comp += abs(lam * v)
    for k in range(problem.n):
        if np.isfinite(lb[k]):
            stat_x[k] -= lam_b[k]
            comp += abs(lam_b[k] * (lb[k] - x[k]))
    stat_t = -1.0 + lam_t.sum()
    stationarity = float(np.sqrt(np.sum(stat_x * stat_x) + stat_t * stat_t))
    return stationarity + comp
