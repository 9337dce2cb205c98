"""Randomized property runner.

Every registered suite draws random channels, priors and orders, evaluates
one quantitative statement about Renyi quantities, and reports the worst
margin. A positive margin means the statement holds with room to spare; a
suite counts a violation when a margin falls below minus ten times its
tolerance. Instance streams are derived from (seed, suite id, index), so any
violation can be replayed with :func:`run_instance`.
"""

from __future__ import annotations

import math
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.stats import norm

from . import capacity as cap
from . import families as fam
from . import measures as ms
from .errors import EmptyCore, NotConverged, UnknownSuite
from .measures import INF, FiniteChannel, Prior

SLACK_FACTOR = 10.0
SOLVER_TOL = 1e-7
# clustered random rows can stall the solver; its bracket stays valid
SOLVER_MAX_ITER = 600
MC_FAMILY_ALPHA = 0.0027  # false-alarm rate of a single 3-sigma check


@dataclass
class PropertyReport:
    suite: str
    lemma: str
    instances: int
    violations: int
    worst_margin: float
    tolerance: float
    seed: int
    failing_instances: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------
# random instances


def random_order(rng: np.random.Generator, zero: bool = True, one: bool = True, inf: bool = True) -> float:
    """Log-uniform on [1e-2, 1e2] with atoms at 0, 1 and inf."""
    u = rng.random()
    if u < 0.05 and zero:
        return 0.0
    if u < 0.10 and one:
        return 1.0
    if u < 0.15 and inf:
        return INF
    return float(10.0 ** rng.uniform(-2.0, 2.0))


def random_pmf(rng: np.random.Generator, m: int, sparse: bool | None = None) -> np.ndarray:
    p = rng.dirichlet(np.full(m, rng.choice([0.3, 1.0, 3.0])))
    if (rng.random() < 0.3 if sparse is None else sparse) and m > 1:
        mask = rng.random(m) < 0.3
        mask[rng.integers(m)] = False
        p = np.where(mask, 0.0, p)
        if p.sum() == 0:
            p[rng.integers(m)] = 1.0
    return p / p.sum()


def random_channel(
    rng: np.random.Generator, n: int | None = None, m: int | None = None, max_n: int = 6, max_m: int = 6
) -> FiniteChannel:
    """Dirichlet rows; half the draws plant near-duplicate rows, the rest keep rows apart."""
    n = int(rng.integers(1, max_n + 1)) if n is None else n
    m = int(rng.integers(1, max_m + 1)) if m is None else m
    rows = np.stack([random_pmf(rng, m) for _ in range(n)])
    if rng.random() < 0.5 and n > 1:
        for j in range(1, n):
            if rng.random() < 0.5:
                i = int(rng.integers(j))
                rows[j] = rows[i] + 1e-7 * (random_pmf(rng, m, sparse=False) - rows[i])
    else:
        for j in range(1, n):
            for _ in range(20):
                if np.min(np.abs(rows[:j] - rows[j]).sum(axis=1)) >= 1e-6:
                    break
                rows[j] = random_pmf(rng, m, sparse=False)
    rows = np.maximum(rows, 0.0)
    return FiniteChannel(rows / rows.sum(axis=1, keepdims=True))


def random_prior(rng: np.random.Generator, n: int) -> Prior:
    return Prior(random_pmf(rng, n))


def _solve(ch: FiniteChannel, a: float) -> cap.CapacitySolution:
    """Single-start solve; a non-converged bracket is still a valid bracket."""
    try:
        return cap.solve_capacity(ch, a, tol=SOLVER_TOL, max_iter=SOLVER_MAX_ITER, n_starts=1)
    except NotConverged as exc:
        return exc.solution


def _gap_tol(*sols: cap.CapacitySolution) -> float:
    return sum(s.gap for s in sols)


def _rel(x: float, *scale: float) -> float:
    """Divide by max(1, |scale|) so identities are tested to a relative tolerance."""
    s = max([1.0] + [abs(v) for v in scale if math.isfinite(v)])
    return x / s


def _ge(lhs: float, rhs: float) -> float:
    """Margin of lhs >= rhs with infinities handled."""
    if lhs == rhs:
        return 0.0
    if lhs == INF or rhs == -INF:
        return INF
    if rhs == INF or lhs == -INF:
        return -INF
    return _rel(lhs - rhs, lhs, rhs)


def _eq(x: float, y: float) -> float:
    if x == y:
        return 0.0
    if not (math.isfinite(x) and math.isfinite(y)):
        return -INF
    return -abs(_rel(x - y, x, y))


# --------------------------------------------------------------------------
# divergence suites


def _pinsker(rng: np.random.Generator) -> float:
    m = int(rng.integers(1, 7))
    w, q = random_pmf(rng, m), random_pmf(rng, m)
    a = random_order(rng)
    d = ms.renyi_divergence(w, q, a)
    return _ge(d, min(1.0, a) / 2.0 * float(np.abs(w - q).sum()) ** 2)


def _divergence_order_monotone(rng: np.random.Generator) -> float:
    m = int(rng.integers(1, 7))
    w, q = random_pmf(rng, m), random_pmf(rng, m)
    a1, a2 = sorted((random_order(rng), random_order(rng)))
    return _ge(ms.renyi_divergence(w, q, a2), ms.renyi_divergence(w, q, a1))


def _divergence_scaling(rng: np.random.Generator) -> float:
    m = int(rng.integers(1, 7))
    w = random_pmf(rng, m) * rng.uniform(0.2, 5.0)
    q = random_pmf(rng, m, sparse=False) * rng.uniform(0.2, 5.0)
    a = random_order(rng)
    v = q * rng.uniform(0.05, 1.0, m)
    smaller = _ge(ms.renyi_divergence(w, v, a), ms.renyi_divergence(w, q, a))
    g = float(rng.uniform(0.1, 10.0))
    if a == 1.0:
        # at order one the shift is ||W|| ln g; exact as stated only for probability W
        w = w / w.sum()
    shifted = _eq(ms.renyi_divergence(w, g * v, a), ms.renyi_divergence(w, v, a) - math.log(g))
    return min(smaller, shifted)


def _divergence_convexity_q(rng: np.random.Generator) -> float:
    m = int(rng.integers(1, 7))
    w, q0, q1 = random_pmf(rng, m), random_pmf(rng, m), random_pmf(rng, m)
    a, b = random_order(rng), float(rng.uniform(0.01, 0.99))
    lhs = ms.renyi_divergence(w, b * q1 + (1 - b) * q0, a)
    d1, d0 = ms.renyi_divergence(w, q1, a), ms.renyi_divergence(w, q0, a)
    return _ge(b * d1 + (1 - b) * d0, lhs)


def _divergence_joint_quasiconvexity(rng: np.random.Generator) -> float:
    m = int(rng.integers(1, 7))
    w0, w1, q0, q1 = (random_pmf(rng, m) for _ in range(4))
    a, b = random_order(rng), float(rng.uniform(0.01, 0.99))
    lhs = ms.renyi_divergence(b * w1 + (1 - b) * w0, b * q1 + (1 - b) * q0, a)
    return _ge(max(ms.renyi_divergence(w1, q1, a), ms.renyi_divergence(w0, q0, a)), lhs)


def _random_partition(rng: np.random.Generator, m: int) -> list[list[int]]:
    labels = rng.integers(0, max(1, int(rng.integers(1, m + 1))), m)
    return [np.flatnonzero(labels == k).tolist() for k in np.unique(labels)]


def _dpi_coarsening(rng: np.random.Generator) -> float:
    m = int(rng.integers(1, 7))
    w, q = random_pmf(rng, m), random_pmf(rng, m)
    a = random_order(rng)
    part = _random_partition(rng, m)
    coarse = ms.renyi_divergence(ms.coarsen_measure(w, part), ms.coarsen_measure(q, part), a)
    return _ge(ms.renyi_divergence(w, q, a), coarse)


# --------------------------------------------------------------------------
# mean measure and information suites


def _split(p1: np.ndarray, p2: np.ndarray) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """Common part and the two mutually singular remainders of two priors."""
    low = np.minimum(p1, p2)
    # 2 - ||P1 - P2|| computed without cancellation
    common = 2.0 * float(low.sum())
    tv = float(np.abs(p1 - p2).sum())
    s_and = 2.0 * low / common if common > 0 else np.zeros_like(low)
    s1 = 2.0 * (p1 - low) / tv
    s2 = 2.0 * (p2 - low) / tv
    return tv, s_and, s1, s2


def _two_priors(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    p1 = random_pmf(rng, n)
    p2 = random_pmf(rng, n)
    if np.abs(p1 - p2).sum() < 1e-9 or np.abs(p1 - p2).sum() > 2 - 1e-9:
        p2 = 0.5 * (p1 + np.full(n, 1.0 / n)) if n > 1 else p1
    return p1, p2


def _mean_lipschitz(rng: np.random.Generator) -> float:
    ch = random_channel(rng, n=int(rng.integers(2, 7)))
    p1, p2 = _two_priors(rng, ch.n_inputs)
    a = random_order(rng, zero=False, inf=False)
    tv = float(np.abs(p1 - p2).sum())
    if tv == 0:
        return INF
    diff = float(np.abs(ms.mean_measure(ch, p1, a).weights - ms.mean_measure(ch, p2, a).weights).sum())
    if a <= 1:
        return _ge(tv / a, diff)
    _, _, s1, s2 = _split(p1, p2)
    far = float(np.abs(ms.mean_measure(ch, s1, a).weights - ms.mean_measure(ch, s2, a).weights).sum())
    return _ge((tv / 2.0) ** (1.0 / a) * far, diff)


def _mean_norm_logconvex(rng: np.random.Generator) -> float:
    ch = random_channel(rng)
    p = random_prior(rng, ch.n_inputs)
    a1, a2 = sorted(10.0 ** rng.uniform(-2, 2, 2))
    t = float(rng.uniform(0.05, 0.95))
    am = t * a1 + (1 - t) * a2

    def f(a: float) -> float:
        return a * math.log(ms.mean_measure(ch, p, a).norm)

    return _ge(t * f(a1) + (1 - t) * f(a2), f(am))


def _prior_decomposition(rng: np.random.Generator) -> float:
    n = int(rng.integers(2, 7))
    p1, p2 = _two_priors(rng, n)
    tv, s_and, s1, s2 = _split(p1, p2)
    if tv == 0:
        return INF
    errs = [
        abs(s_and.sum() - 1) if tv < 2 else 0.0, abs(s1.sum() - 1), abs(s2.sum() - 1),
        float(np.abs((1 - tv / 2) * s_and + tv / 2 * s1 - p1).max()),
        float(np.abs((1 - tv / 2) * s_and + tv / 2 * s2 - p2).max()),
        float(np.abs(s1 * s2).max()),
        max(0.0, -float(min(s_and.min(), s1.min(), s2.min()))),
    ]
    return -max(errs)


def _info_order_monotone(rng: np.random.Generator) -> float:
    ch = random_channel(rng)
    p = random_prior(rng, ch.n_inputs)
    a1, a2 = sorted((random_order(rng), random_order(rng)))
    i1, i2 = ms.renyi_information(ch, p, a1), ms.renyi_information(ch, p, a2)
    i_inf = ms.renyi_information(ch, p, INF)
    return min(_ge(i2, i1), _ge(i1, 0.0), _ge(math.log(p.support.size), i_inf))


def _info_derivative_fd(rng: np.random.Generator) -> float:
    ch = random_channel(rng)
    p = random_prior(rng, ch.n_inputs)
    a = float(10.0 ** rng.uniform(-1, 1)) if rng.random() > 0.1 else 1.0
    h = 1e-4 * a
    d = ms.information_order_derivative(ch, p, a)
    fd = (ms.renyi_information(ch, p, a + h) - ms.renyi_information(ch, p, a - h)) / (2 * h)
    # central differences carry an O(h^2) error; scale it into the margin
    return min(_ge(d, 0.0), 1e-3 * _eq(d, fd))


def _e0_identity(rng: np.random.Generator) -> float:
    ch = random_channel(rng)
    p = random_prior(rng, ch.n_inputs)
    rho = float(10.0 ** rng.uniform(-2, 2))
    return _eq(ms.gallager_e0(rho, ch, p), rho * ms.renyi_information(ch, p, 1.0 / (1.0 + rho)))


def _sibson_identity(rng: np.random.Generator) -> float:
    ch = random_channel(rng)
    p = random_prior(rng, ch.n_inputs)
    q = random_pmf(rng, ch.n_outputs)
    a = random_order(rng, zero=False)
    lhs = ms.joint_divergence(ch, p, q, a)
    rhs = ms.renyi_information(ch, p, a) + ms.renyi_divergence(ms.renyi_mean(ch, p, a), q, a)
    return _eq(lhs, rhs)


def _simplex_grid(m: int, N: int) -> np.ndarray:
    return cap._compositions(N, m) / N


def _joint_batch(logW: np.ndarray, logP: np.ndarray, logq: np.ndarray, a: float) -> np.ndarray:
    D = ms._div_rows(logW[None, :, :], logq[:, None, :], a)
    if a == INF:
        return D.max(axis=1)
    if a == 0:
        return -ms._lse(logP[None, :] - D)
    if abs(a - 1) < ms.NEAR_ONE:
        return D @ np.exp(logP)
    with np.errstate(invalid="ignore"):
        out = ms._lse(logP[None, :] + (a - 1) * D) / (a - 1)
    if a > 1:
        out = np.where(np.any(D == INF, axis=1), INF, out)
    return out


def _info_min_over_q(rng: np.random.Generator) -> float:
    ch = random_channel(rng, max_m=3)
    p = random_prior(rng, ch.n_inputs)
    a = random_order(rng)
    s, logW, logP = ms._supported(ch, p)
    grid = _simplex_grid(ch.n_outputs, 60)
    best = float(np.min(_joint_batch(logW, logP, ms._log(grid), a)))
    info = ms.renyi_information(ch, p, a)
    at_mean = ms.joint_divergence(ch, p, ms.renyi_mean(ch, p, a), a)
    return min(_ge(best, info), _eq(at_mean, info))


# --------------------------------------------------------------------------
# capacity suites


def _capacity_order_monotone(rng: np.random.Generator) -> float:
    ch = random_channel(rng)
    a1, a2 = sorted((random_order(rng, zero=False), random_order(rng, zero=False)))
    s1, s2 = _solve(ch, a1), _solve(ch, a2)
    return _ge(s2.upper_bound + _gap_tol(s1, s2), s1.lower_bound)


def _capacity_convex_transform(rng: np.random.Generator) -> float:
    ch = random_channel(rng)
    if rng.random() < 0.5:
        a0, a1, a2 = np.sort(1.0 + 10.0 ** rng.uniform(-2, 2, 3))
        s0, s1, s2 = (_solve(ch, float(x)) for x in (a0, a1, a2))
        w = (a2 - a1) / (a2 - a0)
        rhs = w * (a0 - 1) * s0.upper_bound + (1 - w) * (a2 - 1) * s2.upper_bound
        return _ge(rhs, (a1 - 1) * s1.lower_bound)
    a0, a1 = np.sort(10.0 ** rng.uniform(-2, 0, 2))
    s0, s1 = _solve(ch, float(a0)), _solve(ch, float(a1))
    return _ge((1 - a0) / a0 * s0.upper_bound, (1 - a1) / a1 * s1.lower_bound)


def _uec_prior(rng: np.random.Generator) -> float:
    ch = random_channel(rng)
    p1, p2 = _two_priors(rng, ch.n_inputs)
    delta = 0.5 * float(np.abs(p1 - p2).sum())
    u = rng.random()
    eta = 0.0 if u < 0.1 else 1.0 if u < 0.2 else float(10.0 ** rng.uniform(-2, 2))
    if eta == 0:
        # C_0 <= C_a for a > 0: any small-order upper bound serves
        c0 = _solve(ch, 1e-2).upper_bound
        bound = cap.uec_prior_bound(delta, 0.0, 0.0, _solve(ch, 1.0).upper_bound, c0)
        orders = [0.0]
    else:
        bound = cap.uec_prior_bound(delta, eta, _solve(ch, eta).upper_bound)
        orders = [0.0, eta, *(eta * rng.random(2))]
    worst = max(abs(ms.renyi_information(ch, p1, a) - ms.renyi_information(ch, p2, a)) for a in orders)
    return _ge(bound + 1e-12, worst)


def _uec_order(rng: np.random.Generator) -> float:
    ch = random_channel(rng)
    p = random_prior(rng, ch.n_inputs)
    eta = float(10.0 ** rng.uniform(-2, 2))
    c_eta = _solve(ch, eta).upper_bound
    eps_eta, gamma = cap.uec_order_constants(eta, c_eta)
    eps = eps_eta * float(rng.uniform(0.1, 1.0))
    a1, a2 = rng.uniform(eps, eta - eps, 2)
    diff = abs(ms.renyi_information(ch, p, float(a1)) - ms.renyi_information(ch, p, float(a2)))
    return _ge(gamma / eps**2 * abs(a1 - a2) + 1e-12, diff)


def _minimax_bruteforce(rng: np.random.Generator) -> float:
    ch = random_channel(rng, max_n=3, max_m=3)
    a = random_order(rng, zero=False)
    sol = _solve(ch, a)
    radius = cap.radius_bruteforce(ch, a, grid_resolution=40)
    priors = _simplex_grid(ch.n_inputs, 40)
    best_info = max(ms.renyi_information(ch, Prior(p), a) for p in priors)
    # no output distribution beats the capacity, no prior exceeds it
    return min(_ge(radius, sol.lower_bound), _ge(sol.upper_bound, best_info))


def _ehb(rng: np.random.Generator) -> float:
    ch = random_channel(rng)
    a = random_order(rng, zero=False)
    sol = _solve(ch, a)
    q = random_pmf(rng, ch.n_outputs)
    r = cap.relative_radius(ch, q, a)
    if r == INF:
        return INF
    return _ge(r + sol.gap, sol.lower_bound + ms.renyi_divergence(sol.center, q, a))


def _center_continuity(rng: np.random.Generator) -> float:
    ch = random_channel(rng)
    a, e = sorted(10.0 ** rng.uniform(-2, 2, 2))
    sa, se = _solve(ch, float(a)), _solve(ch, float(e))
    rep = cap.center_continuity_check(ch, float(a), float(e), sa, se)
    return min(
        _ge(rep.capacity_increase + rep.slack, rep.center_divergence),
        _ge(rep.distance_bound + 1e-12, rep.center_distance),
    )


def _union_bounds(rng: np.random.Generator) -> float:
    m = int(rng.integers(1, 7))
    ch1, ch2 = random_channel(rng, m=m, max_n=4), random_channel(rng, m=m, max_n=4)
    a = random_order(rng, zero=False)
    u = cap.union_channel(ch1, ch2)
    s1, s2, su = _solve(ch1, a), _solve(ch2, a), _solve(u, a)
    slack = _gap_tol(s1, s2, su)
    upper = float(np.logaddexp(s1.upper_bound, s2.upper_bound))
    return min(_ge(su.upper_bound + slack, max(s1.lower_bound, s2.lower_bound)), _ge(upper + slack, su.lower_bound))


def _product_additivity(rng: np.random.Generator) -> float:
    ch1, ch2 = random_channel(rng, max_n=3, max_m=3), random_channel(rng, max_n=3, max_m=3)
    a = random_order(rng, zero=False)
    s1, s2, sp = _solve(ch1, a), _solve(ch2, a), _solve(cap.product_channel(ch1, ch2), a)
    slack = _gap_tol(s1, s2, sp)
    return min(
        _ge(sp.upper_bound + slack, s1.lower_bound + s2.lower_bound),
        _ge(s1.upper_bound + s2.upper_bound + slack, sp.lower_bound),
    )


def _epsilon_core(rng: np.random.Generator) -> float:
    ch = random_channel(rng)
    a = random_order(rng, zero=False)
    sol = _solve(ch, a)
    eps = float(10.0 ** rng.uniform(-3, 0))
    try:
        core = cap.epsilon_core(ch, a, eps, sol)
    except EmptyCore:
        return -INF
    sc = _solve(core, a)
    slack = _gap_tol(sol, sc)
    same = min(_ge(sc.upper_bound + slack, sol.lower_bound), _ge(sol.upper_bound + slack, sc.lower_bound))
    p = random_prior(rng, core.n_inputs)
    excess = sol.capacity - ms.renyi_information(core, p, a) - ms.renyi_divergence(
        ms.renyi_mean(core, p, a), sol.center, a
    )
    # the center error of the bracket enters through D(q_P || center)
    return min(same, _ge(excess + slack + 1e-9, 0.0), _ge(eps + slack + 1e-9, excess))


def _convex_hull_invariance(rng: np.random.Generator) -> float:
    ch = random_channel(rng)
    a = random_order(rng, zero=False)
    extra = [random_prior(rng, ch.n_inputs) for _ in range(int(rng.integers(1, 4)))]
    hull = cap.convex_hull_augment(ch, extra)
    s, sh = _solve(ch, a), _solve(hull, a)
    slack = _gap_tol(s, sh)
    return min(_ge(sh.upper_bound + slack, s.lower_bound), _ge(s.upper_bound + slack, sh.lower_bound))


def _solve_constrained(ch: FiniteChannel, a: float, cons: cap.ConstraintSet) -> cap.CapacitySolution:
    try:
        return cap.solve_constrained_capacity(ch, a, cons, tol=SOLVER_TOL, max_iter=SOLVER_MAX_ITER)
    except NotConverged as exc:
        return exc.solution


def _constrained_slack(rng: np.random.Generator) -> float:
    ch = random_channel(rng)
    a = float(10.0 ** rng.uniform(-1, 1))
    costs = rng.uniform(0.0, 1.0, ch.n_inputs)
    free = _solve(ch, a)
    spent = float(free.prior.probs @ costs)
    if rng.random() < 0.5:
        budget = spent + float(rng.uniform(0, 1))
        con = _solve_constrained(ch, a, cap.LinearCost(tuple(costs), budget))
        slack = _gap_tol(free, con)
        return min(_ge(con.upper_bound + slack, free.lower_bound), _ge(free.upper_bound + slack, con.lower_bound))
    budget = float(rng.uniform(costs.min(), costs.max()))
    con = _solve_constrained(ch, a, cap.LinearCost(tuple(costs), budget))
    feasible = _ge(budget + 1e-9, float(con.prior.probs @ costs))
    return min(feasible, _ge(free.upper_bound + _gap_tol(free, con), con.lower_bound))


def _constrained_ehb(rng: np.random.Generator) -> float:
    ch = random_channel(rng)
    a = float(10.0 ** rng.uniform(-1, 1))
    costs = rng.uniform(0.0, 1.0, ch.n_inputs)
    cons = cap.LinearCost(tuple(costs), float(rng.uniform(costs.min(), costs.max())))
    sol = _solve_constrained(ch, a, cons)
    q = random_pmf(rng, ch.n_outputs)
    sup = cap.constrained_sup_joint(ch, a, cons, q)
    if sup == INF:
        return INF
    return _ge(sup + sol.gap, sol.lower_bound + ms.renyi_divergence(sol.center, q, a))


# --------------------------------------------------------------------------
# Poisson suites


def _random_poisson(rng: np.random.Generator) -> tuple[float, float, float]:
    T = float(rng.uniform(0.2, 3.0))
    a = 0.0 if rng.random() < 0.3 else float(rng.uniform(0.0, 2.0))
    b = a + float(rng.uniform(0.1, 3.0))
    return T, a, b


def _random_profile(rng: np.random.Generator, T: float, a: float, b: float, k: int = 4) -> fam.PiecewiseConstant:
    cuts = np.sort(rng.uniform(0, T, k - 1))
    return fam.PiecewiseConstant(cuts, rng.uniform(a, b, k))


def _poisson_closedform_vs_quadrature(rng: np.random.Generator) -> float:
    T, a, b = _random_poisson(rng)
    alpha = float(10.0 ** rng.uniform(-1, 1))
    c = float(rng.uniform(a, b))
    spec = fam.PoissonFamilySpec(T, a, b, constraint=fam.MeanEq(c))
    res = fam.poisson_mean_capacity(spec, alpha)
    x = float(res.center)
    # an {a, b}-valued profile with mean c attains the closed form
    two_level = fam.PiecewiseConstant([(c - a) / (b - a) * T], [b, a])
    # a callable center sends the divergence through adaptive quadrature
    attained = fam.poisson_divergence(two_level, lambda t: np.full_like(t, x), T, alpha)
    # any profile with values in [a, b] and mean c stays below it
    f = _random_profile(rng, T, a, b)
    g = f.map(lambda v: v)
    shift = c - fam.intensity_integral(g, T) / T
    g = g.map(lambda v: np.clip(v + shift, a, b))
    other = fam.poisson_divergence(g, x, T, alpha)
    mean_ok = abs(fam.intensity_integral(g, T) / T - c) < 1e-12 * max(1.0, c)
    jensen = _ge(res.capacity + 1e-9, other) if mean_ok else INF
    bounded = fam.poisson_bounded_capacity(T, a, b, alpha)
    radius = fam.poisson_divergence(f, bounded.center, T, alpha)
    return min(
        _eq(attained, res.capacity),
        _eq(res.alt_capacity, res.capacity),
        jensen,
        _ge(bounded.capacity + 1e-9, radius),
    )


def _mc_z(n_instances: int) -> float:
    return float(norm.isf(MC_FAMILY_ALPHA / (2.0 * max(1, n_instances))))


def _poisson_mc_vs_closedform(rng: np.random.Generator, n_instances: int = 1) -> float:
    T = float(rng.uniform(0.3, 1.5))
    f, g = float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.5, 2.0))
    alpha = float(rng.uniform(0.2, 0.9)) if rng.random() < 0.5 else float(rng.uniform(1.1, 2.0))
    est = fam.poisson_mc_divergence(f, g, T, alpha, 20_000, seed=int(rng.integers(2**31)))
    exact = fam.poisson_divergence(f, g, T, alpha)
    return _mc_z(n_instances) * est.stderr - abs(est.estimate - exact)


def _poisson_discretize_lower_bound(rng: np.random.Generator) -> float:
    T = float(rng.uniform(0.3, 1.5))
    b = float(rng.uniform(0.3, 2.0))
    alpha = float(10.0 ** rng.uniform(-0.5, 1))
    spec = fam.PoissonFamilySpec(T, 0.0, b)
    closed = fam.poisson_bounded_capacity(T, 0.0, b, alpha).capacity
    levels = int(rng.choice([2, 3]))
    s1 = _solve(fam.poisson_discretize(spec, 1, levels), alpha)
    s2 = _solve(fam.poisson_discretize(spec, 2, levels), alpha)
    slack = _gap_tol(s1, s2)
    return min(_ge(closed + slack, s2.lower_bound), _ge(s2.upper_bound + slack, s1.lower_bound))


# --------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class Suite:
    name: str
    lemma: str
    check: Callable[..., float]
    tolerance: float
    needs_count: bool = False


LEMMAS = {
    "pinsker": "divergence bounded below by min(1, a)/2 times squared total variation",
    "divergence-order": "divergence nondecreasing and lower semicontinuous in the order",
    "divergence-measures": "divergence antitone in the reference measure and shifted by -ln g under scaling",
    "divergence-convexity": "divergence convex in its second argument",
    "divergence-quasiconvexity": "divergence jointly quasi-convex",
    "divergence-dpi": "divergence does not increase under coarsening to a sub-sigma-algebra",
    "divergence-lsc": "divergence lower semicontinuous in setwise convergence",
    "mean-prior": "mean measure Lipschitz in the prior and the singular decomposition of two priors",
    "mean-order": "order-a power of the mean norm is log-convex in the order",
    "information-order": "information nonnegative, nondecreasing, differentiable in the order with the stated derivative",
    "information-gallager": "information is a rescaled Gallager function",
    "information-variational": "information is the minimum over output laws of the joint divergence, attained at the mean",
    "capacity-order": "capacity nondecreasing in the order, (a-1)C convex above one, (1-a)C/a nonincreasing below one",
    "finite-capacity-uec": "uniform equicontinuity of information in the prior and in the order",
    "minimax": "capacity equals the radius; sup over priors meets inf over output laws",
    "ehb": "radius at any output law exceeds capacity by at least the divergence of the center from it",
    "center-continuity": "capacity increase bounds the divergence between centers",
    "capacity-union": "capacity of a union between the largest part and log-sum-exp of the parts",
    "capacity-product": "capacity additive over products",
    "capacity-eps": "epsilon-core keeps the capacity",
    "capacity-hull": "convex hull keeps the capacity",
    "cost-constrained-minimax": "cost-constrained capacity and its center bound",
    "poisson-closed-forms": "closed-form Poisson capacities and centers",
}

COVERED_BY_IMPLICATION = {"divergence-lsc": "divergence-order-monotone"}


SUITES: dict[str, Suite] = {
    s.name: s
    for s in [
        Suite("pinsker", "pinsker", _pinsker, 1e-12),
        Suite("divergence-order-monotone", "divergence-order", _divergence_order_monotone, 1e-12),
        Suite("divergence-scaling", "divergence-measures", _divergence_scaling, 1e-12),
        Suite("divergence-convexity-q", "divergence-convexity", _divergence_convexity_q, 1e-12),
        Suite("divergence-joint-quasiconvexity", "divergence-quasiconvexity", _divergence_joint_quasiconvexity, 1e-12),
        Suite("dpi-coarsening", "divergence-dpi", _dpi_coarsening, 1e-12),
        Suite("mean-lipschitz", "mean-prior", _mean_lipschitz, 1e-12),
        Suite("mean-norm-logconvex", "mean-order", _mean_norm_logconvex, 1e-11),
        Suite("prior-decomposition", "mean-prior", _prior_decomposition, 1e-13),
        Suite("info-order-monotone", "information-order", _info_order_monotone, 1e-12),
        Suite("info-derivative-fd", "information-order", _info_derivative_fd, 1e-9),
        Suite("e0-identity", "information-gallager", _e0_identity, 1e-12),
        Suite("sibson-identity", "information-variational", _sibson_identity, 1e-11),
        Suite("info-min-over-q", "information-variational", _info_min_over_q, 1e-11),
        Suite("capacity-order-monotone", "capacity-order", _capacity_order_monotone, SOLVER_TOL),
        Suite("capacity-convex-transform", "capacity-order", _capacity_convex_transform, SOLVER_TOL),
        Suite("uec-prior", "finite-capacity-uec", _uec_prior, 1e-12),
        Suite("uec-order", "finite-capacity-uec", _uec_order, 1e-12),
        Suite("minimax-bruteforce", "minimax", _minimax_bruteforce, SOLVER_TOL),
        Suite("ehb", "ehb", _ehb, 1e-8),
        Suite("center-continuity", "center-continuity", _center_continuity, SOLVER_TOL),
        Suite("union-bounds", "capacity-union", _union_bounds, SOLVER_TOL),
        Suite("product-additivity", "capacity-product", _product_additivity, SOLVER_TOL),
        Suite("epsilon-core", "capacity-eps", _epsilon_core, SOLVER_TOL),
        Suite("convex-hull-invariance", "capacity-hull", _convex_hull_invariance, SOLVER_TOL),
        Suite("constrained-slack", "cost-constrained-minimax", _constrained_slack, SOLVER_TOL),
        Suite("constrained-ehb", "cost-constrained-minimax", _constrained_ehb, 1e-8),
        Suite("poisson-closedform-vs-quadrature", "poisson-closed-forms", _poisson_closedform_vs_quadrature, 1e-10),
        Suite("poisson-mc-vs-closedform", "poisson-closed-forms", _poisson_mc_vs_closedform, 0.0, True),
        Suite("poisson-discretize-lower-bound", "poisson-closed-forms", _poisson_discretize_lower_bound, SOLVER_TOL),
    ]
}


def coverage_table() -> list[dict]:
    """One row per statement: the suites exercising it (or the suite implying it)."""
    rows = []
    for key, text in LEMMAS.items():
        suites = [s.name for s in SUITES.values() if s.lemma == key]
        row = {"lemma": key, "statement": text, "suites": suites}
        if not suites and key in COVERED_BY_IMPLICATION:
            row["implied_by"] = COVERED_BY_IMPLICATION[key]
        rows.append(row)
    return rows


def uncovered_lemmas() -> list[str]:
    return [r["lemma"] for r in coverage_table() if not r["suites"] and "implied_by" not in r]


# --------------------------------------------------------------------------
# running


def instance_rng(suite: str, seed: int, index: int) -> np.random.Generator:
    key = zlib.crc32(suite.encode())
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(key, int(index))))


def _get(suite_id: str) -> Suite:
    try:
        return SUITES[suite_id]
    except KeyError:
        raise UnknownSuite(f"unknown suite {suite_id!r}") from None


def run_instance(suite_id: str, seed: int, index: int, n_instances: int = 1) -> float:
    """Margin of one instance; replays a recorded violation exactly."""
    suite = _get(suite_id)
    rng = instance_rng(suite_id, seed, index)
    if suite.needs_count:
        return suite.check(rng, n_instances)
    return suite.check(rng)


def run_suite(
    suite_id: str, n_instances: int = 500, seed: int = 0, tolerances: dict[str, float] | None = None
) -> PropertyReport:
    """Run one suite; ``tolerances`` may override the per-suite tolerance by id."""
    suite = _get(suite_id)
    tol = (tolerances or {}).get(suite_id, suite.tolerance)
    worst = INF
    bad: list[int] = []
    for i in range(n_instances):
        margin = run_instance(suite_id, seed, i, n_instances)
        if math.isnan(margin):
            margin = -INF
        worst = min(worst, margin)
        if margin < -SLACK_FACTOR * tol:
            bad.append(i)
    return PropertyReport(suite_id, suite.lemma, n_instances, len(bad), worst, tol, int(seed), bad)


def _run_one(args: tuple) -> PropertyReport:
    return run_suite(*args)


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("RENYI_THREADS", "1")))
    except ValueError:
        return 1


def run_all(
    suite_ids: Sequence[str] | None = None,
    n_instances: int = 500,
    seed: int = 0,
    tolerances: dict[str, float] | None = None,
    workers: int | None = None,
) -> list[PropertyReport]:
    """Run suites (all by default); output order follows ``suite_ids``."""
    ids = list(SUITES) if not suite_ids else list(suite_ids)
    for s in ids:
        _get(s)
    jobs = [(s, n_instances, seed, tolerances) for s in ids]
    workers = thread_count() if workers is None else workers
    if workers <= 1 or len(jobs) == 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, jobs))


def suite_ids() -> Iterable[str]:
    return SUITES.keys()
