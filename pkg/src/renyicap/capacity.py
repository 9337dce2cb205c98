"""Certified Rényi capacity, radius and center of finite channels.

Every solution carries a bracket: the information of the returned prior is
a lower bound on the capacity, and the largest divergence of a row from the
prior's Rényi mean is an upper bound. The iteration only has to find a good
prior; correctness rests on the bracket.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from typing import Any, Literal, Sequence, Union

import numpy as np
from scipy.optimize import brentq, least_squares

from .errors import (
    AlphabetMismatch,
    AlphabetTooLarge,
    DomainError,
    EmptyCore,
    InfeasibleConstraint,
    NotConverged,
    OrderOutOfRange,
)
from .formatting import fmt
from .measures import (
    INF,
    NEAR_ONE,
    ChannelLike,
    FiniteChannel,
    Order,
    OrderLike,
    Pmf,
    Prior,
    PriorLike,
    _div_rows,
    _joint,
    _log,
    _log_mean,
    _lse,
    _weights,
    as_channel,
    as_order,
    as_prior,
    binary_renyi_entropy,
    renyi_divergence,
)

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 200_000
N_RESTARTS = 8
# relative floating-point error allowed on each evaluated bound
BRACKET_ROUNDING = 32 * np.finfo(float).eps
PRUNE_EPS = 1e-3
# extra log-mass removed per unit step from rows well below the lower bound
PRUNE_DECAY = math.log(0.5)
MAX_STEP = 16.0


@dataclass(frozen=True)
class CapacitySolution:
    order: Order
    capacity: float
    center: Pmf
    prior: Prior
    lower_bound: float
    upper_bound: float
    gap: float
    iterations: int
    converged: bool = True

    def to_json(self) -> dict[str, Any]:
        return {
            "order": self.order.value,
            "capacity": self.capacity,
            "lower": self.lower_bound,
            "upper": self.upper_bound,
            "gap": self.gap,
            "iterations": self.iterations,
            "prior": self.prior.probs.tolist(),
            "center": self.center.weights.tolist(),
        }


def _solution(order: Order, logP: np.ndarray, q: np.ndarray, lower: float, upper: float, iters: int, ok: bool) -> CapacitySolution:
    P = np.exp(logP - _lse(logP))
    P = P / math.fsum(P)
    # widen outward by a rounding allowance so independent brackets always overlap;
    # symmetric, so the midpoint is unchanged
    upper = max(upper, lower)
    lower = lower - BRACKET_ROUNDING * max(1.0, abs(lower))
    upper = upper + BRACKET_ROUNDING * max(1.0, abs(upper))
    gap = upper - lower
    return CapacitySolution(
        order=order,
        capacity=0.5 * (lower + upper),
        center=Pmf(q / math.fsum(q)),
        prior=Prior(P),
        lower_bound=lower,
        upper_bound=upper,
        gap=gap,
        iterations=iters,
        converged=ok,
    )


# --------------------------------------------------------------------------
# radius


def relative_radius(ch: ChannelLike, q: Any, alpha: OrderLike) -> float:
    """Largest divergence of a channel row from ``q``; +inf allowed."""
    ch = as_channel(ch)
    qv = _weights(q, "q")
    if qv.size != ch.n_outputs:
        raise AlphabetMismatch(f"q has {qv.size} outputs but channel has {ch.n_outputs}")
    return float(np.max(_div_rows(ch.log_rows, _log(qv), as_order(alpha).value)))


def _compositions(total: int, parts: int) -> np.ndarray:
    """All non-negative integer vectors of length ``parts`` summing to ``total``."""
    if parts == 1:
        return np.array([[total]])
    out = []
    for k in range(total + 1):
        rest = _compositions(total - k, parts - 1)
        out.append(np.column_stack([np.full(len(rest), k), rest]))
    return np.vstack(out)


def radius_bruteforce(ch: ChannelLike, alpha: OrderLike, grid_resolution: int = 400) -> float:
    """Minimum relative radius over the uniform simplex grid with spacing 1/grid_resolution."""
    ch = as_channel(ch)
    a = as_order(alpha).value
    if a == 0:
        raise OrderOutOfRange("the radius oracle needs an order in (0, inf]")
    m = ch.n_outputs
    if m > 4:
        raise AlphabetTooLarge(f"grid oracle supports at most 4 outputs, got {m}")
    N = int(grid_resolution)
    if N < 1:
        raise DomainError("grid resolution must be positive")
    if np.unique(ch.rows, axis=0).shape[0] == 1:
        # one distinct row: the infimum is attained at Q = W
        return 0.0
    logW = ch.log_rows[None, :, :]
    best = INF
    # chunk on the first coordinate to bound memory
    for k in range(N + 1):
        rest = _compositions(N - k, m - 1) if m > 1 else np.zeros((1, 0), dtype=int)
        if m == 1 and k != N:
            continue
        grid = np.column_stack([np.full(len(rest), k), rest]) / N
        radii = np.max(_div_rows(logW, _log(grid)[:, None, :], a), axis=1)
        best = min(best, float(np.min(radii)))
    # divergences between probability measures are non-negative; drop rounding below zero
    return max(best, 0.0)


# --------------------------------------------------------------------------
# unconstrained solver


def _seed(ch: FiniteChannel, a: float, salt: bytes = b"") -> int:
    h = hashlib.sha256(ch.digest() + struct.pack("<d", a) + salt).digest()
    return int.from_bytes(h[:8], "little")


def _bracket(logW: np.ndarray, logP: np.ndarray, a: float) -> tuple[float, float, np.ndarray, np.ndarray]:
    """(lower, upper, per-row divergences, log center) at the prior ``logP``."""
    logm = _log_mean(logW, logP, a)
    lognorm = float(_lse(logm))
    logq = logm - lognorm
    D = _div_rows(logW, logq, a)
    if abs(a - 1.0) < NEAR_ONE:
        # rows outside the prior's support may sit at +inf
        on = logP > -INF
        lower = float(np.exp(logP[on]) @ D[on])
    else:
        lower = a / (a - 1.0) * lognorm
    return lower, float(np.max(D)), D, logq


def _polish(
    logW: np.ndarray, a: float, logP: np.ndarray, S: np.ndarray, cons: "_CostConstraint | None"
) -> np.ndarray | None:
    """Solve the stationarity conditions on the candidate support ``S``.

    On the support the information gradient is affine in the costs:
    h_w = lam + mu c_w with h_w = expm1((a-1)(D_w - I)) / (a-1), which
    reduces to D_w - I at order one. Without a binding cost mu is absent and
    the conditions say every supported row sits at the same divergence.
    """
    k = S.size
    out = np.full(logP.shape, -INF)
    if k == 1:
        out[S] = 0.0
        return out
    WS = logW[S]
    active = cons is not None and float(np.exp(logP) @ cons.c) >= cons.budget - 1e-9 * cons.span
    near_one = abs(a - 1.0) < NEAR_ONE

    c_S = cons.c[S] / cons.span if active else None

    def parts(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.concatenate([[0.0], z[: k - 1]])
        lp = x - _lse(x)
        lower, _, D, _ = _bracket(WS, lp, a)
        h = D - lower if near_one else np.expm1((a - 1.0) * (D - lower)) / (a - 1.0)
        return lp, h

    def resid(z: np.ndarray) -> np.ndarray:
        lp, h = parts(z)
        r = h - z[k - 1]
        if active:
            r = r - z[k] * c_S
            r = np.append(r, np.exp(lp) @ c_S - cons.budget / cons.span)
        return r

    def jac(z: np.ndarray) -> np.ndarray:
        lp, h = parts(z)
        P = np.exp(lp)
        logS = _lse(lp[:, None] + a * WS, axis=0)
        cols = logS > -INF
        lw, logS = WS[:, cols], logS[cols]
        lognorm = float(_lse(logS / a))
        # M / ||m|| with M_wv = sum_y W_wy^a W_vy^a S_y^((1-2a)/a)
        e = (1.0 - 2.0 * a) / a * logS - lognorm
        half = a * lw + 0.5 * e
        if np.all(half < 300.0):
            # Gram form: positive terms, so the matmul loses nothing
            A = np.exp(half)
            M = A @ A.T
        else:
            M = np.exp(_lse(a * lw[:, None, :] + a * lw[None, :, :] + e, axis=-1))
        G = 1.0 + (a - 1.0) * h
        dx = -(M @ (np.diag(P) - np.outer(P, P))) / a - np.outer(G, P * h) / a
        J = np.column_stack([dx[:, 1:], -np.ones(k)])
        if active:
            J = np.column_stack([J, -c_S])
            row = np.concatenate([(c_S * P - P * (P @ c_S))[1:], [0.0, 0.0]])
            J = np.vstack([J, row])
        return J

    x0 = logP[S] - logP[S][0]
    z0 = np.concatenate([x0[1:], [0.0], [0.0] if active else []])
    if not np.all(np.isfinite(z0)):
        return None
    try:
        with np.errstate(all="ignore"):
            res = least_squares(resid, z0, jac=jac, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=30)
    except (ValueError, np.linalg.LinAlgError):
        return None
    if not np.all(np.isfinite(res.x)):
        return None
    lp, _ = parts(res.x)
    out[S] = lp
    return out


def _iterate(
    logW: np.ndarray,
    a: float,
    logP: np.ndarray,
    tol: float,
    max_iter: int,
    project: "_CostConstraint | None" = None,
) -> tuple[np.ndarray, float, float, np.ndarray, int, bool]:
    """Multiplicative ascent P <- P exp(s D(W || q_P)) with adaptive step.

    At doubling checkpoints the candidate support is polished by solving the
    stationarity conditions; the polished prior is kept only if its own
    bracket meets the tolerance.
    """

    def bracket(lp: np.ndarray) -> tuple[float, float, np.ndarray, np.ndarray]:
        lower, upper, D, logq = _bracket(logW, lp, a)
        if project is not None:
            upper = project.upper(D, a)
        return lower, upper, D, logq

    near_one = abs(a - 1.0) < NEAR_ONE
    logP = logP - _lse(logP)
    lower, upper, D, logq = bracket(logP)
    best = (logP, lower, upper, logq)
    step = 1.0
    it = 0
    checkpoint = 16
    # supports whose polish failed, with the gap at that attempt
    tried: dict[tuple[int, ...], float] = {}
    while it < max_iter:
        if upper - lower <= tol:
            return logP, lower, upper, logq, it, True
        if it >= checkpoint and upper - lower < 1e-3:
            checkpoint *= 2
            P = np.exp(logP)
            # slowly decaying rows linger above small mass thresholds
            supports = [np.flatnonzero(P >= r * np.max(P)) for r in (1e-6, 1e-3, 1e-2)]
            if project is None:
                near = np.flatnonzero(D >= upper - max(100.0 * (upper - lower), 1e-9))
                supports.append(near)
                # near-duplicate rows: the optimum may use only part of a cluster
                ranked = near[np.argsort(-D[near], kind="stable")]
                supports.extend(np.sort(ranked[:j]) for j in range(2, min(ranked.size, 12)))
            else:
                # rank rows by how far the gradient sits below its affine fit in the cost
                base = supports[0]
                with np.errstate(over="ignore", invalid="ignore"):
                    h = D - lower if near_one else np.expm1((a - 1.0) * (D - lower)) / (a - 1.0)
                if base.size > 1 and np.all(np.isfinite(h[base])):
                    X = np.column_stack([np.ones(base.size), project.c[base] / project.span])
                    coef = np.linalg.lstsq(X, h[base], rcond=None)[0]
                    ranked = base[np.argsort(-(h[base] - X @ coef), kind="stable")]
                    supports.extend(np.sort(ranked[:j]) for j in range(1, min(ranked.size, 12)))
            for S in supports:
                key = tuple(S.tolist())
                if key in tried and upper - lower > 0.01 * tried[key]:
                    continue
                tried[key] = upper - lower
                lp = _polish(logW, a, logP, S, project)
                if lp is None:
                    continue
                if project is not None:
                    # the polished prior must be feasible for its bracket to count
                    try:
                        lp = project.project(lp)
                    except InfeasibleConstraint:
                        continue
                p_lower, p_upper, _, p_logq = bracket(lp)
                if p_upper - p_lower <= tol:
                    return lp, p_lower, p_upper, p_logq, it, True
        it += 1
        if project is None:
            # rows far below the lower bound are also below the prior-weighted
            # gradient average, so decaying them is an ascent direction too
            direction = np.where(D < lower - PRUNE_EPS, D + PRUNE_DECAY, D)
        else:
            # a cost term breaks the equal-divergence fixed point; step along
            # the information gradient itself, shifted by a constant
            with np.errstate(over="ignore", invalid="ignore"):
                h = D - lower if near_one else np.expm1((a - 1.0) * (D - lower)) / (a - 1.0)
            direction = np.minimum(np.nan_to_num(h, nan=0.0), 50.0)
        cand = logP + step * direction
        cand = cand - _lse(cand)
        if project is not None:
            cand = project.project(cand)
        c_lower, c_upper, c_D, c_logq = bracket(cand)
        if c_lower < lower - 1e-14 * max(1.0, abs(lower)):
            step *= 0.5
            if step < 1e-12:
                break
            continue
        logP, lower, upper, D, logq = cand, c_lower, c_upper, c_D, c_logq
        step = min(step * 1.25, MAX_STEP)
        if upper - lower < best[2] - best[1]:
            best = (logP, lower, upper, logq)
    logP, lower, upper, logq = best
    return logP, lower, upper, logq, it, upper - lower <= tol


def _solve_inf(ch: FiniteChannel, order: Order) -> CapacitySolution:
    logW = ch.log_rows
    logmax = np.max(logW, axis=0)
    c_inf = float(_lse(logmax))
    logq = logmax - c_inf
    logP = np.full(ch.n_inputs, -math.log(ch.n_inputs))
    upper = float(np.max(_div_rows(logW, logq, INF)))
    return _solution(order, logP, np.exp(logq), c_inf, upper, 0, True)


def capacity_restarts(
    ch: ChannelLike,
    alpha: OrderLike,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    n_starts: int = N_RESTARTS,
) -> list[CapacitySolution]:
    """Independent solver runs: uniform start plus Dirichlet starts seeded by (channel, order)."""
    ch = as_channel(ch)
    order = as_order(alpha)
    a = order.value
    if a == 0 or a == INF:
        raise OrderOutOfRange("restarts apply to orders in (0, inf)")
    rng = np.random.default_rng(_seed(ch, a))
    n = ch.n_inputs
    out = []
    for k in range(n_starts):
        P0 = np.full(n, 1.0 / n) if k == 0 else rng.dirichlet(np.ones(n))
        res = _iterate(ch.log_rows, a, _log(np.maximum(P0, 1e-300)), tol, max_iter)
        logP, lower, upper, logq, it, ok = res
        out.append(_solution(order, logP, np.exp(logq), lower, upper, it, ok))
    return out


def solve_capacity(
    ch: ChannelLike,
    alpha: OrderLike,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    n_starts: int = N_RESTARTS,
) -> CapacitySolution:
    """Order-alpha capacity with a certificate of width at most ``tol``.

    Orders below one run ``n_starts`` independent starts and keep the
    tightest bracket. Raises ``NotConverged`` carrying the best bracket when
    the width stays above ``tol`` after ``max_iter`` steps.
    """
    ch = as_channel(ch)
    order = as_order(alpha)
    a = order.value
    if a == 0:
        raise OrderOutOfRange("capacity at order 0 is not served; use renyi_information per prior")
    if not tol > 0:
        raise DomainError("tol must be positive")
    if a == INF:
        return _solve_inf(ch, order)
    if a < 1 and ch.n_inputs > 1 and n_starts > 1:
        runs = capacity_restarts(ch, order, tol, max_iter, n_starts)
        sol = min(runs, key=lambda s: (s.gap, -s.lower_bound))
    else:
        n = ch.n_inputs
        logP, lower, upper, logq, it, ok = _iterate(ch.log_rows, a, np.full(n, -math.log(n)), tol, max_iter)
        sol = _solution(order, logP, np.exp(logq), lower, upper, it, ok)
    if sol.gap > tol:
        raise NotConverged(f"gap {sol.gap!r} above tol {tol!r} after {sol.iterations} iterations", sol)
    return sol


# --------------------------------------------------------------------------
# order sweep


@dataclass(frozen=True)
class CurveDiagnostics:
    monotonicity_violations: int
    convexity_violations: int
    nonincrease_violations: int
    max_adjacent_jump: float
    lipschitz_violations: int


@dataclass(frozen=True)
class CapacityCurve:
    solutions: list[CapacitySolution]
    diagnostics: CurveDiagnostics

    def to_csv(self) -> str:
        lines = ["alpha,capacity,lower,upper,gap"]
        for s in self.solutions:
            lines.append(",".join([fmt(s.order.value), fmt(s.capacity), fmt(s.lower_bound), fmt(s.upper_bound), fmt(s.gap)]))
        return "\n".join(lines) + "\n"


def uec_order_constants(eta: float, c_eta: float) -> tuple[float, float]:
    """(eps_eta, gamma_eta) of the common Lipschitz bound in the order on (0, eta)."""
    if not 0 < eta < INF:
        raise OrderOutOfRange("eta must be a positive finite order")
    if eta <= 1:
        return eta / 2.0, c_eta
    return (eta - 1.0) / (8.0 * eta), eta * c_eta + 5.0 * math.exp(2.0 * c_eta) / (2.0 * math.e**2)


def uec_order_lipschitz(alpha: float, alpha2: float, c_bound: Any) -> float:
    """A Lipschitz constant valid for every prior between two finite positive orders.

    ``c_bound(eta)`` must return an upper bound on the capacity at order eta.
    """
    lo, hi = sorted((float(alpha), float(alpha2)))
    if lo + hi <= 1.0:
        eta, eps = lo + hi, lo
    else:
        eta = 2.0 * hi + 1.0
        eps = min(lo, (eta - 1.0) / (8.0 * eta))
    eps_eta, gamma = uec_order_constants(eta, c_bound(eta))
    eps = min(eps, eps_eta)
    return gamma / eps**2


def uec_prior_bound(delta: float, eta: float, c_eta: float, c_one: float | None = None, c_zero: float | None = None) -> float:
    """Bound on sup over orders in [0, eta] of |I(P2) - I(P1)|, delta = ||P1 - P2|| / 2.

    At eta = 0 the order-zero and order-one capacities are needed.
    """
    d = float(delta)
    if not 0.0 <= d <= 1.0:
        raise DomainError("delta must lie in [0, 1]")
    if eta == 0:
        if c_one is None or c_zero is None:
            raise DomainError("eta = 0 needs the order-zero and order-one capacities")
        first = INF if d == 1.0 else -math.log1p(-d)
        if d > 0:
            first = min(first, c_zero - math.log(d))
        return first + math.log1p(d * math.expm1(c_one))
    if abs(eta - 1.0) < NEAR_ONE:
        return binary_renyi_entropy(d, 1.0) + d * c_eta + math.log1p(d * math.expm1(c_eta))
    if d == 0.0:
        return 0.0
    num = math.log1p(d * math.expm1(c_eta))
    inner = np.logaddexp(math.log1p(-d) / eta if d < 1 else -INF, math.log(d) / eta + (eta - 1.0) / eta * c_eta)
    return float(num - eta / (1.0 - eta) * inner)


def capacity_curve(
    ch: ChannelLike,
    alphas: Sequence[OrderLike],
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> CapacityCurve:
    """Solve at each order and check the shape properties of the capacity curve."""
    ch = as_channel(ch)
    orders = [as_order(a) for a in alphas]
    vals = [o.value for o in orders]
    if any(v == 0 for v in vals):
        raise OrderOutOfRange("curve orders must lie in (0, inf]")
    if vals != sorted(vals):
        raise DomainError("orders must be sorted")
    sols = [solve_capacity(ch, o, tol, max_iter) for o in orders]
    slack = 2.0 * tol
    mono = sum(1 for s, t in zip(sols, sols[1:]) if t.upper_bound < s.lower_bound - slack)
    big = [(s.order.value, s.capacity) for s in sols if 1.0 < s.order.value < INF]
    conv = 0
    for (a0, c0), (a1, c1), (a2, c2) in zip(big, big[1:], big[2:]):
        g0, g1, g2 = (a0 - 1) * c0, (a1 - 1) * c1, (a2 - 1) * c2
        w = (a2 - a1) / (a2 - a0)
        if g1 > w * g0 + (1 - w) * g2 + slack * (a2 - 1):
            conv += 1
    small = [((1 - s.order.value) / s.order.value * s.capacity, s.order.value) for s in sols if s.order.value < 1]
    noninc = sum(
        1 for (h0, a0), (h1, _) in zip(small, small[1:]) if h1 > h0 + slack * (1 - a0) / a0
    )
    finite = [s for s in sols if s.order.value < INF]
    jump = max((abs(t.capacity - s.capacity) for s, t in zip(sols, sols[1:])), default=0.0)
    # rows bound every capacity by ln n, which bounds the Lipschitz constant
    c_bound = math.log(ch.n_inputs)
    lip = 0
    for s, t in zip(finite, finite[1:]):
        if s.order.value == t.order.value:
            continue
        L = uec_order_lipschitz(s.order.value, t.order.value, lambda _eta: c_bound)
        if abs(t.capacity - s.capacity) > L * (t.order.value - s.order.value) + slack:
            lip += 1
    return CapacityCurve(sols, CurveDiagnostics(mono, conv, noninc, jump, lip))


# --------------------------------------------------------------------------
# constrained capacity


@dataclass(frozen=True)
class Unconstrained:
    kind: Literal["unconstrained"] = "unconstrained"


@dataclass(frozen=True)
class SupportRestriction:
    indices: tuple[int, ...]
    kind: Literal["support"] = "support"


@dataclass(frozen=True)
class LinearCost:
    costs: tuple[float, ...]
    budget: float
    direction: Literal["le", "ge"] = "le"
    kind: Literal["linear_cost"] = "linear_cost"


ConstraintSet = Union[Unconstrained, SupportRestriction, LinearCost]


def constraint_from_json(obj: dict) -> ConstraintSet:
    kind = obj.get("kind")
    if kind == "unconstrained":
        return Unconstrained()
    if kind == "support":
        return SupportRestriction(tuple(int(i) for i in obj["indices"]))
    if kind == "linear_cost":
        direction = obj.get("dir", "le")
        if direction not in ("le", "ge"):
            raise DomainError(f"dir must be 'le' or 'ge', got {direction!r}")
        return LinearCost(tuple(float(c) for c in obj["costs"]), float(obj["budget"]), direction)
    raise DomainError(f"unknown constraint kind {kind!r}")


def _lift(sol: CapacitySolution, keep: np.ndarray, n: int) -> CapacitySolution:
    P = np.zeros(n)
    P[keep] = sol.prior.probs
    return CapacitySolution(
        sol.order, sol.capacity, sol.center, Prior(P), sol.lower_bound, sol.upper_bound, sol.gap, sol.iterations, sol.converged
    )


class _CostConstraint:
    """KL projection onto {P : c.P <= budget} and the exact inner supremum."""

    def __init__(self, costs: np.ndarray, budget: float) -> None:
        self.c = costs
        self.budget = budget
        lo, hi = np.min(costs), np.max(costs)
        self.span = max(hi - lo, 1e-300)

    def _tilted(self, logP: np.ndarray, lam: float) -> np.ndarray:
        t = logP - lam * self.c / self.span
        return t - _lse(t)

    def _mean(self, logP: np.ndarray, lam: float) -> float:
        return float(np.exp(self._tilted(logP, lam)) @ self.c)

    def project(self, logP: np.ndarray) -> np.ndarray:
        if self._mean(logP, 0.0) <= self.budget:
            return logP
        hi = 1.0
        while self._mean(logP, hi) > self.budget:
            hi *= 2.0
            if hi > 1e6:
                raise InfeasibleConstraint("no tilt of this prior meets the budget")
        lam = brentq(lambda x: self._mean(logP, x) - self.budget, 0.0, hi, xtol=1e-14, rtol=1e-15)
        while self._mean(logP, lam) > self.budget and lam < hi:
            lam = min(hi, lam * (1 + 1e-12) + 1e-15)
        return self._tilted(logP, lam)

    def upper(self, D: np.ndarray, a: float) -> float:
        """sup over feasible P of D_a(P x W || P (x) Q) given D(W_w || Q) per row."""
        if abs(a - 1.0) < NEAR_ONE:
            vals, sign = D, 1.0
        else:
            vals, sign = (a - 1.0) * D, (1.0 if a > 1 else -1.0)
        # the linear objective is optimized over vertices: feasible singletons
        # and cost-tight pairs
        c, b = self.c, self.budget
        best = -INF
        ok = c <= b
        if np.any(ok):
            best = float(np.max(sign * vals[ok]))
        low = np.flatnonzero(c < b)
        high = np.flatnonzero(c > b)
        for i in low:
            t = (c[high] - b) / (c[high] - c[i])  # weight on i
            if abs(a - 1.0) < NEAR_ONE:
                pair = t * vals[i] + (1 - t) * vals[high]
            else:
                with np.errstate(divide="ignore"):
                    pair = np.logaddexp(np.log(t) + vals[i], np.log1p(-t) + vals[high])
            if pair.size:
                best = max(best, float(np.max(sign * pair)))
        best *= sign
        if abs(a - 1.0) < NEAR_ONE:
            return best
        return best / (a - 1.0)


def solve_constrained_capacity(
    ch: ChannelLike,
    alpha: OrderLike,
    constraint: ConstraintSet,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> CapacitySolution:
    """Capacity over a convex set of priors, with a certificate for that set.

    The upper bound is the supremum over the set of the joint divergence
    against the current prior's mean; it is evaluated exactly for support
    restrictions and for a single linear cost.
    """
    ch = as_channel(ch)
    order = as_order(alpha)
    a = order.value
    n = ch.n_inputs
    if isinstance(constraint, Unconstrained):
        return solve_capacity(ch, order, tol, max_iter)
    if not 0 < a < INF:
        raise OrderOutOfRange("constrained capacity needs an order in (0, inf)")
    if isinstance(constraint, SupportRestriction):
        keep = np.unique(np.asarray(constraint.indices, dtype=int))
        if keep.size == 0 or keep[0] < 0 or keep[-1] >= n:
            raise InfeasibleConstraint("support restriction must name existing rows")
        sub = FiniteChannel(ch.rows[keep])
        return _lift(solve_capacity(sub, order, tol, max_iter), keep, n)
    if not isinstance(constraint, LinearCost):
        raise DomainError(f"unsupported constraint {constraint!r}")
    c = np.asarray(constraint.costs, dtype=float)
    if c.size != n:
        raise InfeasibleConstraint(f"{c.size} costs for {n} rows")
    b = float(constraint.budget)
    if constraint.direction == "ge":
        c, b = -c, -b
    scale = max(1.0, float(np.max(np.abs(c))))
    if b < np.min(c) - 1e-12 * scale:
        raise InfeasibleConstraint("no prior meets the cost budget")
    if b <= np.min(c) + 1e-12 * scale:
        keep = np.flatnonzero(c <= np.min(c) + 1e-12 * scale)
        return solve_constrained_capacity(ch, order, SupportRestriction(tuple(keep.tolist())), tol, max_iter)
    cons = _CostConstraint(c, b)
    logP0 = cons.project(np.full(n, -math.log(n)))
    logP, lower, upper, logq, it, ok = _iterate(ch.log_rows, a, logP0, tol, max_iter, project=cons)
    sol = _solution(order, logP, np.exp(logq), lower, upper, it, ok)
    if not ok:
        raise NotConverged(f"gap {sol.gap!r} above tol {tol!r} after {it} iterations", sol)
    return sol


def constrained_sup_joint(ch: ChannelLike, alpha: OrderLike, constraint: ConstraintSet, q: Any) -> float:
    """sup over priors in the set of D_alpha(P x W || P (x) Q)."""
    ch = as_channel(ch)
    a = as_order(alpha).value
    qv = _weights(q, "q")
    if qv.size != ch.n_outputs:
        raise AlphabetMismatch("q and channel outputs differ")
    D = _div_rows(ch.log_rows, _log(qv), a)
    if isinstance(constraint, Unconstrained):
        return float(np.max(D))
    if isinstance(constraint, SupportRestriction):
        return float(np.max(D[list(constraint.indices)]))
    c = np.asarray(constraint.costs, dtype=float)
    b = float(constraint.budget)
    if constraint.direction == "ge":
        c, b = -c, -b
    if a >= 1 and np.any(D == INF):
        # an infinite row dominates once some feasible prior can weight it
        usable = np.ones(D.size, dtype=bool) if np.any(c < b) else c <= b
        if np.any((D == INF) & usable):
            return INF
        D = np.where(D == INF, 0.0, D)
    return _CostConstraint(c, b).upper(D, a)


# --------------------------------------------------------------------------
# bounds and compositions


def ehb_gap(ch: ChannelLike, q: Any, alpha: OrderLike, solution: CapacitySolution) -> float:
    """relative_radius(q) - C - D(center || q); non-negative up to solver slack."""
    r = relative_radius(ch, q, alpha)
    if r == INF:
        return INF
    return r - solution.capacity - renyi_divergence(solution.center, q, alpha)


def product_channel(ch1: ChannelLike, ch2: ChannelLike) -> FiniteChannel:
    """All tensor products of a row of ``ch1`` with a row of ``ch2``."""
    a, b = as_channel(ch1), as_channel(ch2)
    rows = np.einsum("ij,kl->ikjl", a.rows, b.rows).reshape(a.n_inputs * b.n_inputs, a.n_outputs * b.n_outputs)
    return FiniteChannel(rows)


def union_channel(ch1: ChannelLike, ch2: ChannelLike) -> FiniteChannel:
    """Rows of both channels, exact duplicates removed, first occurrence kept."""
    a, b = as_channel(ch1), as_channel(ch2)
    if a.n_outputs != b.n_outputs:
        raise AlphabetMismatch("union needs a common output alphabet")
    rows = np.vstack([a.rows, b.rows])
    _, first = np.unique(rows, axis=0, return_index=True)
    return FiniteChannel(rows[np.sort(first)])


def epsilon_core(ch: ChannelLike, alpha: OrderLike, eps: float, solution: CapacitySolution) -> FiniteChannel:
    """Rows whose divergence from the center is at least C - eps.

    The solver's certificate width is subtracted as numerical slack.
    """
    ch = as_channel(ch)
    if eps < 0:
        raise DomainError("eps must be non-negative")
    D = _div_rows(ch.log_rows, _log(solution.center.weights), as_order(alpha).value)
    keep = np.flatnonzero(D >= solution.lower_bound - eps - solution.gap)
    if keep.size == 0:
        raise EmptyCore("no row within eps of capacity; eps is below solver resolution")
    labels = [ch.labels[i] for i in keep] if ch.labels is not None else None
    return FiniteChannel(ch.rows[keep], labels)


def convex_hull_augment(ch: ChannelLike, priors: Sequence[PriorLike]) -> FiniteChannel:
    """Append the order-one mixture row of each prior."""
    ch = as_channel(ch)
    extra = [as_prior(p, ch).probs @ ch.rows for p in priors]
    if not extra:
        return ch
    return FiniteChannel(np.vstack([ch.rows] + extra))


@dataclass(frozen=True)
class CenterContinuityReport:
    alpha: float
    eta: float
    capacity_increase: float
    center_divergence: float
    center_distance: float
    distance_bound: float
    slack: float
    holds: bool = field(default=True)


def center_continuity_check(
    ch: ChannelLike,
    alpha: OrderLike,
    eta: OrderLike,
    sol_alpha: CapacitySolution,
    sol_eta: CapacitySolution,
) -> CenterContinuityReport:
    """Check C_eta - C_alpha >= D_alpha(q_alpha || q_eta) and the induced distance bound.

    Slack: ten times the certificate widths on the divergence side; on the
    distance side each computed center may sit sqrt(2 gap / min(1, order))
    away from the true one.
    """
    a, e = as_order(alpha).value, as_order(eta).value
    if a > e:
        raise DomainError("need alpha <= eta")
    inc = sol_eta.capacity - sol_alpha.capacity
    div = renyi_divergence(sol_alpha.center, sol_eta.center, a)
    dist = float(np.sum(np.abs(sol_eta.center.weights - sol_alpha.center.weights)))
    slack = 10.0 * (sol_alpha.gap + sol_eta.gap) + 1e-12
    # Pinsker at the smaller order, whose divergence the capacity increase bounds
    bound = math.sqrt(2.0 * max(inc + slack, 0.0) / min(1.0, a))
    center_err = math.sqrt(2.0 * sol_alpha.gap / min(1.0, a)) + math.sqrt(2.0 * sol_eta.gap / min(1.0, e))
    holds = inc >= div - slack and dist <= bound + center_err + 1e-12
    return CenterContinuityReport(a, e, inc, div, dist, bound + center_err, slack, holds)
