"""Closed-form families: mod-1 shift channels and Poisson point processes.

Also holds the adaptive quadrature these closed forms rely on, a thinning
sampler and Monte-Carlo estimator for Poisson divergences, and a bridge that
discretizes a bounded Poisson family into a :class:`FiniteChannel`.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Any, Callable, NamedTuple, Sequence, Union

import numpy as np
from scipy import stats
from scipy.optimize import minimize_scalar
from scipy.special import xlogy

from .errors import (
    BudgetExceeded,
    DomainError,
    InfeasibleConstraint,
    OrderOutOfRange,
    QuadratureFailure,
    UnboundedIntensity,
    VarianceBlowup,
)
from .measures import INF, NEAR_ONE, FiniteChannel, OrderLike, as_order

QUAD_TOL = 1e-9
DENSITY_TOL = 1e-8
MAX_INTERVALS = 20_000
MAX_SHELLS = 1000
DISCRETIZE_MAX_ROWS = 4096
DISCRETIZE_MAX_PROFILES = 1 << 22
DISCRETIZE_MAX_ENTRIES = 1 << 21

Evaluator = Callable[[np.ndarray], np.ndarray]

# --------------------------------------------------------------------------
# quadrature

_XC, _WC = np.polynomial.legendre.leggauss(10)
_XF, _WF = np.polynomial.legendre.leggauss(21)


def _gl_pair(fun: Evaluator, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Coarse (10-point) and fine (21-point) Gauss-Legendre sums per interval."""
    half = 0.5 * (hi - lo)[:, None]
    mid = 0.5 * (hi + lo)[:, None]
    nodes = np.concatenate([mid + half * _XC, mid + half * _XF], axis=1)
    vals = np.asarray(fun(nodes.ravel()), dtype=float).reshape(nodes.shape)
    coarse = half[:, 0] * (vals[:, :10] @ _WC)
    fine = half[:, 0] * (vals[:, 10:] @ _WF)
    return coarse, fine


def integrate(
    fun: Evaluator,
    lo: float,
    hi: float,
    tol: float = QUAD_TOL,
    points: Sequence[float] = (),
) -> float:
    """Adaptive Gauss-Legendre quadrature of a vectorized integrand.

    Each interval is accepted when the 10- and 21-point rules agree to its
    share of ``tol`` (or to 1e-14 relative); otherwise it is bisected.
    ``points`` are interior break points (jumps of piecewise integrands).
    Endpoints are never evaluated. Returns ``inf`` when the integrand is
    infinite on a set the rules can see.
    """
    if hi <= lo:
        return 0.0
    cuts = sorted({lo, hi, *(p for p in points if lo < p < hi)})
    los = np.array(cuts[:-1])
    his = np.array(cuts[1:])
    total = 0.0
    width = hi - lo
    n_done = 0
    while los.size:
        with np.errstate(invalid="ignore", over="ignore"):
            coarse, fine = _gl_pair(fun, los, his)
        if np.any(np.isnan(fine)):
            raise QuadratureFailure("integrand produced nan")
        if np.any(np.isposinf(fine)):
            return INF
        err = np.abs(fine - coarse)
        share = tol * (his - los) / width
        ok = (err <= share) | (err <= 1e-14 * np.abs(fine)) | (his - los <= 1e-15 * max(1.0, abs(hi)))
        total += math.fsum(fine[ok])
        n_done += los.size
        if n_done > MAX_INTERVALS:
            raise QuadratureFailure(f"no convergence on [{lo}, {hi}] after {n_done} intervals")
        mids = 0.5 * (los[~ok] + his[~ok])
        los, his = np.concatenate([los[~ok], mids]), np.concatenate([mids, his[~ok]])
    return total


@dataclass(frozen=True)
class ShellResult:
    """Integral over (0, h] of ``fun(d)`` toward a singularity at d = 0."""

    value: float
    diverged: bool
    shells: int
    ratio: float


def integrate_singular(fun: Evaluator, h: float, tol: float = QUAD_TOL) -> ShellResult:
    """Integrate ``fun`` on (0, h] when it may blow up at 0.

    The range is split into dyadic shells [h 2^-k-1, h 2^-k]. For a power-law
    singularity the shell ratio settles to a constant r: r < 1 gives a
    geometric tail that is added in closed form, r >= 1 certifies divergence.
    """
    tiny = np.finfo(float).tiny
    parts: list[float] = []
    ratios: list[float] = []
    for k in range(MAX_SHELLS):
        hi = h * 2.0 ** (-k)
        lo = hi / 2
        if lo < tiny * 1e10:
            break
        s = integrate(fun, lo, hi, tol=tol * 1e-3)
        if not math.isfinite(s) or math.fsum(parts) + s > math.exp(700):
            return ShellResult(INF, True, k + 1, INF)
        parts.append(s)
        prev = parts[-2] if k else 0.0
        if k == 0:
            continue
        if prev == 0.0:
            ratios.append(0.0 if s == 0.0 else INF)
        else:
            ratios.append(s / prev)
        if len(ratios) < 8:
            continue
        last = ratios[-6:]
        if s == 0.0 and all(r == 0.0 for r in last[-3:]):
            return ShellResult(math.fsum(parts), False, k + 1, 0.0)
        r = ratios[-1]
        stable = max(last) - min(last) <= 0.02 * max(abs(r), 1e-300)
        if k >= 30 and all(x >= 1.0 - 1e-12 for x in ratios[-10:]):
            return ShellResult(INF, True, k + 1, r)
        if stable and 0.0 <= r < 1.0:
            tail = s * r / (1.0 - r)
            if abs(tail) <= tol * 1e-2:
                return ShellResult(math.fsum(parts) + tail, False, k + 1, r)
    raise QuadratureFailure("shell refinement near a singularity did not settle")


# --------------------------------------------------------------------------
# densities on the circle


class DensityOnCircle:
    """Probability density on [0, 1) used as additive mod-1 noise.

    ``singularities`` lists points of [0, 1] where f is unbounded; ``breaks``
    lists jump points. Both guide the quadrature. The constructor certifies
    that f integrates to one within ``DENSITY_TOL``.
    """

    def __init__(
        self,
        f: Evaluator,
        singularities: Sequence[float] = (),
        breaks: Sequence[float] = (),
        name: str = "",
        check: bool = True,
    ) -> None:
        self.f = f
        self.singularities = tuple(sorted({0.0 if float(s) == 1.0 else float(s) for s in singularities}))
        self.breaks = tuple(sorted(float(b) for b in breaks))
        for s in self.singularities + self.breaks:
            if not 0.0 <= s <= 1.0:
                raise DomainError(f"annotated point {s} is outside [0, 1]")
        self.name = name
        if check:
            probe = np.asarray(f(np.linspace(0.0, 1.0, 1025)[1:-1]), dtype=float)
            if np.any(probe < 0) or np.any(np.isnan(probe)):
                raise DomainError("density must be non-negative")
            mass = self.integrate(lambda y: np.asarray(f(y), dtype=float))
            if not abs(mass - 1.0) <= DENSITY_TOL:
                raise DomainError(f"density integrates to {mass!r}, not 1")

    def __call__(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(self.f(np.asarray(y, dtype=float)), dtype=float)

    def integrate(self, g: Evaluator, tol: float = QUAD_TOL) -> float:
        """Integral of ``g`` over [0, 1], splitting at the annotated points."""
        sing = set(self.singularities)
        if 0.0 in sing:
            sing.add(1.0)
        knots = sorted(sing | set(self.breaks) | {0.0, 1.0})
        total = 0.0
        for u, v in zip(knots[:-1], knots[1:]):
            if v <= u:
                continue
            mid = 0.5 * (u + v)
            share = tol * (v - u)
            if u in sing:
                res = integrate_singular(lambda d, u=u: g(u + d), mid - u, share / 2)
                part_lo = res.value
            else:
                part_lo = integrate(g, u, mid, share / 2)
            if v in sing:
                res = integrate_singular(lambda d, v=v: g(v - d), v - mid, share / 2)
                part_hi = res.value
            else:
                part_hi = integrate(g, mid, v, share / 2)
            total += part_lo + part_hi
            if math.isinf(total):
                return INF
        return total

    # factories ------------------------------------------------------------

    @classmethod
    def uniform(cls) -> "DensityOnCircle":
        return cls(lambda y: np.ones_like(y), name="uniform", check=False)

    @classmethod
    def monomial(cls, k: float) -> "DensityOnCircle":
        """f(y) = (k+1) y^k for k > -1; singular at 0 when k < 0."""
        k = float(k)
        if not k > -1.0:
            raise DomainError("monomial density needs k > -1")

        def f(y: np.ndarray) -> np.ndarray:
            with np.errstate(divide="ignore"):
                return (k + 1.0) * np.power(y, k)

        return cls(f, singularities=(0.0,) if k < 0 else (), name=f"monomial({k!r})", check=False)

    @classmethod
    def power(cls, beta: float) -> "DensityOnCircle":
        """f(y) = (1-beta) y^-beta for beta in (0, 1)."""
        if not 0.0 <= beta < 1.0:
            raise DomainError("beta must lie in [0, 1)")
        return cls.monomial(-beta)

    @classmethod
    def piecewise(cls, breaks: Sequence[float], values: Sequence[float]) -> "DensityOnCircle":
        pc = PiecewiseConstant(breaks, values)
        if pc.breaks.size and (pc.breaks[0] <= 0 or pc.breaks[-1] >= 1):
            raise DomainError("circle breaks must lie inside (0, 1)")
        return cls(pc, breaks=pc.breaks.tolist(), name="piecewise")

    @classmethod
    def from_json(cls, obj: Union[str, dict]) -> "DensityOnCircle":
        """Accepts {"kind": "uniform" | "monomial" (k) | "power" (beta) | "piecewise" (breaks, values)}."""
        if isinstance(obj, str):
            obj = json.loads(obj)
        kind = obj.get("kind")
        if kind == "uniform":
            return cls.uniform()
        if kind == "monomial":
            return cls.monomial(obj["k"])
        if kind == "power":
            return cls.power(obj["beta"])
        if kind == "piecewise":
            return cls.piecewise(obj["breaks"], obj["values"])
        raise DomainError(f"unknown density kind {kind!r}")


def _ess_sup(d: DensityOnCircle) -> float:
    if d.singularities:
        return INF
    if isinstance(d.f, PiecewiseConstant):
        return float(d.f.values.max())
    grid = np.linspace(0.0, 1.0, 4097)[1:-1]
    vals = d(grid)
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    res = minimize_scalar(lambda y: -float(d(np.array([y]))[0]), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    # suprema approached at the ends of [0, 1) are invisible to interior grids
    ends = d(np.array([np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0)]))
    return max(float(vals[i]), -float(res.fun), float(np.max(ends)))


def shift_capacity(f: DensityOnCircle, alpha: OrderLike, quad_tol: float = QUAD_TOL) -> float:
    """Capacity of the mod-1 shift family of ``f``: the divergence of f from uniform."""
    order = as_order(alpha)
    a = order.value
    if order.is_zero:
        raise OrderOutOfRange("shift capacity needs an order in (0, inf]")
    if order.is_inf:
        s = _ess_sup(f)
        return INF if s == INF else math.log(s)
    if order.near_one:
        return float(f.integrate(lambda y: xlogy(f(y), f(y)), quad_tol))

    def g(y: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore", divide="ignore"):
            return np.power(f(y), a)

    moment = f.integrate(g, quad_tol)
    if moment == INF:
        return INF
    if moment <= 0:
        return INF if a < 1 else -INF
    return math.log(moment) / (a - 1.0)


def shift_family_capacity(fs: Sequence[DensityOnCircle], alpha: OrderLike, quad_tol: float = QUAD_TOL) -> float:
    """Capacity of the union of shift families: the largest member capacity."""
    if not fs:
        raise DomainError("need at least one density")
    return max(shift_capacity(f, alpha, quad_tol) for f in fs)


# --------------------------------------------------------------------------
# intensities


class PiecewiseConstant:
    """Step function: ``values[0]`` on (0, t1], ``values[i]`` on (t_i, t_i+1]."""

    def __init__(self, breaks: Sequence[float], values: Sequence[float]) -> None:
        b = np.asarray(breaks, dtype=float).reshape(-1)
        v = np.asarray(values, dtype=float).reshape(-1)
        if v.size != b.size + 1:
            raise DomainError("need exactly one more value than breaks")
        if b.size and np.any(np.diff(b) <= 0):
            raise DomainError("breaks must be strictly increasing")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise DomainError("intensity values must be finite and non-negative")
        self.breaks = b
        self.values = v

    @classmethod
    def constant(cls, value: float) -> "PiecewiseConstant":
        return cls((), (value,))

    @classmethod
    def from_json(cls, obj: Union[str, dict]) -> "PiecewiseConstant":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(obj.get("breaks", ()), obj["values"])

    def to_json(self) -> dict:
        return {"breaks": self.breaks.tolist(), "values": self.values.tolist()}

    def __call__(self, t: Any) -> np.ndarray:
        return self.values[np.searchsorted(self.breaks, np.asarray(t, dtype=float), side="left")]

    def pieces(self, T: float) -> list[tuple[float, float, float]]:
        """(start, end, value) for each piece clipped to (0, T]."""
        edges = [0.0, *[x for x in self.breaks.tolist() if 0.0 < x < T], T]
        return [(lo, hi, float(self(np.array([0.5 * (lo + hi)]))[0])) for lo, hi in zip(edges[:-1], edges[1:])]

    def sup(self, T: float) -> float:
        return max(v for _, _, v in self.pieces(T))

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "PiecewiseConstant":
        return PiecewiseConstant(self.breaks, fn(self.values))

    def __repr__(self) -> str:
        return f"PiecewiseConstant({self.breaks.tolist()!r}, {self.values.tolist()!r})"


Intensity = Union[float, PiecewiseConstant, Evaluator]


def as_intensity(x: Any) -> Union[PiecewiseConstant, Evaluator]:
    if isinstance(x, PiecewiseConstant):
        return x
    if isinstance(x, dict):
        return PiecewiseConstant.from_json(x)
    if isinstance(x, (int, float, np.floating, np.integer)):
        return PiecewiseConstant.constant(float(x))
    if callable(x):
        return x
    raise DomainError(f"cannot interpret {x!r} as an intensity")


def _breaks_of(*fs: Any) -> list[float]:
    out: set[float] = set()
    for f in fs:
        if isinstance(f, PiecewiseConstant):
            out.update(f.breaks.tolist())
    return sorted(out)


def intensity_integral(f: Intensity, T: float, quad_tol: float = QUAD_TOL) -> float:
    f = as_intensity(f)
    if isinstance(f, PiecewiseConstant):
        return math.fsum((hi - lo) * v for lo, hi, v in f.pieces(T))
    return integrate(lambda t: np.asarray(f(t), dtype=float), 0.0, T, quad_tol)


def _intensity_bound(f: Any, T: float) -> float:
    if isinstance(f, PiecewiseConstant):
        return f.sup(T)
    bound = getattr(f, "bound", None)
    if bound is None:
        raise UnboundedIntensity("no thinning bound: pass a piecewise-constant intensity or bound=")
    return float(bound)


# --------------------------------------------------------------------------
# Poisson divergences


def _constant_divergence(f: Any, g: Any, a: float) -> np.ndarray:
    """Pointwise integrand of the Poisson divergence between intensities f and g."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    f, g = np.broadcast_arrays(f, g)
    if abs(a - 1.0) < NEAR_ONE:
        with np.errstate(divide="ignore"):
            return xlogy(f, f) - xlogy(f, g) - f + g
    both = (f > 0) & (g > 0)
    # f^a g^(1-a) - f = f expm1((a-1) ln(f/g)) keeps the difference exact near a = 1
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        ratio = np.log(np.where(both, f, 1.0)) - np.log(np.where(both, g, 1.0))
        excess = np.where(both, f * np.expm1((a - 1.0) * ratio), -f)
    excess = np.where((f > 0) & (g == 0) & (a > 1), INF, excess)
    return excess / (a - 1.0) - f + g


def _check_poisson_order(alpha: OrderLike) -> float:
    order = as_order(alpha)
    if order.is_zero or order.is_inf:
        raise OrderOutOfRange("Poisson formulas need an order in (0, inf)")
    return 1.0 if order.near_one else order.value


def poisson_divergence(f: Intensity, g: Intensity, T: float, alpha: OrderLike, quad_tol: float = QUAD_TOL) -> float:
    """Renyi divergence between Poisson processes with intensities f and g on (0, T]."""
    a = _check_poisson_order(alpha)
    if not T > 0:
        raise DomainError("horizon T must be positive")
    f, g = as_intensity(f), as_intensity(g)
    if isinstance(f, PiecewiseConstant) and isinstance(g, PiecewiseConstant):
        knots = [0.0, *[x for x in _breaks_of(f, g) if 0 < x < T], T]
        mids = np.array([0.5 * (lo + hi) for lo, hi in zip(knots[:-1], knots[1:])])
        lens = np.diff(knots)
        vals = _constant_divergence(f(mids), g(mids), a)
        return INF if np.any(np.isposinf(vals)) else math.fsum(lens * vals)
    return integrate(lambda t: _constant_divergence(f(t), g(t), a), 0.0, T, quad_tol, _breaks_of(f, g))


# --------------------------------------------------------------------------
# Poisson families and closed forms


@dataclass(frozen=True)
class MeanEq:
    c: float


@dataclass(frozen=True)
class MeanLe:
    c: float


@dataclass(frozen=True)
class MeanGe:
    c: float


MeanConstraint = Union[MeanEq, MeanLe, MeanGe, None]
_CONSTRAINT_KINDS = {"eq": MeanEq, "le": MeanLe, "ge": MeanGe}


@dataclass(frozen=True)
class PoissonFamilySpec:
    """Intensities on (0, T] between a floor ``a`` and a ceiling.

    The ceiling is either the constant ``b`` or the ``envelope`` function.
    """

    T: float
    a: float
    b: float | None = None
    envelope: Any = None
    constraint: MeanConstraint = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.T) and self.T > 0):
            raise DomainError("horizon T must be positive and finite")
        if not (math.isfinite(self.a) and self.a >= 0):
            raise DomainError("floor a must be finite and non-negative")
        if (self.b is None) == (self.envelope is None):
            raise DomainError("give exactly one of a constant ceiling b or an envelope")
        if self.b is not None and not (math.isfinite(self.b) and self.b >= self.a):
            raise DomainError("ceiling b must be finite and at least a")
        if self.envelope is not None:
            env = as_intensity(self.envelope)
            object.__setattr__(self, "envelope", env)
            probe = np.asarray(env(np.linspace(0, self.T, 257)[1:]), dtype=float)
            if np.any(probe < self.a - 1e-12):
                raise DomainError("envelope must stay above the floor a")
        if self.constraint is not None:
            c = self.constraint.c
            hi = self.b if self.b is not None else INF
            if not self.a <= c <= hi:
                raise DomainError(f"mean constraint {c} outside [{self.a}, {hi}]")

    @classmethod
    def from_json(cls, obj: Union[str, dict]) -> "PoissonFamilySpec":
        """{"T", "a", "b" | "g": {"breaks", "values"}, optional "c" and "constraint": {"kind", "c"}}."""
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            T = float(obj["T"])
            a = float(obj.get("a", 0.0))
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"bad family spec: {exc}") from None
        env = obj.get("g", obj.get("envelope"))
        b = obj.get("b")
        cons = None
        if "constraint" in obj and obj["constraint"] is not None:
            kind = obj["constraint"].get("kind", "eq")
            if kind not in _CONSTRAINT_KINDS:
                raise DomainError(f"unknown mean constraint {kind!r}")
            cons = _CONSTRAINT_KINDS[kind](float(obj["constraint"]["c"]))
        elif "c" in obj:
            cons = MeanEq(float(obj["c"]))
        return cls(T, a, None if b is None else float(b), env, cons)

    def with_constraint(self, constraint: MeanConstraint) -> "PoissonFamilySpec":
        return PoissonFamilySpec(self.T, self.a, self.b, self.envelope, constraint)

    def _ceiling(self) -> float:
        if self.b is None:
            raise DomainError("this operation needs a constant ceiling b")
        return self.b


@dataclass(frozen=True)
class PoissonCapacity:
    """Capacity with the constant (or piecewise) intensity of the center process."""

    order: float
    capacity: float
    center: Union[float, PiecewiseConstant, Evaluator]
    mean: float | None = None
    alt_capacity: float | None = None

    def to_json(self) -> dict[str, Any]:
        center = self.center
        if isinstance(center, PiecewiseConstant):
            payload: Any = center.to_json()
        elif callable(center):
            payload = None
        else:
            payload = center
        out: dict[str, Any] = {"order": self.order, "capacity": self.capacity, "center_intensity": payload}
        if self.mean is not None:
            out["mean"] = self.mean
        return out


def mean_center_intensity(a: float, b: float, c: float, alpha: float) -> float:
    """Power mean of a and b whose weights give mean c."""
    if b == a:
        return a
    p = (c - a) / (b - a)
    if abs(alpha - 1.0) < NEAR_ONE:
        return c
    return (p * b**alpha + (1 - p) * a**alpha) ** (1.0 / alpha)


def _mean_capacity_raw(T: float, a: float, b: float, c: float, alpha: float) -> tuple[float, float]:
    if b == a or c == a or c == b:
        return 0.0, c
    p = (c - a) / (b - a)
    if abs(alpha - 1.0) < NEAR_ONE:
        return float(p * xlogy(b, b / c) + (1 - p) * xlogy(a, a / c)) * T, c
    # x - c through expm1/log1p: both are power means of a and b that merge at order one
    eps = alpha - 1.0
    s = p * b * math.expm1(eps * math.log(b))
    if a > 0:
        s += (1 - p) * a * math.expm1(eps * math.log(a))
    gap = c * math.expm1(math.log1p(s / c) / alpha - eps / alpha * math.log(c))
    return alpha / eps * gap * T, c + gap


def _mixture_form(T: float, a: float, b: float, c: float, x: float, alpha: float) -> float:
    if b == a:
        return 0.0
    p = (c - a) / (b - a)
    d_b = float(_constant_divergence(b, x, alpha)) * T
    d_a = float(_constant_divergence(a, x, alpha)) * T
    return p * d_b + (1 - p) * d_a


def _as_spec(spec: Any) -> PoissonFamilySpec:
    if isinstance(spec, PoissonFamilySpec):
        return spec
    return PoissonFamilySpec.from_json(spec)


def poisson_mean_capacity(spec: Any, alpha: OrderLike) -> PoissonCapacity:
    """Capacity and center intensity of intensities in [a, b] with mean exactly c."""
    a_ = _check_poisson_order(alpha)
    spec = _as_spec(spec)
    b = spec._ceiling()
    if not isinstance(spec.constraint, MeanEq):
        raise DomainError("mean capacity needs an equality mean constraint")
    c = spec.constraint.c
    cap, x = _mean_capacity_raw(spec.T, spec.a, b, c, a_)
    alt = _mixture_form(spec.T, spec.a, b, c, x, a_)
    if abs(alt - cap) > 1e-10 * max(1.0, abs(cap)):
        raise ArithmeticError(f"closed form {cap!r} and mixture form {alt!r} disagree")
    return PoissonCapacity(a_, cap, x, c, alt)


def optimal_mean(a: float, b: float, alpha: float) -> float:
    """Mean intensity c_alpha at which the bounded family attains its capacity."""
    if b == a:
        return a
    if abs(alpha - 1.0) < NEAR_ONE:
        return math.exp(-1.0 + (xlogy(b, b) - xlogy(a, a)) / (b - a))
    ba, aa = b**alpha, a**alpha
    return alpha ** (alpha / (1 - alpha)) * ((b - a) / (ba - aa)) ** (1 / (1 - alpha)) + (a * ba - b * aa) / (ba - aa)


def poisson_constrained_capacity(spec: Any, alpha: OrderLike) -> PoissonCapacity:
    """Capacity under a mean inequality: clamp c toward c_alpha and use the mean form."""
    a_ = _check_poisson_order(alpha)
    spec = _as_spec(spec)
    b = spec._ceiling()
    cons = spec.constraint
    c_opt = optimal_mean(spec.a, b, a_)
    if isinstance(cons, MeanLe):
        c = min(cons.c, c_opt)
    elif isinstance(cons, MeanGe):
        c = max(cons.c, c_opt)
    elif isinstance(cons, MeanEq):
        c = cons.c
    else:
        c = c_opt
    c = min(max(c, spec.a), b)
    return poisson_mean_capacity(spec.with_constraint(MeanEq(c)), a_)


def _bounded_pointwise(a: float, g: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-unit-time bounded capacity and center intensity for ceilings g >= a."""
    g = np.asarray(g, dtype=float)
    flat = g <= a
    gg = np.where(flat, a + 1.0, g)
    with np.errstate(divide="ignore", invalid="ignore"):
        if abs(alpha - 1.0) < NEAR_ONE:
            x = np.exp(-1.0 + (xlogy(gg, gg) - xlogy(a, a)) / (gg - a))
            cap = x - np.where(a > 0, a * gg / (gg - a) * np.log(gg / a), 0.0)
        else:
            ga, aa = gg**alpha, a**alpha
            x = (alpha * (gg - a) / (ga - aa)) ** (1 / (1 - alpha))
            cap = x - alpha / (alpha - 1) * (a * ga - gg * aa) / (ga - aa)
    return np.where(flat, 0.0, cap), np.where(flat, a, x)


def poisson_bounded_capacity(T: float, a: float, b: float, alpha: OrderLike) -> PoissonCapacity:
    """Capacity and center intensity of all intensities with values in [a, b]."""
    a_ = _check_poisson_order(alpha)
    spec = PoissonFamilySpec(T, a, b)
    cap, x = _bounded_pointwise(spec.a, np.array([b]), a_)
    c_opt = optimal_mean(a, b, a_)
    alt, _ = _mean_capacity_raw(T, a, b, min(max(c_opt, a), b), a_)
    return PoissonCapacity(a_, float(cap[0]) * T, float(x[0]), float(c_opt), float(alt))


def poisson_product_capacity(T: float, a: float, g: Intensity, alpha: OrderLike, quad_tol: float = QUAD_TOL) -> PoissonCapacity:
    """Capacity of intensities between the floor a and an envelope g(t)."""
    a_ = _check_poisson_order(alpha)
    spec = PoissonFamilySpec(T, a, envelope=g)
    env = spec.envelope
    if isinstance(env, PiecewiseConstant):
        parts = env.pieces(T)
        total = math.fsum(poisson_bounded_capacity(hi - lo, a, v, a_).capacity for lo, hi, v in parts)
        center = env.map(lambda v: _bounded_pointwise(a, v, a_)[1])
        return PoissonCapacity(a_, total, center)

    def integrand(t: np.ndarray) -> np.ndarray:
        return _bounded_pointwise(a, env(t), a_)[0]

    def center_fn(t: np.ndarray) -> np.ndarray:
        return _bounded_pointwise(a, env(t), a_)[1]

    return PoissonCapacity(a_, integrate(integrand, 0.0, T, quad_tol), center_fn)


# --------------------------------------------------------------------------
# sample paths and Monte Carlo


@dataclass(frozen=True)
class SamplePath:
    """Arrival times of one Poisson sample path on (0, T]."""

    times: np.ndarray
    T: float

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float).reshape(-1)
        if t.size and (t[0] <= 0 or t[-1] > self.T or np.any(np.diff(t) <= 0)):
            raise DomainError("arrival times must be strictly increasing inside (0, T]")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    def __len__(self) -> int:
        return self.times.size


def poisson_sample(f: Intensity, T: float, seed: Any = None, bound: float | None = None) -> SamplePath:
    """Draw one path of the process with intensity f by thinning a constant-rate one."""
    f = as_intensity(f)
    lam = float(bound) if bound is not None else _intensity_bound(f, T)
    if not math.isfinite(lam) or lam < 0:
        raise UnboundedIntensity("thinning bound must be finite")
    rng = np.random.default_rng(seed)
    n = rng.poisson(lam * T)
    t = np.sort(rng.uniform(0.0, T, n))
    t = t[t > 0]
    if lam == 0:
        return SamplePath(t[:0], T)
    fv = np.asarray(f(t), dtype=float)
    if np.any(fv > lam * (1 + 1e-12)):
        raise UnboundedIntensity("intensity exceeds the thinning bound")
    keep = rng.uniform(0.0, lam, t.size) < fv
    return SamplePath(np.unique(t[keep]), T)


def poisson_rnd(path: SamplePath, f: Intensity, T: float | None = None, quad_tol: float = QUAD_TOL) -> float:
    """Likelihood ratio of the f-process against the unit-rate process at ``path``."""
    T = path.T if T is None else T
    f = as_intensity(f)
    with np.errstate(divide="ignore"):
        log_prod = float(np.sum(np.log(np.asarray(f(path.times), dtype=float)))) if len(path) else 0.0
    return math.exp(log_prod + T - intensity_integral(f, T, quad_tol))


class MCEstimate(NamedTuple):
    estimate: float
    stderr: float


def poisson_mc_divergence(
    f: Intensity,
    g: Intensity,
    T: float,
    alpha: OrderLike,
    n_samples: int,
    seed: int = 0,
    batch: int = 50_000,
) -> MCEstimate:
    """Monte-Carlo Renyi divergence sampled under the unit-rate reference process.

    The inner mean E[(dW_f)^a (dW_g)^(1-a)] is estimated from ``n_samples``
    paths; the log transform's standard error uses the delta method.
    """
    order = as_order(alpha)
    a = order.value
    if not (0 < a < 1 or 1 < a <= 3) or order.near_one:
        raise OrderOutOfRange("Monte-Carlo divergence needs an order in (0,1) or (1,3]")
    if n_samples < 2:
        raise DomainError("need at least two samples")
    f, g = as_intensity(f), as_intensity(g)
    const = a * (T - intensity_integral(f, T)) + (1 - a) * (T - intensity_integral(g, T))
    seqs = np.random.SeedSequence(seed).spawn(-(-n_samples // batch))
    logs = []
    remaining = n_samples
    for ss in seqs:
        k = min(batch, remaining)
        remaining -= k
        rng = np.random.default_rng(ss)
        counts = rng.poisson(T, k)
        owner = np.repeat(np.arange(k), counts)
        times = rng.uniform(0.0, T, owner.size)
        with np.errstate(divide="ignore", invalid="ignore"):
            h = a * np.log(np.asarray(f(times), dtype=float)) + (1 - a) * np.log(np.asarray(g(times), dtype=float))
        if np.any(np.isnan(h)) or np.any(np.isposinf(h)):
            raise VarianceBlowup("likelihood ratio is unbounded on the sampled paths")
        logs.append(np.bincount(owner, weights=h, minlength=k) + const)
    logz = np.concatenate(logs)
    top = float(logz.max())
    if top == -INF:
        raise VarianceBlowup("all sampled likelihood ratios vanished")
    z = np.exp(logz - top)
    mean = float(z.mean())
    se = float(z.std(ddof=1)) / math.sqrt(n_samples)
    if se > 0.5 * mean:
        raise VarianceBlowup(f"inner mean has relative standard error {se / mean:.3g}")
    est = (math.log(mean) + top) / (a - 1)
    return MCEstimate(est, se / (mean * abs(a - 1)))


# --------------------------------------------------------------------------
# discretization bridge


def _count_pmf(mu: float, max_count: int) -> np.ndarray:
    """Counts 0..max_count plus one overflow symbol."""
    k = np.arange(max_count + 1)
    out = np.empty(max_count + 2)
    out[:-1] = stats.poisson.pmf(k, mu) if mu > 0 else (k == 0).astype(float)
    out[-1] = stats.poisson.sf(max_count, mu) if mu > 0 else 0.0
    return out / out.sum()


def _feasible(means: np.ndarray, cons: MeanConstraint) -> np.ndarray:
    if cons is None:
        return np.ones(means.shape, dtype=bool)
    tol = 1e-12 * max(1.0, abs(cons.c))
    if isinstance(cons, MeanEq):
        return np.abs(means - cons.c) <= tol
    if isinstance(cons, MeanLe):
        return means <= cons.c + tol
    return means >= cons.c - tol


def poisson_discretize(
    spec: Any,
    n_bins: int,
    n_levels: int = 2,
    levels: Sequence[float] | None = None,
    max_count: int = 4,
    max_rows: int = DISCRETIZE_MAX_ROWS,
    seed: int = 0,
) -> FiniteChannel:
    """Finite sub-channel of a bounded Poisson family.

    Inputs are piecewise-constant intensity profiles on ``n_bins`` equal bins
    taking values in ``levels`` (default: ``n_levels`` evenly spaced points of
    [a, b]); outputs are per-bin arrival counts truncated at ``max_count``
    with one overflow symbol. Profiles violating the mean constraint are
    dropped; above ``max_rows`` a seeded random subset is kept.
    """
    spec = _as_spec(spec)
    b = spec._ceiling()
    if n_bins < 1 or max_count < 0:
        raise DomainError("need at least one bin and a non-negative max count")
    if levels is None:
        if n_levels < 1:
            raise DomainError("need at least one level")
        lv = np.linspace(spec.a, b, n_levels)
    else:
        lv = np.unique(np.asarray(levels, dtype=float))
        if lv.size == 0 or lv[0] < spec.a or lv[-1] > b:
            raise DomainError("levels must lie in [a, b]")
    n_sym = max_count + 2
    n_out = n_sym**n_bins
    n_prof = lv.size**n_bins
    if n_prof > DISCRETIZE_MAX_PROFILES or n_out > DISCRETIZE_MAX_ENTRIES:
        raise BudgetExceeded(f"{n_prof} profiles x {n_out} outputs is over budget")
    profiles = np.array(list(itertools.product(range(lv.size), repeat=n_bins)), dtype=np.int64).reshape(-1, n_bins)
    keep = _feasible(lv[profiles].mean(axis=1), spec.constraint)
    profiles = profiles[keep]
    if profiles.shape[0] == 0:
        raise InfeasibleConstraint("no profile on this grid meets the mean constraint")
    if profiles.shape[0] > max_rows:
        pick = np.sort(np.random.default_rng(seed).choice(profiles.shape[0], max_rows, replace=False))
        profiles = profiles[pick]
    if profiles.shape[0] * n_out > DISCRETIZE_MAX_ENTRIES:
        raise BudgetExceeded(f"{profiles.shape[0]} rows x {n_out} outputs is over budget")
    tau = spec.T / n_bins
    table = np.stack([_count_pmf(v * tau, max_count) for v in lv])
    rows = table[profiles[:, 0]]
    for j in range(1, n_bins):
        rows = (rows[:, :, None] * table[profiles[:, j]][:, None, :]).reshape(rows.shape[0], -1)
    rows = rows / rows.sum(axis=1, keepdims=True)
    labels = [",".join(repr(float(lv[i])) for i in prof) for prof in profiles]
    return FiniteChannel(rows, labels)
