"""Rényi divergence, mean measures, information and means on finite alphabets.

Every quantity is in nats. Sums of powers are evaluated in the log domain,
so masses near the bottom of the float range do not underflow. Orders are
extended non-negative reals; ``Order`` tags the exact atoms 0, 1 and inf.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence, Union

import numpy as np
from scipy.special import exprel

from .errors import (
    AlphabetMismatch,
    DomainError,
    InvalidChannel,
    InvalidPartition,
    OrderOutOfRange,
    RhoOutOfRange,
    SupportMismatch,
    ZeroMeasure,
)

PMF_TOL = 1e-12
ROW_TOL = 1e-9
# orders this close to one are evaluated with the order-one formulas
NEAR_ONE = 1e-9
# orders this close to one use the expm1/log1p route for the mean-measure norm
NEAR_ONE_WIDE = 0.25
# below this order the log mean is formed from exprel/log1p
SMALL_ORDER = 0.1
# relative tolerance when deciding which outputs attain the largest support mass
TIE_RTOL = 1e-12

INF = math.inf


# --------------------------------------------------------------------------
# orders


class OrderTag(enum.Enum):
    ZERO = "zero"
    ONE = "one"
    INFINITY = "infinity"
    FINITE = "finite"


@dataclass(frozen=True)
class Order:
    """An order in [0, inf] with exact tags for 0, 1 and inf."""

    value: float

    def __post_init__(self) -> None:
        v = float(self.value)
        if math.isnan(v) or v < 0:
            raise OrderOutOfRange(f"order must lie in [0, inf], got {self.value!r}")
        object.__setattr__(self, "value", v)

    @property
    def tag(self) -> OrderTag:
        if self.value == 0:
            return OrderTag.ZERO
        if self.value == 1:
            return OrderTag.ONE
        if self.value == INF:
            return OrderTag.INFINITY
        return OrderTag.FINITE

    @property
    def is_zero(self) -> bool:
        return self.value == 0

    @property
    def is_inf(self) -> bool:
        return self.value == INF

    @property
    def near_one(self) -> bool:
        return abs(self.value - 1.0) < NEAR_ONE

    @classmethod
    def parse(cls, x: "OrderLike") -> "Order":
        if isinstance(x, Order):
            return x
        if isinstance(x, str):
            s = x.strip().lower()
            if s in ("inf", "+inf", "infinity", "∞"):
                return cls(INF)
            try:
                return cls(float(s))
            except ValueError:
                raise OrderOutOfRange(f"cannot parse order {x!r}") from None
        return cls(float(x))

    def __str__(self) -> str:
        return "inf" if self.is_inf else repr(self.value)

    def __float__(self) -> float:
        return self.value


OrderLike = Union[Order, float, int, str]


def as_order(x: OrderLike) -> Order:
    return Order.parse(x)


# --------------------------------------------------------------------------
# measures, priors, channels


def _weights(x: Any, name: str = "measure") -> np.ndarray:
    if isinstance(x, FiniteMeasure):
        return x.weights
    w = np.asarray(x, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise DomainError(f"{name} must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise DomainError(f"{name} weights must be finite and non-negative")
    return w


class FiniteMeasure:
    """Non-negative weights indexed by output symbols."""

    __slots__ = ("weights",)

    def __init__(self, weights: Iterable[float]) -> None:
        if not isinstance(weights, (FiniteMeasure, np.ndarray)):
            weights = list(weights)
        self.weights = _weights(weights).copy()
        self.weights.setflags(write=False)

    @property
    def norm(self) -> float:
        return float(math.fsum(self.weights))

    def __len__(self) -> int:
        return self.weights.size

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.weights.tolist()!r})"


class Pmf(FiniteMeasure):
    """A finite measure with unit mass (tolerance ``PMF_TOL``, never renormalized)."""

    __slots__ = ()

    def __init__(self, weights: Iterable[float], atol: float = PMF_TOL) -> None:
        super().__init__(weights)
        if abs(self.norm - 1.0) > atol or np.any(self.weights > 1.0):
            raise DomainError(f"weights sum to {self.norm!r}, not 1")


class Prior:
    """Probability mass function over channel rows."""

    __slots__ = ("probs",)

    def __init__(self, probs: Iterable[float], atol: float = PMF_TOL) -> None:
        p = np.array(probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise DomainError("prior must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise DomainError("prior masses must be finite and non-negative")
        total = math.fsum(p)
        if abs(total - 1.0) > atol:
            raise DomainError(f"prior masses sum to {total!r}, not 1")
        p.setflags(write=False)
        self.probs = p

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probs > 0)

    @classmethod
    def uniform(cls, n: int) -> "Prior":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def point(cls, n: int, index: int) -> "Prior":
        p = np.zeros(n)
        p[index] = 1.0
        return cls(p)

    def __len__(self) -> int:
        return self.probs.size

    def __repr__(self) -> str:
        return f"Prior({self.probs.tolist()!r})"


class FiniteChannel:
    """Row-stochastic matrix: one output distribution per input row."""

    __slots__ = ("rows", "labels", "_log_rows")

    def __init__(
        self,
        rows: Any,
        labels: Sequence[str] | None = None,
        atol: float = ROW_TOL,
    ) -> None:
        W = np.array(rows, dtype=float)
        if W.ndim == 1:
            W = W[None, :]
        if W.ndim != 2 or W.shape[0] < 1 or W.shape[1] < 1:
            raise InvalidChannel("channel must be a non-empty matrix")
        if not np.all(np.isfinite(W)):
            raise InvalidChannel("channel entries must be finite")
        if np.any(W < 0):
            raise InvalidChannel("channel entries must be non-negative")
        sums = W.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > atol)
        if bad.size:
            raise InvalidChannel(f"row {int(bad[0])} sums to {sums[bad[0]]!r}, not 1")
        if labels is not None:
            labels = tuple(str(s) for s in labels)
            if len(labels) != W.shape[0]:
                raise InvalidChannel("one label per row is required")
        W.setflags(write=False)
        self.rows = W
        self.labels = labels
        self._log_rows: np.ndarray | None = None

    @property
    def n_inputs(self) -> int:
        return self.rows.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.rows.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows.shape

    @property
    def log_rows(self) -> np.ndarray:
        if self._log_rows is None:
            lw = _log(self.rows)
            lw.setflags(write=False)
            self._log_rows = lw
        return self._log_rows

    def digest(self) -> bytes:
        return hashlib.sha256(np.ascontiguousarray(self.rows).tobytes()).digest()

    @classmethod
    def from_json(cls, obj: Union[str, dict]) -> "FiniteChannel":
        if isinstance(obj, str):
            obj = json.loads(obj)
        if not isinstance(obj, dict) or "rows" not in obj:
            raise InvalidChannel('channel JSON needs a "rows" array')
        return cls(obj["rows"], obj.get("labels"))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "FiniteChannel":
        return cls.from_json(Path(path).read_text())

    def to_json(self) -> dict:
        out: dict[str, Any] = {"rows": self.rows.tolist()}
        if self.labels is not None:
            out["labels"] = list(self.labels)
        return out

    def __repr__(self) -> str:
        return f"FiniteChannel({self.rows.tolist()!r})"


ChannelLike = Union[FiniteChannel, Any]
PriorLike = Union[Prior, Any]


def as_channel(ch: ChannelLike) -> FiniteChannel:
    return ch if isinstance(ch, FiniteChannel) else FiniteChannel(ch)


def as_prior(p: PriorLike, ch: FiniteChannel) -> Prior:
    prior = p if isinstance(p, Prior) else Prior(p)
    if len(prior) != ch.n_inputs:
        raise SupportMismatch(f"prior has {len(prior)} entries but channel has {ch.n_inputs} rows")
    return prior


# --------------------------------------------------------------------------
# log-domain kernels shared with the capacity solver


def _log(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if (x > 0).all():
        return np.log(x)
    out = np.full(x.shape, -INF)
    np.log(x, out=out, where=x > 0)
    return out


def _lse(a: np.ndarray, axis: int = -1) -> np.ndarray:
    """Shifted log-sum-exp; all -inf slices give -inf, any +inf gives +inf."""
    mx = a.max(axis=axis, keepdims=True)
    if np.isfinite(mx).all():
        # the maximal term contributes exp(0), so the sum is at least one
        return np.log(np.exp(a - mx).sum(axis=axis)) + mx.squeeze(axis)
    mx = np.where(np.isfinite(mx), mx, 0.0)
    with np.errstate(over="ignore"):
        s = np.exp(a - mx).sum(axis=axis)
    return _log(s) + mx.squeeze(axis)


def _div_rows(logW: np.ndarray, logq: np.ndarray, a: float) -> np.ndarray:
    """D_a(W || q) for every row of ``logW`` against the single measure ``logq``."""
    if a != 0 and a != INF and np.isfinite(logW).all() and np.isfinite(logq).all():
        # no zeros anywhere: skip the support bookkeeping
        d = logW - logq
        if abs(a - 1.0) < NEAR_ONE:
            return (np.exp(logW) * d).sum(axis=-1)
        return _lse(logW + (a - 1.0) * d) / (a - 1.0)
    wpos = logW > -INF
    if a == 0:
        return -_lse(np.where(wpos, logq, -INF))
    logW, logq = np.broadcast_arrays(logW, logq)
    # log-ratio on the support of w; +inf where q vanishes there
    d = np.zeros(logW.shape)
    np.subtract(logW, logq, out=d, where=wpos)
    if a == INF:
        return np.max(np.where(wpos, d, -INF), axis=-1)
    if abs(a - 1.0) < NEAR_ONE:
        t = np.zeros(logW.shape)
        np.multiply(np.exp(logW), d, out=t, where=wpos)
        return np.sum(t, axis=-1)
    terms = np.full(logW.shape, -INF)
    np.add(logW, (a - 1.0) * d, out=terms, where=wpos)
    out = _lse(terms) / (a - 1.0)
    if a > 1:
        # an output with w > 0 and q = 0 forces +inf
        out = np.where(np.any(wpos & (d == INF), axis=-1), INF, out)
    return out


def _log_mean(logW: np.ndarray, logP: np.ndarray, a: float) -> np.ndarray:
    """Log of the order-a mean measure; rows of ``logW`` are the supported rows."""
    if a == 0:
        zero = np.any(logW == -INF, axis=0)
        safe = np.where(logW == -INF, 0.0, logW)
        return np.where(zero, -INF, np.exp(logP) @ safe)
    if a == INF:
        return np.max(logW, axis=0)
    if a < SMALL_ORDER:
        return _log_mean_small(logW, logP, a)
    return _lse(logP[:, None] + a * logW, axis=0) / a


def _log_mean_small(logW: np.ndarray, logP: np.ndarray, a: float) -> np.ndarray:
    """Small-order log mean without the eps/a cancellation of log(sum P W^a) / a.

    Per output, with S the prior mass of rows charging it and r = P / S:
    log S / a + log1p(a t) / a, where t = sum r log W exprel(a log W).
    """
    pos = logW > -INF
    logS = _lse(np.where(pos, logP[:, None], -INF), axis=0)
    live = logS > -INF
    L = np.where(pos, logW, 0.0)
    logr = np.where(pos, logP[:, None] - np.where(live, logS, 0.0), -INF)
    r = np.exp(logr)
    t = np.sum(r * L * exprel(a * L), axis=0)
    x = a * t
    # when sum r W^a is far from one, log1p cancels; the direct log is accurate there
    far = np.abs(x) > 0.5
    xs = np.where(far, 0.0, x)
    ratio = np.ones_like(x)
    np.divide(np.log1p(xs), xs, out=ratio, where=xs != 0)
    tail = t * ratio
    if far.any():
        direct = _lse(logr + np.where(pos, a * L, -INF), axis=0) / a
        tail = np.where(far, direct, tail)
    with np.errstate(divide="ignore", over="ignore"):
        head = np.where(logS < 0, logS / a, 0.0)
    return np.where(live, head + tail, -INF)


def _log_norm_near_one(W: np.ndarray, P: np.ndarray, a: float) -> float:
    """ln of the order-a mean-measure norm, accurate when a is close to one.

    The norm is 1 + O(a - 1), so the plain log-sum-exp route loses digits
    that the prefactor 1/(a - 1) then amplifies. Here every piece is an
    expm1/log1p correction, and the mass deficit of the rows is kept exactly.
    """
    eps = a - 1.0
    m1 = P @ W
    pos = m1 > 0
    W, m1 = W[:, pos], m1[pos]
    T1 = P[:, None] * W / m1
    with np.errstate(divide="ignore"):
        L = np.where(W > 0, np.log(np.where(W > 0, W, 1.0)), 0.0)
    S = np.sum(T1 * np.expm1(eps * L), axis=0)
    delta = np.log1p(S) / a - eps / a * np.log(m1)
    deficit = math.fsum(P * np.array([math.fsum(r) - 1.0 for r in W])) + (math.fsum(P) - 1.0)
    return float(np.log1p(deficit + math.fsum(m1 * np.expm1(delta))))


def _info(logW: np.ndarray, logP: np.ndarray, a: float, W: np.ndarray | None = None, P: np.ndarray | None = None) -> float:
    """Rényi information of the supported rows ``logW`` with log-prior ``logP``."""
    if logP.size == 1:
        return 0.0
    if a == 0:
        P = np.exp(logP)
        mass = P @ (logW > -INF)
        m1_pos = _lse(logP[:, None] + logW, axis=0) > -INF
        return float(-math.log(np.max(mass[m1_pos]))) + 0.0
    if a == INF:
        return float(_lse(np.max(logW, axis=0)))
    if abs(a - 1.0) < NEAR_ONE:
        logm1 = _lse(logP[:, None] + logW, axis=0)
        d = _div_rows(logW, logm1, 1.0)
        return float(np.exp(logP) @ d)
    if W is not None and P is not None and abs(a - 1.0) <= NEAR_ONE_WIDE:
        return a / (a - 1.0) * _log_norm_near_one(W, P, a)
    return float(a / (a - 1.0) * _lse(_log_mean(logW, logP, a)))


def _joint(Drows: np.ndarray, logP: np.ndarray, a: float) -> float:
    """D_a(P x W || P (x) Q) from the per-row divergences against Q."""
    if a == INF:
        return float(np.max(Drows))
    if abs(a - 1.0) < NEAR_ONE:
        return float(np.exp(logP) @ Drows)
    if a > 1 and np.any(Drows == INF):
        return INF
    with np.errstate(invalid="ignore"):
        val = _lse(logP + (a - 1.0) * Drows)
    return float(val / (a - 1.0))


def _supported(ch: FiniteChannel, prior: Prior) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    s = prior.support
    return s, ch.log_rows[s], _log(prior.probs[s])


def _to_float(x: Any) -> float:
    return float(np.asarray(x))


# --------------------------------------------------------------------------
# divergence


def renyi_divergence(w: Any, q: Any, alpha: OrderLike) -> float:
    """Order-alpha Rényi divergence between two non-zero finite measures.

    Returns +inf where the defining sum forces it, e.g. alpha >= 1 with
    ``w`` not absolutely continuous w.r.t. ``q``.
    """
    a = as_order(alpha).value
    wv, qv = _weights(w, "w"), _weights(q, "q")
    if wv.size != qv.size:
        raise AlphabetMismatch(f"alphabet sizes differ: {wv.size} vs {qv.size}")
    if not np.any(wv > 0) or not np.any(qv > 0):
        raise ZeroMeasure("divergence needs non-zero measures")
    return _to_float(_div_rows(_log(wv), _log(qv), a))


def binary_renyi_entropy(delta: float, alpha: OrderLike) -> float:
    """Rényi entropy of the two-point distribution (delta, 1 - delta)."""
    a = as_order(alpha).value
    d = float(delta)
    if not 0.0 <= d <= 1.0:
        raise DomainError(f"delta must lie in [0, 1], got {delta!r}")
    if d == 0.0 or d == 1.0:
        return 0.0
    if a == INF:
        return -math.log(max(d, 1.0 - d))
    if abs(a - 1.0) < NEAR_ONE:
        return -d * math.log(d) - (1.0 - d) * math.log1p(-d)
    s = np.logaddexp(a * math.log(d), a * math.log1p(-d))
    return float(s / (1.0 - a))


# --------------------------------------------------------------------------
# mean measures, densities, posteriors


@dataclass(frozen=True)
class MeanMeasure:
    """Order-alpha mean measure of a channel under a prior."""

    order: Order
    weights: np.ndarray
    prior: Prior
    channel: FiniteChannel

    @property
    def norm(self) -> float:
        return float(math.fsum(self.weights))


@dataclass(frozen=True)
class PosteriorMatrix:
    """Order-alpha posterior T(w|y).

    ``entries[w, y]`` is the posterior mass of row ``w`` at output ``y``;
    columns outside ``outputs`` (zero mean mass) are all zero.
    """

    order: Order
    entries: np.ndarray
    outputs: np.ndarray


def mean_measure(ch: ChannelLike, p: PriorLike, alpha: OrderLike) -> MeanMeasure:
    """Power mean of the rows weighted by the prior, output by output."""
    ch = as_channel(ch)
    prior = as_prior(p, ch)
    order = as_order(alpha)
    _, logW, logP = _supported(ch, prior)
    w = np.exp(_log_mean(logW, logP, order.value))
    w.setflags(write=False)
    return MeanMeasure(order, w, prior, ch)


def mean_density_and_posterior(
    ch: ChannelLike, p: PriorLike, alpha: OrderLike
) -> tuple[np.ndarray, PosteriorMatrix]:
    """Density of the order-alpha mean w.r.t. the order-one mean, and the posterior.

    The density is ``nan`` on outputs where the order-one mean vanishes.
    """
    ch = as_channel(ch)
    prior = as_prior(p, ch)
    order = as_order(alpha)
    a = order.value
    if a == 0 or a == INF:
        raise OrderOutOfRange("density and posterior need an order in (0, inf)")
    s, logW, logP = _supported(ch, prior)
    logm = _log_mean(logW, logP, a)
    logm1 = _log_mean(logW, logP, 1.0)
    pos = logm1 > -INF
    density = np.full(ch.n_outputs, np.nan)
    density[pos] = np.exp(logm[pos] - logm1[pos])
    T = np.zeros(ch.shape)
    with np.errstate(invalid="ignore"):
        logT = logP[:, None] + a * logW - a * logm[None, :]
    T[np.ix_(s, np.flatnonzero(pos))] = np.exp(logT[:, pos])
    return density, PosteriorMatrix(order, T, pos)


# --------------------------------------------------------------------------
# information, Gallager's function, means, joint divergence


def renyi_information(ch: ChannelLike, p: PriorLike, alpha: OrderLike) -> float:
    """Sibson's order-alpha information of the prior, in [0, ln |supp P|]."""
    ch = as_channel(ch)
    prior = as_prior(p, ch)
    a = as_order(alpha).value
    s, logW, logP = _supported(ch, prior)
    return _info(logW, logP, a, ch.rows[s], prior.probs[s])


def information_order_derivative(ch: ChannelLike, p: PriorLike, alpha: OrderLike) -> float:
    """Derivative of the information in the order, at a finite positive order.

    Uses the derivative of the mean density, integrated against the order-one
    mean. At order one the second derivative of that density enters instead.
    """
    ch = as_channel(ch)
    prior = as_prior(p, ch)
    a = as_order(alpha).value
    if a == 0 or a == INF:
        raise OrderOutOfRange("the order derivative needs an order in (0, inf)")
    s, logW, logP = _supported(ch, prior)
    logm1 = _log_mean(logW, logP, 1.0)
    pos = logm1 > -INF
    logW, logm1 = logW[:, pos], logm1[pos]
    m1 = np.exp(logm1)
    if abs(a - 1.0) < NEAR_ONE:
        with np.errstate(invalid="ignore"):
            logT = logP[:, None] + logW - logm1[None, :]
        T = np.exp(logT)
        L = np.where(T > 0, logT - logP[:, None], 0.0)
        dn = np.sum(T * L, axis=0)
        ddn = -2.0 * dn + np.sum(T * L * L, axis=0)
        d1 = float(m1 @ dn)
        dd1 = float(m1 @ ddn)
        return (dd1 + 2.0 * d1 - d1 * d1) / 2.0
    logm = _log_mean(logW, logP, a)
    n = np.exp(logm - logm1)
    with np.errstate(invalid="ignore"):
        logT = logP[:, None] + a * logW - a * logm[None, :]
    T = np.exp(logT)
    L = np.where(T > 0, logT - logP[:, None], 0.0)
    dn = n / a**2 * np.sum(T * L, axis=0)
    log_norm = float(_lse(logm))
    dnorm = float(m1 @ dn)
    return a / (a - 1.0) * dnorm / math.exp(log_norm) - log_norm / (a - 1.0) ** 2


def gallager_e0(rho: float, ch: ChannelLike, p: PriorLike) -> float:
    """Gallager's function E0(rho, P) for rho > -1."""
    rho = float(rho)
    if not rho > -1.0 or not math.isfinite(rho):
        raise RhoOutOfRange(f"rho must exceed -1, got {rho!r}")
    ch = as_channel(ch)
    prior = as_prior(p, ch)
    s, logW, logP = _supported(ch, prior)
    if rho == 0.0 or s.size == 1:
        return 0.0
    a = 1.0 / (1.0 + rho)
    if abs(a - 1.0) <= NEAR_ONE_WIDE:
        return -_log_norm_near_one(ch.rows[s], prior.probs[s], a)
    with np.errstate(invalid="ignore"):
        inner = _lse(logP[:, None] + logW / (1.0 + rho), axis=0)
    return float(-_lse((1.0 + rho) * inner))


def renyi_mean(ch: ChannelLike, p: PriorLike, alpha: OrderLike) -> Pmf:
    """Order-alpha Rényi mean: the normalized mean measure for alpha in (0, inf].

    At alpha = 0 the mass sits on outputs where the supported rows covering
    the output carry the largest prior mass, weighted by
    exp(-D_1(T_0 || T_1)) times the order-one mean.
    """
    ch = as_channel(ch)
    prior = as_prior(p, ch)
    a = as_order(alpha).value
    _, logW, logP = _supported(ch, prior)
    if a > 0:
        logm = _log_mean(logW, logP, a)
        q = np.exp(logm - _lse(logm))
        return Pmf(q / math.fsum(q))
    logm1 = _log_mean(logW, logP, 1.0)
    pos = logm1 > -INF
    covered = logW > -INF
    P = np.exp(logP)
    theta = P @ covered
    top = np.max(theta[pos])
    keep = pos & (theta >= top * (1.0 - TIE_RTOL))
    # D_1(T_0 || T_1) per output: T_0 = P restricted to rows covering y
    with np.errstate(invalid="ignore", divide="ignore"):
        logT1 = logP[:, None] + logW - logm1[None, :]
        logT0 = np.where(covered, logP[:, None] - np.log(theta)[None, :], -INF)
        d = np.where(covered, np.exp(logT0) * (logT0 - logT1), 0.0)
    weight = np.where(keep, logm1 - np.sum(d, axis=0), -INF)
    q = np.exp(weight - _lse(weight))
    return Pmf(q / math.fsum(q))


def joint_divergence(ch: ChannelLike, p: PriorLike, q: Any, alpha: OrderLike) -> float:
    """D_alpha(P x W || P (x) Q) for the joint input-output measures."""
    ch = as_channel(ch)
    prior = as_prior(p, ch)
    a = as_order(alpha).value
    qv = _weights(q, "q")
    if qv.size != ch.n_outputs:
        raise AlphabetMismatch(f"q has {qv.size} outputs but channel has {ch.n_outputs}")
    if not np.any(qv > 0):
        raise ZeroMeasure("q must be non-zero")
    _, logW, logP = _supported(ch, prior)
    D = _div_rows(logW, _log(qv), a)
    if a == 0:
        return float(-_lse(logP - D))
    return _joint(D, logP, a)


# --------------------------------------------------------------------------
# coarsening


def _check_partition(partition: Sequence[Sequence[int]], m: int) -> list[np.ndarray]:
    cells = [np.asarray(c, dtype=int) for c in partition]
    if not cells or any(c.ndim != 1 or c.size == 0 for c in cells):
        raise InvalidPartition("partition cells must be non-empty")
    flat = np.concatenate(cells)
    if flat.size != m or np.any(np.sort(flat) != np.arange(m)):
        raise InvalidPartition(f"partition must cover outputs 0..{m - 1} exactly once")
    return cells


def coarsen_measure(q: Any, partition: Sequence[Sequence[int]]) -> np.ndarray:
    qv = _weights(q, "q")
    cells = _check_partition(partition, qv.size)
    return np.array([qv[c].sum() for c in cells])


def coarsen_channel(ch: ChannelLike, partition: Sequence[Sequence[int]]) -> FiniteChannel:
    """Merge output symbols cell by cell, summing their probabilities."""
    ch = as_channel(ch)
    cells = _check_partition(partition, ch.n_outputs)
    rows = np.stack([ch.rows[:, c].sum(axis=1) for c in cells], axis=1)
    return FiniteChannel(rows, ch.labels)
