"""Randomized invariants checked with hypothesis."""

import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from renyicap import capacity as cap
from renyicap import families as fam
from renyicap import measures as ms

INF = math.inf

weight = st.floats(0.0, 1.0, allow_nan=False)
finite_order = st.floats(0.01, 100.0, allow_nan=False)
order = st.one_of(finite_order, st.sampled_from([1.0, INF]))


def pmf(m):
    return st.lists(weight, min_size=m, max_size=m).filter(lambda w: sum(w) > 1e-3).map(
        lambda w: np.asarray(w) / sum(w)
    )


@st.composite
def pmf_pair(draw, max_m=6):
    m = draw(st.integers(1, max_m))
    return draw(pmf(m)), draw(pmf(m))


@st.composite
def channel_prior(draw, max_n=5, max_m=5):
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(1, max_m))
    rows = np.stack([draw(pmf(m)) for _ in range(n)])
    return ms.FiniteChannel(rows), draw(pmf(n))


def close(x, y, rel=1e-10):
    if x == y:
        return True
    return abs(x - y) <= rel * max(1.0, abs(x), abs(y))


def le(x, y, rel=1e-10):
    """x <= y up to a relative slack; infinities compare exactly."""
    if x == y or y == INF or x == -INF:
        return True
    if x == INF:
        return False
    return x - y <= rel * max(1.0, abs(x), abs(y))


# --------------------------------------------------------------------------
# divergence


@given(pmf_pair(), order)
def test_pinsker(pair, a):
    w, q = pair
    tv = np.abs(w - q).sum()
    assert le(min(1.0, a) / 2.0 * tv ** 2, ms.renyi_divergence(w, q, a))


@given(pmf_pair(), st.floats(0.0, 100.0), st.floats(0.0, 100.0))
def test_divergence_nondecreasing_in_order(pair, a, b):
    w, q = pair
    lo, hi = sorted((a, b))
    assert le(ms.renyi_divergence(w, q, lo), ms.renyi_divergence(w, q, hi))
    assert le(ms.renyi_divergence(w, q, hi), ms.renyi_divergence(w, q, INF))


@given(pmf_pair(), order, st.floats(1e-3, 1e3), st.floats(0.0, 1.0))
def test_divergence_scaling_and_domination(pair, a, gamma, shrink):
    w, v = pair
    # subnormal masses do not scale exactly in floating point
    assume(np.all((v == 0) | (v > 1e-300)))
    base = ms.renyi_divergence(w, v, a)
    scaled = ms.renyi_divergence(w, gamma * v, a)
    if base == INF:
        assert scaled == INF
    else:
        assert close(scaled, base - math.log(gamma), rel=1e-9)
    # a smaller reference measure can only increase the divergence
    smaller = v * (1.0 - 0.5 * shrink)
    assert le(base, ms.renyi_divergence(w, smaller, a))


@given(st.data(), order, st.floats(0.0, 1.0))
def test_divergence_convex_in_reference(data, a, beta):
    m = data.draw(st.integers(1, 6))
    w, q1, q0 = (data.draw(pmf(m)) for _ in range(3))
    mix = ms.renyi_divergence(w, beta * q1 + (1 - beta) * q0, a)
    bound = beta * ms.renyi_divergence(w, q1, a) + (1 - beta) * ms.renyi_divergence(w, q0, a)
    if beta in (0.0, 1.0):
        return
    assert le(mix, bound)


@given(st.data(), order, st.floats(0.0, 1.0))
def test_divergence_jointly_quasiconvex(data, a, beta):
    m = data.draw(st.integers(1, 6))
    w1, w0, q1, q0 = (data.draw(pmf(m)) for _ in range(4))
    lhs = ms.renyi_divergence(beta * w1 + (1 - beta) * w0, beta * q1 + (1 - beta) * q0, a)
    assert le(lhs, max(ms.renyi_divergence(w1, q1, a), ms.renyi_divergence(w0, q0, a)))


@given(pmf_pair(max_m=6), order, st.randoms(use_true_random=False))
def test_coarsening_does_not_increase_divergence(pair, a, rnd):
    w, q = pair
    m = w.size
    labels = [rnd.randrange(max(1, m // 2)) for _ in range(m)]
    parts = [[i for i in range(m) if labels[i] == k] for k in sorted(set(labels))]
    coarse = ms.renyi_divergence(ms.coarsen_measure(w, parts), ms.coarsen_measure(q, parts), a)
    assert le(coarse, ms.renyi_divergence(w, q, a))


# --------------------------------------------------------------------------
# mean measure and information


@given(channel_prior(), finite_order, finite_order)
def test_mean_norm_power_log_convex_and_monotone(cp, a, c):
    ch, p = cp
    lo, hi = sorted((a, c))
    assume(hi - lo > 1e-3)
    mid = 0.5 * (lo + hi)

    def log_f(x):
        return x * math.log(ms.mean_measure(ch, p, x).norm)

    assert le(log_f(mid), 0.5 * (log_f(lo) + log_f(hi)), rel=1e-9)
    assert le(ms.mean_measure(ch, p, lo).norm, ms.mean_measure(ch, p, hi).norm)


@given(channel_prior(), order)
def test_mean_norm_bounds_and_support(cp, a):
    ch, p = cp
    mm = ms.mean_measure(ch, p, a)
    k = int(np.count_nonzero(p))
    lower = k ** (-1.0 / a) if a != INF else 1.0
    assert lower * (1 - 1e-12) <= mm.norm <= k * (1 + 1e-12)
    # P(w)^(1/a) W^... must be representable for the support to survive in doubles
    if 0 < a < INF:
        assume(float(p[p > 0].min()) ** (1.0 / a) * float(ch.rows[ch.rows > 0].min()) > 1e-290)
    support1 = ms.mean_measure(ch, p, 1.0).weights > 0
    assert np.array_equal(mm.weights > 0, support1)
    if a == 1.0:
        assert abs(mm.norm - 1.0) <= 1e-12


@given(channel_prior(), st.floats(0.01, 100.0))
def test_posterior_columns_are_pmfs(cp, a):
    ch, p = cp
    _, post = ms.mean_density_and_posterior(ch, p, a)
    cols = post.entries[:, post.outputs].sum(axis=0)
    assert np.all(np.abs(cols - 1.0) <= 1e-10)


@given(channel_prior(), st.floats(0.0, 100.0), st.floats(0.0, 100.0))
def test_information_nonnegative_and_nondecreasing(cp, a, b):
    ch, p = cp
    lo, hi = sorted((a, b))
    i_lo, i_hi = ms.renyi_information(ch, p, lo), ms.renyi_information(ch, p, hi)
    assert i_lo >= -1e-12
    assert le(i_lo, i_hi)
    assert le(i_hi, ms.renyi_information(ch, p, INF))


@given(st.data(), st.floats(0.01, 1.0))
def test_mean_lipschitz_in_prior(data, a):
    ch, p1 = data.draw(channel_prior())
    p2 = data.draw(pmf(ch.n_inputs))
    diff = np.abs(ms.mean_measure(ch, p1, a).weights - ms.mean_measure(ch, p2, a).weights).sum()
    assert diff <= np.abs(p1 - p2).sum() / a + 1e-12


@given(channel_prior(), st.floats(0.01, 100.0))
def test_gallager_information_identity(cp, rho):
    ch, p = cp
    lhs = ms.gallager_e0(rho, ch, p)
    rhs = rho * ms.renyi_information(ch, p, 1.0 / (1.0 + rho))
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


@given(st.data(), order)
def test_information_is_minimum_joint_divergence(data, a):
    ch, p = data.draw(channel_prior())
    q = data.draw(pmf(ch.n_outputs))
    info = ms.renyi_information(ch, p, a)
    assert le(info, ms.joint_divergence(ch, p, q, a))
    if 0 < a:
        assert close(ms.joint_divergence(ch, p, ms.renyi_mean(ch, p, a), a), info)


# --------------------------------------------------------------------------
# capacity


@settings(max_examples=30)
@given(channel_prior(max_n=4, max_m=4), st.one_of(st.floats(0.05, 20.0), st.just(1.0), st.just(INF)))
def test_certificate_soundness(cp, a):
    ch, q_seed = cp
    sol = cap.solve_capacity(ch, a)
    assert sol.lower_bound <= sol.upper_bound
    assert sol.lower_bound <= sol.capacity <= sol.upper_bound
    assert abs(sol.center.weights.sum() - 1.0) <= 1e-12
    # the prior's information never exceeds the radius at the center
    assert le(ms.renyi_information(ch, sol.prior, a), cap.relative_radius(ch, sol.center, a), rel=1e-9)
    # any other output law has a radius at least the lower bound
    q = np.full(ch.n_outputs, 1.0 / ch.n_outputs) if q_seed.size != ch.n_outputs else q_seed
    assert le(sol.lower_bound, cap.relative_radius(ch, q, a), rel=1e-9)


# --------------------------------------------------------------------------
# Poisson families


levels = st.lists(st.floats(0.0, 3.0), min_size=3, max_size=3)


@given(levels, levels, st.floats(0.1, 0.9), st.floats(0.05, 5.0))
def test_poisson_divergence_additive_over_intervals(fv, gv, cut, a):
    assume(abs(a - 1.0) > 1e-6)
    T = 1.0
    f = fam.PiecewiseConstant([0.3, 0.7], fv)
    g = fam.PiecewiseConstant([0.3, 0.7], np.asarray(gv) + 0.1)
    whole = fam.poisson_divergence(f, g, T, a)
    left = fam.poisson_divergence(f, g, cut, a)
    # shift the right piece back to the origin
    fr = fam.PiecewiseConstant([b - cut for b in (0.3, 0.7) if b > cut], [v for b, v in zip((0.3, 0.7, T), fv) if b > cut])
    gr = fam.PiecewiseConstant(
        [b - cut for b in (0.3, 0.7) if b > cut], [v + 0.1 for b, v in zip((0.3, 0.7, T), gv) if b > cut]
    )
    right = fam.poisson_divergence(fr, gr, T - cut, a)
    if whole == INF:
        assert INF in (left, right)
    else:
        assert close(whole, left + right, rel=1e-9)
