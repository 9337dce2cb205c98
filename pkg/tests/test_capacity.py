import json
import math

import numpy as np
import pytest
from scipy.optimize import brentq

from renyicap.capacity import (
    LinearCost,
    SupportRestriction,
    Unconstrained,
    capacity_curve,
    capacity_restarts,
    center_continuity_check,
    constrained_sup_joint,
    constraint_from_json,
    convex_hull_augment,
    ehb_gap,
    epsilon_core,
    product_channel,
    radius_bruteforce,
    relative_radius,
    solve_capacity,
    solve_constrained_capacity,
    uec_order_lipschitz,
    uec_prior_bound,
    union_channel,
)
from renyicap.errors import (
    AlphabetMismatch,
    AlphabetTooLarge,
    DomainError,
    InfeasibleConstraint,
    NotConverged,
    OrderOutOfRange,
)
from renyicap.measures import binary_renyi_entropy, renyi_information, renyi_mean

from conftest import bsc, shifted_bsc

LN2 = math.log(2)
TOL = 1e-9

# capacities of BSC(0.1): mpmath evaluations of ln 2 - h_alpha(0.1)
BSC_ORACLE = {
    0.5: 0.22314355131420975577,
    1: 0.36806420716849706991,
    2: 0.49469624183610705467,
}


def bsc_with_mixed_row(delta):
    """Companion of shifted_bsc: a BSC on the first two outputs plus a mixed row."""
    return np.array(
        [
            [1 - delta, delta, 0, 0],
            [delta, 1 - delta, 0, 0],
            [(1 - delta) / 2, (1 - delta) / 2, delta / 2, delta / 2],
        ]
    )


def random_channel(rng, n, m):
    return rng.dirichlet(np.ones(m) * 0.7, size=n)


class TestRelativeRadius:
    def test_single_row(self):
        assert relative_radius([[0.3, 0.7]], [0.3, 0.7], 2) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("alpha", [0.1, 1, 3, math.inf])
    def test_identity_uniform(self, alpha):
        assert relative_radius(np.eye(2), [0.5, 0.5], alpha) == pytest.approx(LN2, rel=1e-14)

    def test_shifted_bsc(self):
        r = relative_radius(shifted_bsc(0.1), [0, 0, 0.5, 0.5], 0.5)
        assert r == pytest.approx(LN2 - binary_renyi_entropy(0.1, 0.5), rel=1e-13)

    def test_mismatch(self):
        with pytest.raises(AlphabetMismatch):
            relative_radius(np.eye(2), [1, 0, 0], 1)


class TestSolveCapacity:
    @pytest.mark.parametrize("k", [1, 2, 3, 5])
    @pytest.mark.parametrize("alpha", [0.3, 1, 4, math.inf])
    def test_identity(self, k, alpha):
        s = solve_capacity(np.eye(k), alpha, tol=TOL)
        assert s.capacity == pytest.approx(math.log(k), abs=1e-12)
        np.testing.assert_allclose(s.center.weights, np.full(k, 1 / k), atol=1e-12)
        assert s.gap <= 1e-12

    @pytest.mark.parametrize("alpha", [0.2, 1, 3, 12])
    def test_symmetric_quad_quarter(self, alpha):
        d = 0.25
        ch = [[d, d, 0.5 - d, 0.5 - d], [0.5 - d, 0.5 - d, d, d], [d, 0.5 - d, 0.5 - d, d], [0.5 - d, d, d, 0.5 - d]]
        assert solve_capacity(ch, alpha).capacity == pytest.approx(0.0, abs=1e-12)

    def test_shifted_bsc_order_one(self):
        s = solve_capacity(shifted_bsc(0.1), 1, tol=TOL)
        assert s.capacity == pytest.approx(LN2 - binary_renyi_entropy(0.1, 1), abs=1e-9)
        np.testing.assert_allclose(s.center.weights, [0, 0, 0.5, 0.5], atol=1e-9)

    @pytest.mark.parametrize("alpha,value", BSC_ORACLE.items())
    def test_bsc_oracle(self, alpha, value):
        s = solve_capacity(bsc(0.1), alpha, tol=TOL)
        assert s.lower_bound <= value + 1e-12
        assert s.upper_bound >= value - 1e-12
        assert s.capacity == pytest.approx(value, abs=1e-9)

    def test_z_channel(self):
        # order-one capacity of the Z channel with crossover 1/2 is ln(5/4), attained at P = (0.6, 0.4)
        s = solve_capacity([[1, 0], [0.5, 0.5]], 1, tol=1e-11)
        assert s.capacity == pytest.approx(math.log(1.25), abs=1e-10)
        np.testing.assert_allclose(s.prior.probs, [0.6, 0.4], atol=1e-4)

    def test_certificate_soundness(self, rng):
        for _ in range(40):
            ch = random_channel(rng, *rng.integers(1, 6, size=2))
            alpha = float(np.exp(rng.uniform(-3, 3)))
            s = solve_capacity(ch, alpha)
            assert s.lower_bound == pytest.approx(renyi_information(ch, s.prior.probs, alpha), abs=1e-12)
            assert s.upper_bound == pytest.approx(relative_radius(ch, s.center.weights, alpha), abs=1e-12)
            assert s.lower_bound <= s.upper_bound
            assert s.lower_bound <= s.capacity <= s.upper_bound
            # any other output distribution has radius at least the lower bound
            q = rng.dirichlet(np.ones(ch.shape[1]))
            assert relative_radius(ch, q, alpha) >= s.lower_bound - 1e-12

    def test_optimality_condition(self, rng):
        for _ in range(20):
            ch = random_channel(rng, 4, 3)
            for alpha in (0.5, 2):
                s = solve_capacity(ch, alpha)
                q = renyi_mean(ch, s.prior.probs, alpha).weights
                assert relative_radius(ch, q, alpha) <= s.lower_bound + s.gap + 1e-12

    def test_order_zero_refused(self):
        with pytest.raises(OrderOutOfRange):
            solve_capacity(bsc(0.1), 0)

    def test_bad_tol(self):
        with pytest.raises(DomainError):
            solve_capacity(bsc(0.1), 1, tol=0)

    def test_not_converged_carries_bracket(self):
        with pytest.raises(NotConverged) as info:
            solve_capacity([[0.7, 0.2, 0.1], [0.1, 0.5, 0.4], [0.3, 0.3, 0.4]], 1, tol=1e-15, max_iter=2)
        sol = info.value.solution
        assert sol.lower_bound <= sol.upper_bound
        assert not sol.converged

    def test_infinite_order_closed_form(self):
        ch = np.array([[0.7, 0.2, 0.1], [0.1, 0.5, 0.4]])
        s = solve_capacity(ch, math.inf)
        assert s.capacity == pytest.approx(math.log(0.7 + 0.5 + 0.4), rel=1e-14)
        # the finite-order capacities increase toward it
        caps = [solve_capacity(ch, a).capacity for a in (2, 8, 32, 128, 512)]
        assert all(x <= y + 2e-9 for x, y in zip(caps, caps[1:]))
        assert caps[-1] <= s.capacity + 1e-9
        assert s.capacity - caps[-1] < 5e-3

    def test_deterministic(self):
        ch = [[0.6, 0.3, 0.1], [0.2, 0.2, 0.6], [0.3, 0.4, 0.3]]
        a = solve_capacity(ch, 0.4)
        b = solve_capacity(ch, 0.4)
        assert a.to_json() == b.to_json()

    def test_restarts_brackets_overlap(self, rng):
        ch = random_channel(rng, 5, 4)
        runs = capacity_restarts(ch, 0.3)
        assert len(runs) == 8
        lo = max(r.lower_bound for r in runs if r.converged)
        hi = min(r.upper_bound for r in runs if r.converged)
        assert lo <= hi + 1e-12

    def test_json(self):
        d = solve_capacity(np.eye(2), math.inf).to_json()
        assert list(d) == ["order", "capacity", "lower", "upper", "gap", "iterations", "prior", "center"]
        assert d["order"] == math.inf
        json.dumps(d)


class TestBruteforce:
    def test_identity(self):
        assert radius_bruteforce(np.eye(2), 1, 1000) == pytest.approx(LN2, abs=2e-3)

    def test_single_row(self):
        assert radius_bruteforce([[0.2, 0.5, 0.3]], 2, 50) == 0.0

    def test_too_large(self):
        with pytest.raises(AlphabetTooLarge):
            radius_bruteforce(np.eye(5), 1)

    def test_agrees_with_solver(self, rng):
        for _ in range(10):
            ch = random_channel(rng, 3, 3)
            for alpha in (0.5, 2):
                s = solve_capacity(ch, alpha)
                b = radius_bruteforce(ch, alpha, 200)
                assert b >= s.lower_bound - 1e-12
                assert b - s.upper_bound < 1e-2


class TestCurve:
    def test_identity_constant(self):
        curve = capacity_curve(np.eye(3), [0.2, 0.5, 1, 2, 5, math.inf])
        np.testing.assert_allclose([s.capacity for s in curve.solutions], math.log(3), atol=1e-12)

    def test_symmetric_quad_curve(self):
        d = 0.1
        ch = [[d, d, 0.5 - d, 0.5 - d], [0.5 - d, 0.5 - d, d, d], [d, 0.5 - d, 0.5 - d, d], [0.5 - d, d, d, 0.5 - d]]
        alphas = [0.25, 0.5, 1, 2, 4, 8]
        curve = capacity_curve(ch, alphas)
        caps = [s.capacity for s in curve.solutions]
        np.testing.assert_allclose(caps, [LN2 - binary_renyi_entropy(0.2, a) for a in alphas], atol=1e-8)
        assert all(np.diff(caps) > 0)

    def test_random_diagnostics(self, rng):
        ch = random_channel(rng, 4, 4)
        curve = capacity_curve(ch, [0.1, 0.3, 0.6, 0.9, 1, 1.5, 2, 3, 6, math.inf])
        d = curve.diagnostics
        assert d.monotonicity_violations == 0
        assert d.convexity_violations == 0
        assert d.nonincrease_violations == 0
        assert d.lipschitz_violations == 0

    def test_csv(self):
        text = capacity_curve(np.eye(2), [1, math.inf]).to_csv()
        lines = text.splitlines()
        assert lines[0] == "alpha,capacity,lower,upper,gap"
        assert lines[2].startswith("inf,")

    def test_unsorted(self):
        with pytest.raises(DomainError):
            capacity_curve(np.eye(2), [2, 1])


class TestConstrained:
    def test_unconstrained(self):
        ch = [[0.7, 0.3], [0.1, 0.9]]
        assert solve_constrained_capacity(ch, 2, Unconstrained()).capacity == pytest.approx(
            solve_capacity(ch, 2).capacity, abs=1e-12
        )

    def test_single_row_support(self):
        s = solve_constrained_capacity(bsc(0.1), 0.7, SupportRestriction((1,)))
        assert s.capacity == pytest.approx(0.0, abs=1e-15)
        np.testing.assert_array_equal(s.prior.probs, [0, 1])

    def test_slack_cost(self, rng):
        for _ in range(15):
            n, m = rng.integers(2, 5, size=2)
            ch = random_channel(rng, n, m)
            costs = rng.uniform(0, 1, n)
            alpha = [0.5, 1, 2][int(rng.integers(3))]
            s = solve_constrained_capacity(ch, alpha, LinearCost(tuple(costs), float(costs.max())))
            assert s.capacity == pytest.approx(solve_capacity(ch, alpha).capacity, abs=2e-9)

    @pytest.mark.parametrize("alpha", [0.5, 1, 3])
    def test_binding_cost_two_rows(self, alpha):
        # with two rows the feasible priors form an interval: scan it
        ch = np.array([[0.9, 0.1], [0.2, 0.8]])
        budget = 0.25
        s = solve_constrained_capacity(ch, alpha, LinearCost((0.0, 1.0), budget))
        grid = np.linspace(0, budget, 5001)
        best = max(renyi_information(ch, [1 - t, t], alpha) for t in grid)
        assert s.prior.probs[1] <= budget + 1e-9
        assert s.lower_bound <= best + 1e-9
        assert s.capacity == pytest.approx(best, abs=1e-8)

    def test_ge_direction(self):
        ch = np.array([[0.9, 0.1], [0.2, 0.8]])
        s = solve_constrained_capacity(ch, 1, LinearCost((1.0, 0.0), 0.8, "ge"))
        assert s.prior.probs[0] >= 0.8 - 1e-9

    def test_infeasible(self):
        with pytest.raises(InfeasibleConstraint):
            solve_constrained_capacity(bsc(0.1), 1, LinearCost((1.0, 2.0), 0.5))
        with pytest.raises(InfeasibleConstraint):
            solve_constrained_capacity(bsc(0.1), 1, SupportRestriction((5,)))

    def test_sup_joint_support(self):
        q = [0.5, 0.5]
        v = constrained_sup_joint(np.eye(2), 1, SupportRestriction((0,)), q)
        assert v == pytest.approx(LN2)

    def test_from_json(self):
        c = constraint_from_json({"kind": "linear_cost", "costs": [1, 2], "budget": 1.5, "dir": "ge"})
        assert c == LinearCost((1.0, 2.0), 1.5, "ge")
        with pytest.raises(DomainError):
            constraint_from_json({"kind": "box"})


class TestEhb:
    def test_center(self, rng):
        ch = random_channel(rng, 4, 3)
        s = solve_capacity(ch, 2, tol=1e-10)
        assert abs(ehb_gap(ch, s.center.weights, 2, s)) <= 10 * s.gap + 1e-12

    def test_random_q(self, rng):
        for _ in range(200):
            ch = random_channel(rng, *rng.integers(1, 5, size=2))
            alpha = float(np.exp(rng.uniform(-2, 2)))
            s = solve_capacity(ch, alpha, tol=1e-9)
            q = rng.dirichlet(np.ones(ch.shape[1]))
            assert ehb_gap(ch, q, alpha, s) >= -1e-7

    def test_shifted_bsc_off_center(self):
        ch = shifted_bsc(0.1)
        s = solve_capacity(ch, 0.5, tol=1e-10)
        g = ehb_gap(ch, [0, 0, 1, 0], 0.5, s)
        assert math.isfinite(g) and g > 0


class TestCompositions:
    def test_product_additivity(self, rng):
        for _ in range(5):
            c1 = random_channel(rng, *rng.integers(1, 4, size=2))
            c2 = random_channel(rng, *rng.integers(1, 4, size=2))
            for alpha in (0.5, 2):
                joint = solve_capacity(product_channel(c1, c2), alpha).capacity
                parts = solve_capacity(c1, alpha).capacity + solve_capacity(c2, alpha).capacity
                assert joint == pytest.approx(parts, abs=2e-9)

    def test_product_shape(self):
        p = product_channel(bsc(0.1), np.eye(3))
        assert p.shape == (6, 6)
        np.testing.assert_allclose(p.rows.sum(axis=1), 1.0)

    def test_union_self(self):
        ch = [[0.7, 0.3], [0.1, 0.9]]
        u = union_channel(ch, ch)
        assert u.shape == (2, 2)
        assert solve_capacity(u, 1).capacity == pytest.approx(solve_capacity(ch, 1).capacity, abs=1e-12)

    def test_union_mismatch(self):
        with pytest.raises(AlphabetMismatch):
            union_channel(np.eye(2), np.eye(3))

    def test_union_singular_centers(self):
        # below the threshold order the two centers are singular and capacities combine
        d = 0.1

        def f(x):
            return (2 ** (1 - x) - 1) ** (1 / x)

        threshold = brentq(lambda x: f(x) - d / (1 - d), 1e-6, 1 - 1e-9)
        for alpha in (0.3, 0.5 * threshold, threshold * 0.99):
            a, u = bsc_with_mixed_row(d), shifted_bsc(d)
            ca, cu = solve_capacity(a, alpha).capacity, solve_capacity(u, alpha).capacity
            both = solve_capacity(union_channel(a, u), alpha).capacity
            assert ca == pytest.approx(LN2 - binary_renyi_entropy(d, alpha), abs=1e-9)
            assert both == pytest.approx(math.log(math.exp(ca) + math.exp(cu)), abs=2e-9)


class TestCoreAndHull:
    def test_symmetric_core(self):
        s = solve_capacity(np.eye(3), 2)
        assert epsilon_core(np.eye(3), 2, 1e-6, s).shape == (3, 3)

    def test_dominated_row_removed(self):
        base = np.array([[0.9, 0.05, 0.05], [0.05, 0.9, 0.05], [0.05, 0.05, 0.9]])
        ch = np.vstack([base, 0.5 * base[0] + 0.5 * base[1]])
        for alpha in (0.5, 1, 2):
            s = solve_capacity(ch, alpha, tol=1e-10)
            core = epsilon_core(ch, alpha, 1e-4, s)
            assert core.shape[0] == 3
            assert solve_capacity(core, alpha).capacity == pytest.approx(s.capacity, abs=2e-9)

    def test_full_eps(self):
        ch = [[0.7, 0.3], [0.1, 0.9], [0.4, 0.6]]
        s = solve_capacity(ch, 1)
        assert epsilon_core(ch, 1, s.capacity, s).shape[0] == 3

    def test_hull_copy_row(self):
        ch = [[0.7, 0.3], [0.1, 0.9]]
        aug = convex_hull_augment(ch, [[1, 0]])
        assert aug.shape == (3, 2)
        assert solve_capacity(aug, 2).capacity == pytest.approx(solve_capacity(ch, 2).capacity, abs=1e-12)

    @pytest.mark.parametrize("alpha", [0.3, 1, 2, math.inf])
    def test_hull_bsc_mixture(self, alpha):
        aug = convex_hull_augment(bsc(0.1), [[0.5, 0.5]])
        assert solve_capacity(aug, alpha).capacity == pytest.approx(solve_capacity(bsc(0.1), alpha).capacity, abs=2e-9)

    def test_hull_random(self, rng):
        for _ in range(5):
            ch = random_channel(rng, 3, 3)
            priors = rng.dirichlet(np.ones(3), size=10)
            aug = convex_hull_augment(ch, priors)
            for alpha in (0.5, 2):
                assert solve_capacity(aug, alpha).capacity == pytest.approx(
                    solve_capacity(ch, alpha).capacity, abs=2e-9
                )


class TestContinuityBounds:
    def test_equal_orders(self):
        s = solve_capacity(bsc(0.2), 2)
        rep = center_continuity_check(bsc(0.2), 2, 2, s, s)
        assert rep.capacity_increase == 0.0
        assert rep.center_divergence == pytest.approx(0.0, abs=1e-15)
        assert rep.holds

    def test_bsc(self):
        s1, s2 = solve_capacity(bsc(0.1), 0.5), solve_capacity(bsc(0.1), 2)
        assert center_continuity_check(bsc(0.1), 0.5, 2, s1, s2).holds

    def test_random(self, rng):
        for _ in range(30):
            ch = random_channel(rng, *rng.integers(2, 5, size=2))
            a, e = sorted(np.exp(rng.uniform(-2, 2, size=2)))
            sa, se = solve_capacity(ch, a), solve_capacity(ch, e)
            assert center_continuity_check(ch, a, e, sa, se).holds

    def test_order_swap(self):
        s = solve_capacity(bsc(0.1), 1)
        with pytest.raises(DomainError):
            center_continuity_check(bsc(0.1), 2, 1, s, s)

    def test_uec_prior(self, rng):
        for _ in range(50):
            ch = random_channel(rng, 3, 3)
            p1, p2 = rng.dirichlet(np.ones(3), size=2)
            delta = 0.5 * np.abs(p1 - p2).sum()
            eta = float(np.exp(rng.uniform(-2, 2)))
            c_eta = solve_capacity(ch, eta).upper_bound
            bound = uec_prior_bound(delta, eta, c_eta)
            for alpha in np.linspace(0.05, 1, 5) * eta:
                diff = abs(renyi_information(ch, p2, alpha) - renyi_information(ch, p1, alpha))
                assert diff <= bound + 1e-12

    def test_uec_order(self):
        ch = bsc(0.15)
        c_bound = lambda eta: math.log(2)  # noqa: E731
        for lo, hi in [(0.2, 0.4), (0.9, 1.3), (2, 3)]:
            L = uec_order_lipschitz(lo, hi, c_bound)
            diff = solve_capacity(ch, hi).capacity - solve_capacity(ch, lo).capacity
            assert 0 <= diff <= L * (hi - lo)
