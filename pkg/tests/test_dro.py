import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weighted_dro.dro import (
    AmbiguitySpec,
    PiecewiseAffineLoss,
    newsvendor_order,
    worst_case_dual,
    worst_case_grid_lp,
    worst_case_intersection,
)
from weighted_dro.empirical import DiscreteDistribution1D as D
from weighted_dro.lp import Infeasible
from oracles import ball_lp, intersection_lp

ABS = PiecewiseAffineLoss([1, -1], [0, 0])


def nv(x, cu=4.0, co=1.0):
    return PiecewiseAffineLoss.newsvendor(x, cu, co)


def random_instance(rng, T_max=8, lo=0.0, hi=10.0, p=None):
    T = int(rng.integers(1, T_max + 1))
    center = D(rng.uniform(lo, hi, T), rng.dirichlet(np.ones(T)))
    p = p if p is not None else int(rng.integers(1, 3))
    return AmbiguitySpec.weighted_ball(center, float(rng.uniform(0, 3)), p, (lo, hi))


class TestTypes:
    def test_loss_evaluation(self):
        loss = nv(3.0, 4.0, 1.0)
        assert loss(5.0) == 8.0 and loss(1.0) == 2.0 and loss(3.0) == 0.0
        assert np.array_equal(loss(np.array([5.0, 1.0])), [8.0, 2.0])
        assert loss.kinks().tolist() == [3.0]

    def test_loss_kinks_only_on_envelope(self):
        loss = PiecewiseAffineLoss([1, -1, 0], [0, 0, -5])
        assert loss.kinks().tolist() == [0.0]

    def test_loss_roundtrip(self):
        loss = PiecewiseAffineLoss([1, -2, 0.5], [0, 1, 3])
        again = PiecewiseAffineLoss.from_dict(loss.to_dict())
        assert np.array_equal(again.slopes, loss.slopes) and np.array_equal(again.intercepts, loss.intercepts)
        assert PiecewiseAffineLoss.from_dict({"newsvendor": {"x": 2, "c_u": 4, "c_o": 1}})(0.0) == 2.0

    def test_loss_invalid(self):
        with pytest.raises(ValueError):
            PiecewiseAffineLoss([], [])
        with pytest.raises(ValueError):
            nv(1.0, 0.0, 1.0)

    def test_spec_validation(self):
        c = D.point(0.0)
        with pytest.raises(ValueError):
            AmbiguitySpec.weighted_ball(c, -0.1, 2, (-1, 1))
        with pytest.raises(ValueError):
            AmbiguitySpec.weighted_ball(c, 0.1, 2, (1, -1))
        with pytest.raises(ValueError):
            AmbiguitySpec.weighted_ball(D.point(5.0), 0.1, 2, (-1, 1))
        with pytest.raises(ValueError):
            AmbiguitySpec.intersection([0.0, 0.5], [0.1, -0.1], 2, (-1, 1))
        with pytest.raises(ValueError):
            AmbiguitySpec("box", 2, (-1, 1), center=c, eps=1.0)

    def test_spec_roundtrip(self):
        a = AmbiguitySpec.weighted_ball(D([1, 2], [0.3, 0.7]), 0.5, 2, (0, 3))
        b = AmbiguitySpec.from_dict(a.to_dict())
        assert b.to_dict() == a.to_dict()
        c = AmbiguitySpec.intersection([1, 2], [0.5, 0.4], 1, (0, 3))
        assert AmbiguitySpec.from_dict(c.to_dict()).to_dict() == c.to_dict()


class TestDual:
    def test_zero_radius_is_saa(self):
        center = D([1.0, 4.0, 6.0], [0.2, 0.5, 0.3])
        spec = AmbiguitySpec.weighted_ball(center, 0.0, 2, (0, 10))
        loss = nv(4.5)
        assert worst_case_dual(loss, spec) == math.fsum(center.masses * loss(center.atoms))

    def test_abs_loss_example(self):
        spec = AmbiguitySpec.weighted_ball(D.point(0.0), 2.0, 1, (-10, 10))
        assert worst_case_dual(ABS, spec) == pytest.approx(2.0, abs=1e-7)
        assert worst_case_grid_lp(ABS, spec, 201) == pytest.approx(2.0, abs=1e-9)

    @pytest.mark.parametrize("p", [1, 2])
    def test_huge_radius_reaches_worst_endpoint(self, p):
        spec = AmbiguitySpec.weighted_ball(D([2.0, 3.0], [0.5, 0.5]), 50.0, p, (0, 10))
        loss = nv(3.0)
        assert worst_case_dual(loss, spec) == pytest.approx(max(loss(0.0), loss(10.0)), abs=1e-7)

    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_matches_independent_lp(self, p):
        rng = np.random.default_rng(p)
        for _ in range(5):
            spec = random_instance(rng, T_max=4, p=p)
            loss = nv(float(rng.uniform(0, 10)), *rng.uniform(0.5, 5, 2))
            grid = np.unique(np.concatenate((np.linspace(0, 10, 801), spec.center.atoms, loss.kinks())))
            ref = ball_lp(loss, spec.center.atoms, spec.center.masses, spec.eps, p, grid)
            dual = worst_case_dual(loss, spec)
            assert ref <= dual + 1e-7
            assert dual - ref <= 2e-3 * (1 + abs(dual))

    def test_returns_multiplier(self):
        spec = AmbiguitySpec.weighted_ball(D.point(0.0), 1.0, 2, (-10, 10))
        value, lam = worst_case_dual(ABS, spec, return_multiplier=True)
        # sup over |xi| <= 1 in W_2 of E|xi| is 1, attained with lam = 1/2
        assert value == pytest.approx(1.0, abs=1e-7) and lam == pytest.approx(0.5, abs=1e-5)

    def test_requires_ball(self):
        spec = AmbiguitySpec.intersection([0.0], [1.0], 2, (-1, 1))
        with pytest.raises(ValueError):
            worst_case_dual(ABS, spec)


class TestGridLP:
    def test_zero_radius_is_saa(self):
        center = D([1.0, 4.0, 6.0], [0.2, 0.5, 0.3])
        spec = AmbiguitySpec.weighted_ball(center, 0.0, 2, (0, 10))
        loss = nv(4.5)
        assert worst_case_grid_lp(loss, spec, 11) == pytest.approx(math.fsum(center.masses * loss(center.atoms)), abs=1e-12)

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_highs_on_same_grid(self, seed):
        rng = np.random.default_rng(seed)
        spec = random_instance(rng, T_max=5)
        loss = nv(float(rng.uniform(0, 10)), 3.0, 2.0)
        G = 41
        grid = np.unique(np.concatenate((np.linspace(0, 10, G), spec.center.atoms, loss.kinks())))
        ref = ball_lp(loss, spec.center.atoms, spec.center.masses, spec.eps, spec.p, grid)
        assert worst_case_grid_lp(loss, spec, G) == pytest.approx(ref, abs=1e-8)

    def test_single_atom_p2(self):
        spec = AmbiguitySpec.weighted_ball(D.point(4.0), 0.3, 2, (0, 10))
        loss = nv(4.2)
        assert worst_case_grid_lp(loss, spec, 4001) == pytest.approx(worst_case_dual(loss, spec), abs=1e-3)

    @pytest.mark.parametrize("seed", range(10))
    def test_below_dual_and_close(self, seed):
        rng = np.random.default_rng(100 + seed)
        spec = random_instance(rng, T_max=10)
        loss = nv(float(rng.uniform(0, 10)), *rng.uniform(0.5, 5, 2))
        dual = worst_case_dual(loss, spec)
        grid = worst_case_grid_lp(loss, spec, 2001)
        assert grid <= dual + 1e-7
        assert dual - grid <= 5e-3 * (1 + abs(dual))

    def test_grid_size(self):
        spec = AmbiguitySpec.weighted_ball(D.point(4.0), 0.3, 2, (0, 10))
        with pytest.raises(ValueError):
            worst_case_grid_lp(ABS, spec, 1)


class TestIntersection:
    def test_single_ball(self):
        spec = AmbiguitySpec.intersection([3.0], [1.2], 2, (0, 10))
        ball = AmbiguitySpec.weighted_ball(D.point(3.0), 1.2, 2, (0, 10))
        loss = nv(3.5)
        value, doublings = worst_case_intersection(loss, spec, 101)
        assert doublings == 0
        assert value == pytest.approx(worst_case_grid_lp(loss, ball, 101), abs=1e-9)

    def test_identical_atoms_use_tightest_radius(self):
        spec = AmbiguitySpec.intersection([4.0] * 5, [2.0, 1.5, 1.0, 3.0, 1.25], 2, (0, 10))
        ball = AmbiguitySpec.weighted_ball(D.point(4.0), 1.0, 2, (0, 10))
        loss = nv(4.4)
        value, _ = worst_case_intersection(loss, spec, 201)
        assert value == pytest.approx(worst_case_grid_lp(loss, ball, 201), abs=1e-9)

    def test_empty_intersection_doubles(self):
        spec = AmbiguitySpec.intersection([0.0, 10.0], [0.5, 0.5], 1, (0, 10))
        value, doublings = worst_case_intersection(nv(5.0), spec, 101)
        # balls of radius 0.5 * 2^k around 0 and 10 meet once 2^(k+1) * 0.5 >= 10
        assert doublings == 4
        assert intersection_lp(nv(5.0), [0.0, 10.0], [8.0, 8.0], 1, np.linspace(0, 10, 101)) == pytest.approx(value, abs=1e-8)

    def test_zero_radii_cannot_be_repaired(self):
        spec = AmbiguitySpec.intersection([1.0, 2.0], [0.0, 0.0], 2, (0, 10))
        with pytest.raises(Infeasible):
            worst_case_intersection(nv(1.5), spec, 11)

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_highs(self, seed):
        rng = np.random.default_rng(seed)
        T = int(rng.integers(1, 6))
        pts = rng.integers(0, 11, T).astype(float)
        radii = rng.uniform(3, 8, T)
        p = int(rng.integers(1, 3))
        spec = AmbiguitySpec.intersection(pts, radii, p, (0, 10))
        loss = nv(float(rng.integers(0, 11)))
        value, doublings = worst_case_intersection(loss, spec, 51)
        ref = intersection_lp(loss, pts, radii * 2 ** doublings, p, np.linspace(0, 10, 51))
        assert ref is not None and value == pytest.approx(ref, abs=1e-8)
        if doublings:
            assert intersection_lp(loss, pts, radii * 2 ** (doublings - 1), p, np.linspace(0, 10, 51)) is None

    def test_inside_every_ball(self):
        pts = [2.0, 4.0, 5.0]
        radii = [3.0, 2.5, 4.0]
        loss = nv(4.0)
        value, _ = worst_case_intersection(loss, AmbiguitySpec.intersection(pts, radii, 2, (0, 10)), 101)
        singles = [worst_case_grid_lp(loss, AmbiguitySpec.weighted_ball(D.point(x), r, 2, (0, 10)), 101) for x, r in zip(pts, radii)]
        assert value <= min(singles) + 1e-9

    def test_monotone_in_each_radius(self):
        pts = [2.0, 4.0, 5.0]
        loss = nv(4.0)
        base = worst_case_intersection(loss, AmbiguitySpec.intersection(pts, [3.0, 2.5, 4.0], 2, (0, 10)), 101)[0]
        for i in range(3):
            radii = [3.0, 2.5, 4.0]
            radii[i] += 0.7
            assert worst_case_intersection(loss, AmbiguitySpec.intersection(pts, radii, 2, (0, 10)), 101)[0] >= base - 1e-9


class TestProperties:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_monotone_and_sandwich(self, seed):
        rng = np.random.default_rng(seed)
        spec = random_instance(rng)
        loss = nv(float(rng.uniform(0, 10)), *rng.uniform(0.5, 5, 2))
        saa = math.fsum(spec.center.masses * loss(spec.center.atoms))
        top = max(loss(0.0), loss(10.0))
        prev = -math.inf
        for eps in (0.0, 0.1, 0.5, 1.0, 3.0, 20.0):
            s = AmbiguitySpec.weighted_ball(spec.center, eps, spec.p, spec.support)
            v = worst_case_dual(loss, s)
            assert saa - 1e-9 <= v <= top + 1e-7
            assert v >= prev - 1e-7
            prev = v

    @pytest.mark.parametrize("seed", range(4))
    def test_convex_in_order(self, seed):
        rng = np.random.default_rng(seed)
        spec = random_instance(rng, p=2)
        xs = np.linspace(0, 10, 33)
        vals = np.array([worst_case_dual(nv(x, 3.0, 1.0), spec) for x in xs])
        assert np.all(vals[:-2] - 2 * vals[1:-1] + vals[2:] >= -1e-7)


class TestOrder:
    def test_saa_fractile(self):
        center = D([5.0, 1.0, 3.0, 9.0, 7.0], [0.1, 0.2, 0.3, 0.2, 0.2])
        spec = AmbiguitySpec.weighted_ball(center, 0.0, 2, (0, 10))
        x, value = newsvendor_order(spec, 4, 1)
        # cumulative masses at 1, 3, 5, 7, 9: 0.2, 0.5, 0.6, 0.8, 1.0; lower 0.8-quantile is 7
        assert x == 7.0
        assert value == pytest.approx(math.fsum(center.masses * nv(7.0)(center.atoms)))

    @pytest.mark.parametrize("eps", [0.0, 0.5, 2.0])
    @pytest.mark.parametrize("p", [1, 2])
    def test_symmetric_midpoint(self, eps, p):
        spec = AmbiguitySpec.weighted_ball(D([3.0, 7.0], [0.5, 0.5]), eps, p, (0, 10))
        x, _ = newsvendor_order(spec, 2.0, 2.0, method="grid", grid_size=401)
        if eps > 0:
            assert x == pytest.approx(5.0, abs=1e-5)
        xd, _ = newsvendor_order(spec, 2.0, 2.0)
        assert 3.0 - 1e-9 <= xd <= 7.0 + 1e-9
        if eps > 0:
            assert xd == pytest.approx(5.0, abs=1e-5)

    @pytest.mark.parametrize("seed", range(5))
    def test_dual_and_grid_agree(self, seed):
        rng = np.random.default_rng(seed)
        spec = random_instance(rng, T_max=10)
        cu, co = rng.uniform(0.5, 5, 2)
        G = 2001
        xd, vd = newsvendor_order(spec, cu, co, "dual")
        xg, vg = newsvendor_order(spec, cu, co, "grid", grid_size=G)
        cell = 10.0 / (G - 1)
        assert abs(xd - xg) <= 2 * cell
        assert vd == pytest.approx(worst_case_dual(nv(xd, cu, co), spec), abs=1e-7)
        assert abs(vd - vg) <= 5e-3 * (1 + abs(vd))

    def test_dual_order_is_minimal(self):
        rng = np.random.default_rng(9)
        spec = random_instance(rng, p=2)
        x, v = newsvendor_order(spec, 4.0, 1.0)
        for y in np.linspace(0, 10, 41):
            assert worst_case_dual(nv(y), spec) >= v - 1e-7

    def test_intersection_order(self):
        spec = AmbiguitySpec.intersection([3.0, 4.0, 5.0], [2.0, 2.0, 2.0], 2, (0, 10))
        x, v = newsvendor_order(spec, 4.0, 1.0, method="grid", grid_size=201)
        for y in np.linspace(0, 10, 21):
            assert worst_case_intersection(nv(y), spec, 201)[0] >= v - 1e-6
        with pytest.raises(ValueError):
            newsvendor_order(spec, 4.0, 1.0, method="dual")

    def test_invalid(self):
        spec = AmbiguitySpec.weighted_ball(D.point(1.0), 0.0, 2, (0, 10))
        with pytest.raises(ValueError):
            newsvendor_order(spec, 0.0, 1.0)
        with pytest.raises(ValueError):
            newsvendor_order(spec, 1.0, 1.0, method="conic")
