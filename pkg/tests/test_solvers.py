import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog as scipy_linprog

from weighted_dro.lp import Infeasible, LPError, Unbounded, linprog, solve_standard
from weighted_dro.rng import stream
from weighted_dro.search import bisect_sign, golden_section


class TestSearch:
    def test_quadratic(self):
        res = golden_section(lambda x: (x - 0.3) ** 2, -1, 2, xtol=1e-10)
        assert res.x == pytest.approx(0.3, abs=1e-8)

    def test_endpoint_minimum(self):
        assert golden_section(lambda x: x, 0, 5).x == 0.0
        assert golden_section(lambda x: -x, 0, 5).x == 5.0

    def test_kinked(self):
        res = golden_section(lambda x: abs(x - math.pi) + 1, 0, 10, xtol=1e-12)
        assert res.x == pytest.approx(math.pi, abs=1e-9) and res.fx == pytest.approx(1, abs=1e-9)

    def test_flat_minimum_tie_rule(self):
        f = lambda x: max(abs(x - 5.0) - 2.0, 0.0)
        assert golden_section(f, 0, 10, xtol=1e-9, tie_tol=1e-12).x == pytest.approx(5.0, abs=1e-6)
        assert 3.0 <= golden_section(f, 0, 10, xtol=1e-9).x <= 7.0

    def test_bisect(self):
        assert bisect_sign(lambda x: 2 - x * x, 0, 2) == pytest.approx(math.sqrt(2), abs=1e-14)


def random_lp(rng, m, n):
    A = rng.normal(size=(m, n)).round(1)
    x0 = rng.uniform(0, 1, n) * (rng.uniform(size=n) < 0.6)
    b = A @ x0
    c = rng.normal(size=n).round(1)
    return c, A, b


class TestSimplex:
    def test_small_known(self):
        # max 3x + 2y s.t. x + y <= 4, x + 3y <= 6, x <= 3
        res = linprog([3, 2], A_ub=[[1, 1], [1, 3], [1, 0]], b_ub=[4, 6, 3])
        assert res.value == pytest.approx(11) and np.allclose(res.x, [3, 1])

    def test_infeasible(self):
        with pytest.raises(Infeasible):
            solve_standard([1, 1], [[1, 1]], [-1])

    def test_unbounded(self):
        with pytest.raises(Unbounded) as info:
            linprog([1, 0], A_ub=[[-1, 1]], b_ub=[1])
        assert isinstance(info.value, LPError)

    def test_degenerate_cycling_example(self):
        # Beale's example cycles under textbook Dantzig pricing without anti-cycling safeguards
        c = np.array([0.75, -150, 0.02, -6])
        A = np.array([[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]])
        res = linprog(c, A_ub=A, b_ub=[0, 0, 1])
        assert res.value == pytest.approx(0.05)

    def test_iteration_limit_trace(self):
        A = [[1, 1, 1, 0, 0], [1, 3, 0, 1, 0], [1, 0, 0, 0, 1]]
        with pytest.raises(LPError) as info:
            solve_standard([3, 2, 0, 0, 0], A, [4, 6, 3], max_iter=1)
        assert not isinstance(info.value, (Infeasible, Unbounded))
        assert info.value.trace and "last pivots" in str(info.value)

    def test_warm_start_same_answer(self):
        rng = np.random.default_rng(5)
        c, A, b = random_lp(rng, 6, 15)
        # a fixed total keeps the feasible set bounded
        A = np.vstack((A, np.ones(15)))
        b = np.append(b, 10.0)
        cold = solve_standard(c, A, b)
        warm = solve_standard(c, A, b, basis=cold.basis)
        assert warm.value == pytest.approx(cold.value, abs=1e-9)
        assert warm.iterations == 0

    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 10 ** 6), st.integers(1, 6), st.integers(2, 12))
    def test_against_highs(self, seed, m, n):
        rng = np.random.default_rng(seed)
        c, A, b = random_lp(rng, m, n)
        ref = scipy_linprog(-c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
        if ref.status == 3:
            with pytest.raises(Unbounded):
                solve_standard(c, A, b)
            return
        assert ref.status == 0
        res = solve_standard(c, A, b)
        assert res.value == pytest.approx(-ref.fun, abs=1e-7 * (1 + abs(ref.fun)))
        assert np.allclose(A @ res.x, b, atol=1e-8) and np.all(res.x >= 0)


class TestStreams:
    def test_reproducible(self):
        assert np.array_equal(stream(7, 1, 2).random(5), stream(7, 1, 2).random(5))
        assert not np.array_equal(stream(7, 1, 2).random(5), stream(7, 2, 1).random(5))

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            stream(-1)
