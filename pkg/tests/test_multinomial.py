import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import comb

from loo_lab.core import CapacityError, Dataset, MultinomialClass, default_features, loo_regret
from loo_lab.multinomial import (
    MultinomialAssignment,
    add_constant_learner,
    add_constant_regret_range,
    add_constant_regrets,
    add_one_regret,
    appearance_graph,
    compositions,
    epsilon_recursion,
    epsilon_sequence,
    equalize_pair,
    n_compositions,
    regret_of_composition,
    regret_spread,
    regret_table,
    separable_regret_range,
    shifted_empirical_learner,
    shifted_regret_range,
    solve_equalizer,
    sorted_compositions,
    sub,
    unit,
)


def random_assignment(m, N, seed):
    rng = np.random.default_rng(seed)
    table = {e: rng.dirichlet(np.ones(m)) for e in compositions(m, N - 1)}
    for q in table.values():
        q[-1] = 1.0 - q[:-1].sum()
    return MultinomialAssignment(m, N, table)


class TestCompositions:
    @given(m=st.integers(1, 4), total=st.integers(0, 7))
    def test_count_and_order(self, m, total):
        comps = list(compositions(m, total))
        assert len(comps) == len(set(comps)) == n_compositions(m, total)
        assert comps == sorted(comps)
        assert all(sum(c) == total and min(c) >= 0 for c in comps)

    @given(m=st.integers(1, 4), total=st.integers(0, 9))
    def test_sorted_representatives(self, m, total):
        reps = list(sorted_compositions(m, total))
        assert reps == sorted({tuple(sorted(c, reverse=True)) for c in compositions(m, total)}, reverse=True)

    def test_appearance_graph(self):
        g = appearance_graph(3, 5)
        assert len(g.nodes) == 21
        assert g.is_connected()
        for a, b, k, l in g.edges:
            diff = np.subtract(g.nodes[a], g.nodes[b])
            assert diff[k] == 1 and diff[l] == -1 and np.abs(diff).sum() == 2


class TestAssignment:
    def test_validation(self):
        with pytest.raises(ValueError):
            MultinomialAssignment(2, 3, {(2,): [1.0]})
        table = {e: [0.6, 0.6] for e in compositions(2, 1)}
        with pytest.raises(ValueError):
            MultinomialAssignment(2, 2, table)

    def test_domain_size(self):
        m, N = 3, 6
        q = add_constant_learner(m, N, 1.0)
        assert len(q.table) == comb(N - 2 + m, m - 1, exact=True)

    def test_csv_roundtrip(self):
        q = random_assignment(3, 4, 1)
        text = q.to_csv()
        assert text.splitlines()[0] == "e0,e1,e2,q0,q1,q2"
        back = MultinomialAssignment.from_csv(text)
        for e in q.table:
            np.testing.assert_array_equal(back[e], q[e])


class TestRegretOfComposition:
    def test_clairvoyant_zero(self):
        # q(j | v - e_j) = v_j / N for one particular v
        v = (3, 1)
        q = add_constant_learner(2, 4, 1.0)
        q.table[(2, 1)] = np.array([3 / 4, 1 / 4])
        q.table[(3, 0)] = np.array([3 / 4, 1 / 4])
        assert regret_of_composition(v, q) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("v", [(2, 0), (1, 1), (0, 2)])
    def test_add_one_small(self, v):
        assert regret_of_composition(v, add_constant_learner(2, 2, 1.0)) == pytest.approx(math.log(1.5))

    def test_zero_probability(self):
        q = add_constant_learner(2, 3, 1.0)
        q.table[(1, 1)] = np.array([1.0, 0.0])
        assert regret_of_composition((1, 2), q) == math.inf

    def test_wrong_size(self):
        with pytest.raises(ValueError):
            regret_of_composition((1, 1, 1), add_constant_learner(2, 3, 1.0))

    @settings(max_examples=20, deadline=None)
    @given(m=st.integers(2, 3), N=st.integers(2, 5), seed=st.integers(0, 10**6))
    def test_matches_generic_functional(self, m, N, seed):
        q = random_assignment(m, N, seed)
        cls = MultinomialClass(m)
        features = default_features(N)
        for y in itertools.product(range(m), repeat=N):
            v = tuple(np.bincount(y, minlength=m))
            expected = loo_regret(q.predictor(), cls, Dataset(features, y, m))
            assert regret_of_composition(v, q) == pytest.approx(expected, rel=1e-12, abs=1e-14)


class TestLearners:
    def test_add_constant_examples(self):
        np.testing.assert_allclose(add_constant_learner(2, 2, 1.0)[(1, 0)], [2 / 3, 1 / 3])
        np.testing.assert_allclose(add_constant_learner(3, 4, 1.0)[(3, 0, 0)], [4 / 6, 1 / 6, 1 / 6])
        with pytest.raises(ValueError):
            add_constant_learner(2, 3, 0.0)

    @pytest.mark.parametrize("m,N", [(2, 2), (2, 9), (3, 4), (4, 6), (5, 7)])
    def test_add_one_is_an_equalizer(self, m, N):
        values = list(regret_table(add_constant_learner(m, N, 1.0)).values())
        np.testing.assert_allclose(values, add_one_regret(m, N), rtol=1e-12)

    @pytest.mark.parametrize("m,N,beta", [(2, 9, 0.5), (3, 7, 1.0), (3, 6, 2.0), (4, 5, 0.3)])
    def test_symmetric_regrets_match_table(self, m, N, beta):
        V, r = add_constant_regrets(m, N, beta)
        table = regret_table(add_constant_learner(m, N, beta))
        for v, x in zip(map(tuple, V), r):
            assert x == pytest.approx(table[v], rel=1e-12, abs=1e-15)
        assert r.max() == pytest.approx(max(table.values()), rel=1e-12)

    def test_table_guard(self):
        with pytest.raises(CapacityError):
            add_constant_learner(5, 200, 1.0)

    def test_shifted_examples(self):
        np.testing.assert_allclose(shifted_empirical_learner(2, 6)[(5, 0)], [0.8, 0.2])
        q = shifted_empirical_learner(3, 9)
        for dist in q.table.values():
            assert dist.sum() == pytest.approx(1.0, abs=1e-12)
        with pytest.raises(ValueError):
            shifted_empirical_learner(3, 4)

    def test_shifted_max_regret_near_second_order_form(self):
        # exhaustive over the 101 compositions
        N = 100
        hi, _ = regret_spread(shifted_empirical_learner(2, N))
        assert abs(hi - 0.0099490) < 3e-4

    @pytest.mark.parametrize("m", [2, 3])
    def test_shifted_interior_second_order_sign(self, m):
        # balanced compositions: N^2 (R - (m-1)/N) tends to -(m-1)^2 / 2
        gaps = []
        for N in (50, 100, 200):
            v = tuple([N // m] * (m - 1) + [N - (m - 1) * (N // m)])
            R = regret_of_composition(v, shifted_empirical_learner(m, N))
            gaps.append(N * N * (R - (m - 1) / N))
        target = -((m - 1) ** 2) / 2
        errs = [abs(g - target) for g in gaps]
        assert errs == sorted(errs, reverse=True)
        assert errs[-1] < 0.05 * (m - 1) ** 2
        assert all(g < 0 for g in gaps)


class TestSeparableRange:
    @settings(max_examples=25, deadline=None)
    @given(m=st.integers(2, 4), N=st.integers(2, 9), beta=st.floats(0.1, 3.0))
    def test_add_constant_matches_table(self, m, N, beta):
        expected = regret_spread(add_constant_learner(m, N, beta))
        np.testing.assert_allclose(add_constant_regret_range(m, N, beta), expected, rtol=1e-12)

    @pytest.mark.parametrize("m,N", [(2, 5), (2, 30), (3, 9), (4, 10)])
    def test_shifted_matches_table(self, m, N):
        expected = regret_spread(shifted_empirical_learner(m, N))
        np.testing.assert_allclose(shifted_regret_range(m, N), expected, rtol=1e-12)

    @pytest.mark.parametrize("m", [2, 3, 5])
    def test_add_one_large(self, m):
        # far beyond what a table can hold at m=5
        hi, lo = add_constant_regret_range(m, 200, 1.0)
        assert hi == pytest.approx(math.log1p((m - 1) / 200), rel=1e-12)
        assert hi - lo <= 1e-13

    def test_zero_probability(self):
        # a symbol seen once elsewhere gets no mass: any composition using it is infinite
        hi, lo = separable_regret_range(2, 4, lambda c: 0.0 if c == 1 else 0.5)
        assert hi == math.inf and math.isfinite(lo)
        with pytest.raises(ValueError):
            add_constant_regret_range(2, 4, 0.0)


class TestEqualizePair:
    def test_small_root(self):
        q = add_constant_learner(2, 2, 1.0)
        q.table[(1, 0)] = np.array([0.5, 0.5])
        # symmetric partner b = 1 - a at the other context: -log a = -log 2(1 - a)
        q.table[(0, 1)] = np.array([1 / 3, 2 / 3])
        out = equalize_pair(q, (2, 0), (1, 1), 0, 1)
        assert out[(1, 0)][0] == pytest.approx(2 / 3, abs=1e-12)
        assert regret_of_composition((2, 0), out) == pytest.approx(regret_of_composition((1, 1), out))
        # the input is not modified
        assert q[(1, 0)][0] == 0.5

    def test_sweeps_from_half(self):
        start = add_constant_learner(2, 2, 1.0)
        for e in start.table:
            start.table[e] = np.array([0.5, 0.5])
        q, R = solve_equalizer(2, 2, init=start)
        assert q[(1, 0)][0] == pytest.approx(2 / 3, abs=1e-9)
        assert R == pytest.approx(math.log(1.5), abs=1e-10)

    def test_equal_regrets_unchanged(self):
        q = add_constant_learner(3, 4, 1.0)
        out = equalize_pair(q, (2, 1, 1), (1, 2, 1), 0, 1)
        for e in q.table:
            np.testing.assert_array_equal(out[e], q[e])

    def test_not_connected(self):
        with pytest.raises(ValueError):
            equalize_pair(add_constant_learner(2, 3, 1.0), (3, 0), (1, 2), 0, 1)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10**6))
    def test_local_and_monotone(self, seed):
        m, N = 3, 4
        q = random_assignment(m, N, seed)
        before = regret_table(q)
        g = appearance_graph(m, N)
        v = max(before, key=before.get)
        options = [(a, b, k, l) for a, b, k, l in g.edges if v in (g.nodes[a], g.nodes[b])
                   and before[g.nodes[a]] != before[g.nodes[b]]]
        if not options:
            return
        a, b, k, l = options[0]
        va, vb = g.nodes[a], g.nodes[b]
        out = equalize_pair(q, va, vb, k, l)
        after = regret_table(out)
        assert after[va] == pytest.approx(after[vb], rel=1e-9)
        assert max(after[va], after[vb]) <= max(before[va], before[vb]) + 1e-12
        e = sub(va, unit(m, k))
        for w in before:
            touches = any(w[j] > 0 and sub(w, unit(m, j)) == e for j in range(m))
            if not touches:
                assert after[w] == before[w]
        for ctx in q.table:
            if ctx != e:
                np.testing.assert_array_equal(out[ctx], q[ctx])
        others = [j for j in range(m) if j not in (k, l)]
        np.testing.assert_array_equal(out[e][others], q[e][others])


class TestSolveEqualizer:
    def test_small_case(self):
        q, R = solve_equalizer(2, 2)
        assert R == pytest.approx(math.log(1.5), abs=1e-12)
        assert q[(1, 0)][0] == pytest.approx(2 / 3, abs=1e-12)

    @pytest.mark.parametrize("N", [3, 6, 11])
    def test_binary_sweeps_from_other_start(self, N):
        # the binary appearance graph is a path, so the equalizer is unique
        q, R = solve_equalizer(2, N, init=add_constant_learner(2, N, 0.5))
        assert R == pytest.approx(math.log1p(1 / N), abs=1e-9)
        hi, lo = regret_spread(q)
        assert hi - lo <= 1e-10

    @pytest.mark.parametrize(
        "m,N,value",
        # min-max values from an independent convex-program solve, frozen
        [(2, 5, 0.1823215568), (3, 3, 0.5108256238), (3, 5, 0.3364722366), (3, 8, 0.2231435513)],
    )
    def test_minmax_values(self, m, N, value):
        _, R = solve_equalizer(m, N)
        assert R == pytest.approx(value, abs=1e-9)

    def test_binary_second_order_trend(self):
        gaps = [N * N * (solve_equalizer(2, N)[1] - 1 / N) for N in (8, 12, 16, 20)]
        assert all(a > b for a, b in zip(gaps, gaps[1:]))
        assert -0.55 <= gaps[-1] <= -0.45

    def test_guard(self):
        with pytest.raises(CapacityError):
            solve_equalizer(6, 40)


class TestEpsilonRecursion:
    def test_hand_iteration(self):
        assert epsilon_recursion(0.5, 2) == 5
        np.testing.assert_allclose(
            epsilon_sequence(0.5, 2, 6)[1:], [0.5625, 0.6471, 0.7674, 0.9495, 1.2502], atol=1e-4
        )

    def test_already_large(self):
        assert epsilon_recursion(1.0, 3) == 0
        assert epsilon_recursion(2.5, 2) == 0

    @pytest.mark.parametrize("m", [2, 3, 5])
    def test_grid_finite_and_monotone(self, m):
        ks = [epsilon_recursion(e / 10, m) for e in range(1, 10)]
        assert all(isinstance(k, int) and k > 0 for k in ks)
        assert ks == sorted(ks, reverse=True)

    @given(eps0=st.floats(0.01, 0.99), m=st.integers(2, 6))
    @settings(deadline=None)
    def test_strictly_above_start(self, eps0, m):
        seq = epsilon_sequence(eps0, m, 8)
        assert all(e > eps0 for e in seq[1:])

    def test_bad_input(self):
        with pytest.raises(ValueError):
            epsilon_recursion(0.0, 2)
        with pytest.raises(ValueError):
            epsilon_recursion(0.5, 1)
