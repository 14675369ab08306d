import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loo_lab.core import default_features
from loo_lab.graph import (
    ExplicitClass,
    UniqueValuesClass,
    build_graph,
    densest_subgraph_bruteforce,
    graph_from_sequences,
    make_class,
    peel_assign,
)
from loo_lab.hypergraph import (
    build_hypergraph,
    hyper_degeneracy,
    hyper_node_regrets,
    hypergraph_from_sequences,
    max_avg_subgraph_degree,
    multiclass_bound,
    peel_assign_multiclass,
)


def star3(N):
    return build_hypergraph(UniqueValuesClass(1, m=3), default_features(N))


random_binary = st.integers(3, 5).flatmap(
    lambda N: st.sets(st.tuples(*[st.integers(0, 1)] * N), min_size=2, max_size=12)
)


class TestBuild:
    def test_constant_class(self):
        h = build_hypergraph(ExplicitClass([(0,) * 3, (1,) * 3, (2,) * 3], m=3), (1, 2, 3))
        assert h.n_nodes == 3 and h.hyperedges == []

    def test_two_mark_star(self):
        h = star3(5)
        assert h.n_nodes == 11
        assert len(h.hyperedges) == 5
        assert all(len(mem) == 3 for _, mem in h.hyperedges)
        assert sorted(h.degrees()) == [1] * 10 + [5]

    def test_members_by_symbol(self):
        h = star3(4)
        for t, mem in h.hyperedges:
            assert [h.nodes[i][t] for i in mem] == [0, 1, 2]

    @settings(max_examples=30, deadline=None)
    @given(seqs=random_binary)
    def test_binary_reduces_to_graph(self, seqs):
        g = graph_from_sequences(seqs)
        h = hypergraph_from_sequences(seqs, 2)
        assert sorted((mem[0], mem[1], t) for t, mem in h.hyperedges) == sorted(g.edges)

    def test_json(self):
        h = star3(3)
        probs = peel_assign_multiclass(h, 1.5)
        doc = json.loads(h.to_json(probs))
        assert doc["m"] == 3 and len(doc["hyperedges"]) == 3
        assert doc["hyperedges"][0]["probabilities"][0] == pytest.approx(1 - 1 / 3)


class TestPeeling:
    def test_star_regrets(self):
        N = 5
        h = star3(N)
        r = hyper_node_regrets(h, peel_assign_multiclass(h, 1.5))
        center = h.nodes.index((0,) * N)
        assert r[center] == pytest.approx(-math.log(1 - 1 / N), abs=1e-12)
        leaves = np.delete(r, center)
        np.testing.assert_allclose(leaves, math.log(2 * N) / N, rtol=1e-12)
        assert leaves[0] == pytest.approx(0.46052, abs=1e-5)

    def test_default_mu(self):
        h = star3(5)
        a = peel_assign_multiclass(h)
        b = peel_assign_multiclass(h, 1.5)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)

    @pytest.mark.parametrize("N", [4, 6])
    def test_budgets_close(self, N):
        h = build_hypergraph(UniqueValuesClass(2, m=3), default_features(N))
        mu = hyper_degeneracy(h)
        probs = peel_assign_multiclass(h, mu)
        for p in probs:
            assert not np.any(np.isnan(p))
            assert p.sum() == pytest.approx(1.0, abs=1e-12)

    def test_invalid_mu(self):
        with pytest.raises(ValueError):
            peel_assign_multiclass(star3(5), 0.5)

    @pytest.mark.parametrize("kind,d,N", [("threshold", 1, 6), ("interval", 1, 5), ("unique-values", 2, 6)])
    def test_binary_matches_graph_peeling(self, kind, d, N):
        cls = make_class(kind, d)
        g = build_graph(cls, default_features(N))
        h = build_hypergraph(cls, default_features(N))
        for k in (2, 3):
            p = peel_assign(g, k)
            probs = peel_assign_multiclass(h, k + 0.5)
            by_edge = {(mem[0], mem[1], t): pr[0] for (t, mem), pr in zip(h.hyperedges, probs)}
            for e, (u, v, t) in enumerate(g.edges):
                assert by_edge[(u, v, t)] == pytest.approx(p[e], abs=1e-15)

    @pytest.mark.parametrize("N", [5, 10])
    def test_bound(self, N):
        h = star3(N)
        # center plus one leaf per hyperedge: 2N / (N + 1)
        mu = 2 * N / (N + 1)
        if h.n_nodes <= 16:
            assert max_avg_subgraph_degree(h).value == Fraction(2 * N, N + 1)
        r = hyper_node_regrets(h, peel_assign_multiclass(h, mu))
        assert r.max() <= multiclass_bound(mu, 3, N)


class TestAverageDegree:
    def test_empty(self):
        h = build_hypergraph(ExplicitClass([(0, 0), (1, 1)], m=3), (1, 2))
        assert max_avg_subgraph_degree(h) == (Fraction(0), True)

    def test_two_mark_star(self):
        h = star3(5)
        whole = Fraction(int(h.degrees().sum()), h.n_nodes)
        assert whole == Fraction(15, 11)
        best = max_avg_subgraph_degree(h)
        assert best.exact
        # the center plus one leaf per hyperedge beats the whole node set
        assert best.value == Fraction(5, 3)

    @pytest.mark.parametrize("N", [3, 4, 5])
    def test_binary_path_is_twice_density(self, N):
        cls = make_class("threshold", 1)
        g = build_graph(cls, default_features(N))
        h = build_hypergraph(cls, default_features(N))
        assert max_avg_subgraph_degree(h).value == 2 * densest_subgraph_bruteforce(g)

    def test_estimate_for_large(self):
        h = star3(10)
        est = max_avg_subgraph_degree(h)
        assert not est.exact
        assert est.value >= 5 / 3
