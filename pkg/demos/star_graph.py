"""
The star: one-inclusion graphs and peeling
==========================================

Hypotheses that label at most one point with a 1 give a star-shaped
one-inclusion graph: the all-zero labeling in the middle, one leaf per
position.  Its min-max regret decays like log(N) / N.
"""

import math

from loo_lab.core import default_features
from loo_lab.graph import (
    UniqueValuesClass,
    build_graph,
    certify_star_lower_bound,
    degeneracy,
    half_assign,
    make_class,
    max_node_regret,
    peel_assign,
    peel_bound,
    solve_equalizer_graph,
)

g = build_graph(UniqueValuesClass(1), default_features(5))
print("star, N=5: %d nodes, %d edges, degeneracy %d" % (g.n_nodes, len(g.edges), degeneracy(g)))

res = solve_equalizer_graph(g)
print("min-max regret  %.7f" % res.regret)
print("peeling (k=1)   %.7f   (ln5/5 = %.7f)" % (max_node_regret(g, peel_assign(g, 1)), math.log(5) / 5))
print("all halves      %.7f   (max degree * ln2 / N)" % max_node_regret(g, half_assign(g)))

# growth with N
for N in (5, 10, 20, 40):
    R = solve_equalizer_graph(build_graph(UniqueValuesClass(1), default_features(N))).regret
    print("N=%3d  R* = %.5f   N R* / ln N = %.3f" % (N, R, N * R / math.log(N)))

# a certified lower bound: R* > a ln(N) / N
for a in (0.8, 0.9):
    cert = certify_star_lower_bound(1, 5, a)
    print("a=%.1f: %s (implied %.5f vs assumed %.5f)" % (
        a, "certificate" if cert else "no certificate", cert.implied_regret, cert.threshold))

# peeling on a richer class
for N in (10, 20, 30):
    g = build_graph(make_class("unique-values", 2), default_features(N))
    k = degeneracy(g)
    print("2-unique-values N=%d: peel %.4f <= bound %.4f" % (N, max_node_regret(g, peel_assign(g, k)), peel_bound(k, N)))
