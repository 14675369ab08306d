"""
Leave-one-out regret without features
=====================================

With no features the learner only sees the counts of the other N - 1
labels.  Adding one to every count makes the regret the same for every
label sequence, and that common value is the smallest achievable.
"""

import math

import numpy as np

from loo_lab.multinomial import (
    add_constant_learner,
    add_constant_regret_range,
    regret_spread,
    regret_table,
    shifted_empirical_learner,
    solve_equalizer,
)

# the smallest case: two symbols, two examples
q, R = solve_equalizer(2, 2)
print("N=2: R* = %.6f (ln 3/2 = %.6f), q(0 | one zero seen) = %.4f" % (R, math.log(1.5), q[(1, 0)][0]))

# every composition of N = 6 over 3 symbols gets the same regret under add-one
table = regret_table(add_constant_learner(3, 6, 1.0))
values = np.array(list(table.values()))
print("add-one, m=3, N=6: %d compositions, regret in [%.9f, %.9f]" % (len(values), values.min(), values.max()))

# the optimum scales like (m - 1) / N
for m in (2, 3, 5):
    N = 200
    hi, _ = add_constant_regret_range(m, N, 1.0)  # exact, via a max-plus recursion
    print("m=%d N=%d: N * R = %.4f" % (m, N, N * hi))

# a cruder learner only equalizes to first order
for N in (20, 40, 80):
    hi, lo = regret_spread(shifted_empirical_learner(2, N))
    print("shifted empirical, N=%d: max %.6f, spread * N^2 = %.3f" % (N, hi, (hi - lo) * N * N))
