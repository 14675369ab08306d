"""
When normalized maximum likelihood gets stuck
=============================================

On the star class and the all-zero labels, both predictive NML learners
hedge 50/50 at every held-out point, so their regret is ln 2 no matter how
much data there is.  The equalizer learner's regret keeps shrinking.
"""

from loo_lab.baselines import star_failure_demo

print("   N      pNML     pNML-2   equalizer")
for N in (2, 5, 10, 20, 50):
    a, b, c = star_failure_demo(N)
    print("%4d  %8.6f  %8.6f  %8.6f" % (N, a, b, c))
