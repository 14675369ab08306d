"""
Mixtures of partition experts
=============================

Each threshold splits the points into two groups; an expert predicts with
Laplace counts inside its group.  The mixture weights experts by how well
they predicted the earlier points.  Sequentially, the mixture loses at
most ln K to the best expert.  Scored leave-one-out, the worst case can
exceed the (ln K + m) / N level.
"""

import math

import numpy as np

from loo_lab.core import Dataset, default_features
from loo_lab.experts import (
    ThresholdPartitions,
    enumerate_partitions,
    max_class_regret,
    sequential_losses,
    mixture_bound,
)

family = ThresholdPartitions()

# sequential loss: mixture vs best expert
rng = np.random.default_rng(0)
data = Dataset(default_features(8), rng.integers(0, 2, size=8))
mix, experts = sequential_losses(family, data)
print("labels", data.labels)
print("mixture %.4f <= best expert %.4f + ln K %.4f" % (mix, experts.min(), math.log(len(experts))))

# exhaustive worst case of the leave-one-out regret
for N in (6, 8, 10):
    K = len(enumerate_partitions(family, default_features(N)))
    R, worst = max_class_regret(family, default_features(N))
    print("N=%2d K=%2d  worst %.5f at %s, (ln K + 2)/N = %.5f" % (
        N, K, R, "".join(map(str, worst)), mixture_bound(K, 2, N)))
