"""Two-group partition classes learned by an exponentially weighted mixture of Laplace experts.

Every distinct split of the (distinct) features into groups 0/1 is one
expert.  At a held-out index an expert predicts with Laplace's rule on the
other labels of the same group; the experts are mixed with weights given by
their sequential log-loss on the examples that precede the held-out one in
increasing feature order.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .core import Alphabet, Dataset, ReferenceClass, argmax_regret


def _check_distinct(features: Sequence) -> None:
    if len(set(features)) != len(features):
        raise ValueError("features must be pairwise distinct")


class PartitionFamily:
    """Maps a feature sequence to the list of 0/1 group assignments it admits."""

    vc_dim: int | None = None

    def partitions(self, features: Sequence) -> list[tuple]:
        raise NotImplementedError


class ThresholdPartitions(PartitionFamily):
    """Group 1 iff ``x > theta``."""

    vc_dim = 1

    def partitions(self, features):
        cuts = sorted(features)
        thetas = [cuts[0] - 1] + cuts
        return [tuple(int(x > th) for x in features) for th in thetas]


class ExplicitPartitions(PartitionFamily):
    """A fixed list of membership strings, one group bit per position."""

    def __init__(self, members):
        self.members = [tuple(int(c) for c in s) for s in members]
        if any(c not in (0, 1) for s in self.members for c in s):
            raise ValueError("partition memberships must be 0/1")

    @classmethod
    def from_text(cls, text: str) -> "ExplicitPartitions":
        lines = [ln.strip() for ln in text.splitlines()]
        return cls([ln for ln in lines if ln and not ln.startswith("#")])

    def partitions(self, features):
        if any(len(s) != len(features) for s in self.members):
            raise ValueError("membership strings must match the feature length")
        return list(self.members)


def enumerate_partitions(family: PartitionFamily, features: Sequence) -> list[tuple]:
    """Distinct projections of ``family`` onto ``features``, in first-seen order."""
    _check_distinct(features)
    return list(dict.fromkeys(family.partitions(features)))


def vc_dimension(partitions: Sequence[tuple]) -> int:
    """Largest shattered index set of a finite list of 0/1 patterns (brute force)."""
    pats = np.asarray(partitions, dtype=np.int8)
    if pats.size == 0:
        return 0
    n = pats.shape[1]
    best = 0
    for size in range(1, n + 1):
        if 2**size > len(pats):
            break
        if any(len({tuple(row) for row in pats[:, list(c)]}) == 2**size
               for c in itertools.combinations(range(n), size)):
            best = size
        else:
            break
    return best


def sauer_shelah_bound(N: int, d: int) -> float:
    """``(e N / d)^d``."""
    return (math.e * N / d) ** d if d > 0 else 1.0


@dataclass
class ExpertState:
    """Symbol counts of each group over some index subset; shape ``(2, m)``."""

    counts: np.ndarray

    @classmethod
    def from_labels(cls, groups: Sequence[int], labels: Sequence[int], m: int, indices=None):
        counts = np.zeros((2, m), dtype=int)
        idx = range(len(labels)) if indices is None else indices
        for i in idx:
            counts[groups[i], labels[i]] += 1
        return cls(counts)

    def totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)


def laplace_predict(state: ExpertState, group: int, m: int) -> np.ndarray:
    """``(n_j(i) + 1) / (N_j + m)`` for group ``j``."""
    n = np.asarray(state.counts[group], dtype=float)
    return (n + 1.0) / (n.sum() + m)


@dataclass
class _Tables:
    loo: np.ndarray        # (K, N, m) leave-one-out Laplace predictions
    seq: np.ndarray        # (K, N) sequential prediction of y at each index
    log_w: np.ndarray      # (K, N) normalized log weights for each test index
    order: np.ndarray      # indices sorted by feature


def _tables(P: np.ndarray, labels: np.ndarray, m: int, order: np.ndarray) -> _Tables:
    K, N = P.shape
    onehot = np.eye(m)[labels]                               # (N, m)
    in1 = P.astype(float)                                    # (K, N)
    c1 = in1 @ onehot                                        # (K, m) counts in group 1
    c0 = (1 - in1) @ onehot
    own = np.where(P[:, :, None] == 1, c1[:, None, :], c0[:, None, :]) - onehot[None]
    loo = (own + 1.0) / (own.sum(axis=2, keepdims=True) + m)

    seq = np.empty((K, N))
    running = np.zeros((K, 2, m))
    rows = np.arange(K)
    for t in order:
        g = P[:, t]
        n = running[rows, g]                                 # (K, m)
        seq[:, t] = (n[:, labels[t]] + 1.0) / (n.sum(axis=1) + m)
        running[rows, g, labels[t]] += 1

    log_seq = np.log(seq[:, order])
    before = np.concatenate([np.zeros((K, 1)), np.cumsum(log_seq, axis=1)[:, :-1]], axis=1)
    log_w = np.empty((K, N))
    log_w[:, order] = before - logsumexp(before, axis=0, keepdims=True)
    return _Tables(loo, seq, log_w, order)


def _prepare(family: PartitionFamily, data: Dataset):
    parts = enumerate_partitions(family, data.features)
    P = np.asarray(parts, dtype=int)
    order = np.argsort(np.asarray(data.features), kind="stable")
    return P, np.asarray(data.labels, dtype=int), order


def mixture_weights(family: PartitionFamily, data: Dataset, t: int) -> np.ndarray:
    """Expert weights used when index ``t`` is held out."""
    P, labels, order = _prepare(family, data)
    return np.exp(_tables(P, labels, data.m, order).log_w[:, t])


def mixture_distributions(family: PartitionFamily, data: Dataset) -> np.ndarray:
    """``(N, m)`` mixture predictions, row ``t`` computed without ``y_t``."""
    P, labels, order = _prepare(family, data)
    tab = _tables(P, labels, data.m, order)
    return np.einsum("kn,knm->nm", np.exp(tab.log_w), tab.loo)


def mixture_predict(family: PartitionFamily, data: Dataset, t: int) -> np.ndarray:
    """Mixture prediction for the held-out index ``t``.

    ``data.labels[t]`` is never read: the experts' leave-one-out counts drop
    it and the weights use only examples earlier in feature order.
    """
    return mixture_distributions(family, data)[t]


def sequential_losses(family: PartitionFamily, data: Dataset) -> tuple[float, np.ndarray]:
    """Cumulative log-loss of the sequential mixture and of every expert.

    Both run over the examples in increasing feature order, each expert
    predicting with Laplace's rule on the preceding examples only.
    """
    P, labels, order = _prepare(family, data)
    tab = _tables(P, labels, data.m, order)
    log_mix = logsumexp(tab.log_w + np.log(tab.seq), axis=0)
    return float(-log_mix.sum()), -np.log(tab.seq).sum(axis=1)


def best_partition_log_likelihood(P: np.ndarray, labels: np.ndarray, m: int) -> np.ndarray:
    """Per partition, ``sum_j sum_i n_j(i) log(n_j(i)/N_j)``."""
    onehot = np.eye(m)[labels]
    out = np.zeros(len(P))
    for grp in (0, 1):
        counts = (P == grp).astype(float) @ onehot           # (K, m)
        tot = counts.sum(axis=1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(counts > 0, counts * np.log(counts / tot), 0.0)
        out += terms.sum(axis=1)
    return out


def class_loo_regret(family: PartitionFamily, data: Dataset, m: int | None = None) -> float:
    """Leave-one-out regret of the mixture against the partition class."""
    m = data.m if m is None else m
    P, labels, order = _prepare(family, data)
    reference = best_partition_log_likelihood(P, labels, m).max() / data.N
    q = mixture_distributions(family, data)
    return float(reference - np.log(q[np.arange(data.N), labels]).mean())


def mixture_bound(K: int, m: int, N: int) -> float:
    """``(log K + m) / N``: mixture overhead plus the per-group Laplace regret."""
    return (math.log(K) + m) / N


class PartitionClass(ReferenceClass):
    """Reference class: a partition from ``family`` and a free distribution per group."""

    deterministic = False

    def __init__(self, family: PartitionFamily, m: int = 2):
        self.family = family
        self.m = Alphabet(m).m

    def reference_value(self, data: Dataset) -> float:
        P, labels, _ = _prepare(self.family, data)
        return float(best_partition_log_likelihood(P, labels, self.m).max() / data.N)

    def fitted_conditional(self, data: Dataset, t: int) -> float:
        P, labels, _ = _prepare(self.family, data)
        best = P[int(np.argmax(best_partition_log_likelihood(P, labels, self.m)))]
        same = labels[best == best[t]]
        return float(np.mean(same == labels[t]))


class MixturePredictor:
    """The mixture learner behind the generic leave-one-out predictor interface."""

    def __init__(self, family: PartitionFamily, m: int = 2):
        self.family = family
        self.m = m

    def __call__(self, t, features, others):
        labels = tuple(others[:t]) + (0,) + tuple(others[t:])
        return mixture_predict(self.family, Dataset(features, labels, self.m), t)


def max_class_regret(family: PartitionFamily, features: Sequence, m: int = 2) -> tuple[float, tuple]:
    """Worst-case mixture regret over all ``m^N`` label sequences."""
    seqs = itertools.product(range(m), repeat=len(features))
    return argmax_regret((y, class_loo_regret(family, Dataset(features, y, m))) for y in seqs)
