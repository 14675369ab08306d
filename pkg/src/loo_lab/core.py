"""Shared types, the leave-one-out regret functional and exhaustive min-max search.

All regrets are natural-log (nats) floats.  An infinite regret is ``math.inf``,
which propagates through ``max`` and compares above every finite value.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

import numpy as np

ENUMERATION_GUARD = 10**7
# relative slack used when comparing regrets for ties
TIE_RTOL = 1e-12

LN2 = math.log(2.0)


class CapacityError(ValueError):
    """An enumeration or problem size guard was exceeded."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap or lost its bracket."""


def to_bits(value: float) -> float:
    return value / LN2


@dataclass(frozen=True)
class Alphabet:
    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ValueError(f"alphabet size must be an integer >= 2, got {self.m}")

    def symbols(self) -> range:
        return range(self.m)


@dataclass(frozen=True)
class Dataset:
    """Features ``x^N`` paired with labels ``y^N`` over ``{0..m-1}``."""

    features: tuple
    labels: tuple
    m: int = 2

    def __post_init__(self):
        features = tuple(self.features)
        labels = tuple(int(y) for y in self.labels)
        if len(features) != len(labels):
            raise ValueError(
                f"feature/label length mismatch: {len(features)} != {len(labels)}"
            )
        if len(labels) < 2:
            raise ValueError("a dataset needs at least two examples")
        Alphabet(self.m)
        if any(y < 0 or y >= self.m for y in labels):
            raise ValueError(f"labels must lie in 0..{self.m - 1}")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    @property
    def N(self) -> int:
        return len(self.labels)

    def without(self, t: int) -> tuple:
        """Labels with index ``t`` removed."""
        return self.labels[:t] + self.labels[t + 1:]


def default_features(N: int) -> tuple:
    """Distinct, increasing features ``1/N, 2/N, ..., 1``."""
    return tuple((i + 1) / N for i in range(N))


class Predictor(Protocol):
    """A leave-one-out learner.

    Called with the held-out index, all features and the labels of every other
    example; returns a length-``m`` probability vector for the held-out label.
    """

    def __call__(self, t: int, features: Sequence, others: Sequence[int]) -> np.ndarray:
        ...


class ReferenceClass:
    """Hypothesis class used as the reference in the regret.

    Subclasses implement :meth:`reference_value`; deterministic classes also
    implement :meth:`realizable` and set ``deterministic = True``.
    """

    m: int = 2
    deterministic: bool = False

    def reference_value(self, data: Dataset) -> float:
        """``max_theta (1/N) sum_t log p_theta(y_t | x_t)``; ``-inf`` if no fit."""
        raise NotImplementedError

    def fitted_conditional(self, data: Dataset, t: int) -> float:
        """``p_theta_hat(y_t | x_t)`` at a likelihood maximizer ``theta_hat``."""
        raise NotImplementedError

    def realizable(self, features: Sequence) -> list[tuple]:
        """All realizable label sequences on ``features`` (deterministic only)."""
        raise NotImplementedError(f"{type(self).__name__} is not deterministic")


def check_distribution(q, m: int, atol: float = 1e-12) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (m,):
        raise ValueError(f"predictor returned shape {q.shape}, expected ({m},)")
    if np.any(q < -atol) or np.any(q > 1 + atol) or abs(q.sum() - 1.0) > atol:
        raise ValueError(f"predictor returned an invalid distribution {q}")
    return q


def loo_regret(predictor: Predictor, cls: ReferenceClass, data: Dataset) -> float:
    """Leave-one-out regret of ``predictor`` on ``data`` against ``cls``."""
    if data.m != cls.m:
        raise ValueError(f"dataset alphabet {data.m} != class alphabet {cls.m}")
    reference = cls.reference_value(data)
    if reference == -math.inf:
        return -math.inf
    loss = 0.0
    for t in range(data.N):
        q = check_distribution(predictor(t, data.features, data.without(t)), data.m)
        p = q[data.labels[t]]
        if p <= 0.0:
            return math.inf
        loss -= math.log(p)
    return reference + loss / data.N


def is_greater(a: float, b: float) -> bool:
    """``a > b`` beyond floating noise; infinities compare exactly."""
    if math.isinf(a) or math.isinf(b):
        return a > b
    return a > b + TIE_RTOL * max(1.0, abs(b))


def argmax_regret(scored: Iterable[tuple[tuple, float]]) -> tuple[float, tuple | None]:
    """Max over ``(sequence, regret)`` pairs given in increasing sequence order.

    A later sequence only wins if it is strictly larger beyond floating noise,
    so ties go to the lexicographically smallest sequence.
    """
    best, best_seq = -math.inf, None
    for seq, value in scored:
        if best_seq is None or is_greater(value, best):
            best, best_seq = value, seq
    return best, best_seq


def candidate_sequences(cls: ReferenceClass, features: Sequence) -> list[tuple]:
    N = len(features)
    if cls.deterministic:
        return sorted(cls.realizable(features))
    if cls.m**N > ENUMERATION_GUARD:
        raise CapacityError(f"{cls.m}^{N} label sequences exceed the guard {ENUMERATION_GUARD}")
    return list(itertools.product(range(cls.m), repeat=N))


def max_regret(
    predictor: Predictor, cls: ReferenceClass, features: Sequence
) -> tuple[float, tuple]:
    """Exact worst-case leave-one-out regret over admissible label sequences.

    Deterministic classes enumerate realizable sequences only; other classes
    enumerate all ``m^N`` sequences.  Returns ``(regret, argmax)`` with the
    argmax tie broken by the lexicographically smallest sequence.
    """
    features = tuple(features)
    seqs = candidate_sequences(cls, features)
    scored = (
        (seq, loo_regret(predictor, cls, Dataset(features, seq, cls.m))) for seq in seqs
    )
    return argmax_regret(scored)


def xlogx_ratio(count: int, total: int) -> float:
    """``(c/n) log(c/n)`` with the 0 log 0 = 0 convention."""
    if count == 0:
        return 0.0
    r = count / total
    return r * math.log(r)


def empirical_log_likelihood(labels: Sequence[int], m: int) -> float:
    """``sum_i n(i) log(n(i)/n)``, the maximized multinomial log-likelihood."""
    counts = np.bincount(np.asarray(labels, dtype=int), minlength=m)
    n = int(counts.sum())
    return sum(c * math.log(c / n) for c in counts if c > 0)


class MultinomialClass(ReferenceClass):
    """Featureless i.i.d. class over the ``m``-simplex."""

    deterministic = False

    def __init__(self, m: int):
        self.m = Alphabet(m).m

    def reference_value(self, data: Dataset) -> float:
        return empirical_log_likelihood(data.labels, self.m) / data.N

    def fitted_conditional(self, data: Dataset, t: int) -> float:
        return data.labels.count(data.labels[t]) / data.N
