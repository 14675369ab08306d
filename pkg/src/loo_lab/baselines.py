"""Predictive normalized maximum likelihood learners and where they break.

Both learners try every label for the held-out example, score the completed
sequence with the best hypothesis in hindsight and normalize.  ``pnml``
scores with that hypothesis's conditional at the held-out point; ``pnml2``
with its likelihood of the whole sequence.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .core import Dataset, ReferenceClass, default_features, loo_regret
from .graph import UniqueValuesClass, build_graph, solve_equalizer_graph


class UndefinedGenieError(ValueError):
    """No candidate label gives the completed sequence positive likelihood."""


def _completions(cls: ReferenceClass, features: Sequence, others: Sequence[int], t: int):
    others = tuple(int(y) for y in others)
    if len(others) != len(features) - 1:
        raise ValueError("need exactly one label fewer than features")
    for y in range(cls.m):
        yield Dataset(tuple(features), others[:t] + (y,) + others[t:], cls.m)


def _normalize(scores: np.ndarray) -> np.ndarray:
    total = scores.sum()
    if not total > 0.0:
        raise UndefinedGenieError("every candidate label is unrealizable")
    return scores / total


def pnml_predict(cls: ReferenceClass, features: Sequence, others: Sequence[int], t: int | None = None) -> np.ndarray:
    """``q(y) ∝ p_theta_hat(y | x_t)`` with ``theta_hat`` fitted to the completed sequence.

    ``others`` are the labels of every index but ``t`` (default: the last).
    """
    t = len(features) - 1 if t is None else t
    scores = []
    for data in _completions(cls, features, others, t):
        if cls.reference_value(data) == -math.inf:
            scores.append(0.0)
        else:
            scores.append(cls.fitted_conditional(data, t))
    return _normalize(np.array(scores))


def pnml2_predict(cls: ReferenceClass, features: Sequence, others: Sequence[int], t: int | None = None) -> np.ndarray:
    """``q(y) ∝ max_theta p_theta(y^N | x^N)`` over completions of the labels."""
    t = len(features) - 1 if t is None else t
    logs = np.array([cls.reference_value(d) * d.N for d in _completions(cls, features, others, t)])
    if np.all(logs == -np.inf):
        raise UndefinedGenieError("every candidate label is unrealizable")
    return _normalize(np.exp(logs - logs.max()))


class PNMLPredictor:
    """``pnml_predict`` behind the generic predictor interface."""

    def __init__(self, cls: ReferenceClass):
        self.cls = cls

    def __call__(self, t, features, others):
        return pnml_predict(self.cls, features, others, t)


class PNML2Predictor(PNMLPredictor):
    def __call__(self, t, features, others):
        return pnml2_predict(self.cls, features, others, t)


def star_failure_demo(N: int) -> tuple[float, float, float]:
    """Regrets on the all-zero labels under the one-unique-value class.

    Returns ``(pnml, pnml2, equalizer)``: the first two stay at ``log 2``
    for every ``N`` while the min-max edge assignment's regret shrinks.
    """
    cls = UniqueValuesClass(1)
    features = default_features(N)
    data = Dataset(features, (0,) * N)
    g = build_graph(cls, features)
    eq = solve_equalizer_graph(g)
    return (
        loo_regret(PNMLPredictor(cls), cls, data),
        loo_regret(PNML2Predictor(cls), cls, data),
        loo_regret(g.predictor(eq.p), cls, data),
    )
