"""Exact leave-one-out regret under log-loss, min-max learners and their bounds."""
__version__ = "0.1.0"

from .core import (
    Alphabet,
    CapacityError,
    ConvergenceError,
    Dataset,
    MultinomialClass,
    ReferenceClass,
    default_features,
    loo_regret,
    max_regret,
    to_bits,
)

__all__ = [
    "Alphabet",
    "CapacityError",
    "ConvergenceError",
    "Dataset",
    "MultinomialClass",
    "ReferenceClass",
    "default_features",
    "loo_regret",
    "max_regret",
    "to_bits",
]
