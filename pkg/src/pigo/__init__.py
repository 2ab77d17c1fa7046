"""Parameterless stochastic natural gradient optimization over bit strings."""

from .core import (
    ADAPT_EPSILON,
    ADAPT_LAMBDA,
    FIXED,
    OptimizerState,
    new_baseline,
    new_parameterless,
)
from .rng import derive_seed, stream

__all__ = [
    "ADAPT_EPSILON",
    "ADAPT_LAMBDA",
    "FIXED",
    "OptimizerState",
    "derive_seed",
    "new_baseline",
    "new_parameterless",
    "stream",
]
