"""Objective values -> utilities (preference values).

The default scheme is rank based: with ``mu = ceil(lam / 4)`` the best
``mu`` samples get ``2 lam / mu``, the worst ``mu`` get 0 and the middle
band gets ``lam / mu``. Tied objective values share the average of the
weights their rank positions would receive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels


@dataclass(frozen=True)
class UtilityBatch:
    utilities: np.ndarray  # one per sample, in the original sample order
    mean_w: float
    var_w: float  # population variance

    @classmethod
    def from_utilities(cls, utilities) -> "UtilityBatch":
        u = np.asarray(utilities, dtype=float)
        m = float(np.mean(u))
        return cls(u, m, float(np.mean((u - m) ** 2)))

    def centered(self) -> np.ndarray:
        return self.utilities - self.mean_w


@lru_cache(maxsize=None)
def ranking_weights(lam: int) -> np.ndarray:
    """Weight of the i-th best sample, i = 0..lam-1 (read-only)."""
    if lam < 2:
        raise ValueError("ranking weights need lam >= 2")
    mu = math.ceil(lam / 4)
    w = np.full(lam, lam / mu)
    w[:mu] = 2 * lam / mu
    w[lam - mu:] = 0.0
    w.flags.writeable = False
    return w


@lru_cache(maxsize=None)
def truncation_weights(lam: int, mu: int) -> np.ndarray:
    """``lam / mu`` for the ``mu`` best samples, 0 otherwise (UMDA / PBIL)."""
    if not 1 <= mu <= lam:
        raise ValueError(f"need 1 <= mu <= lam, got mu={mu}, lam={lam}")
    w = np.zeros(lam)
    w[:mu] = lam / mu
    w.flags.writeable = False
    return w


def _check_values(f_values) -> np.ndarray:
    f = np.asarray(f_values, dtype=float)
    if f.ndim != 1:
        raise ValueError("f_values must be one-dimensional")
    if not np.all(np.isfinite(f)):
        raise ValueError("f_values must be finite")
    return f


def assign_by_rank(f_values, weights: np.ndarray, minimize: bool = True) -> np.ndarray:
    """Give the i-th best value ``weights[i]``, averaging over ties.

    Ranking is a stable sort on (value, index); ties are exact equality.
    """
    f = _check_values(f_values)
    lam = f.shape[0]
    if weights.shape[0] != lam:
        raise ValueError("weight table length does not match number of values")
    return _kernels.rank_assign(f if minimize else -f, np.ascontiguousarray(weights, dtype=float))


def ranking_utilities(f_values, minimize: bool = True) -> UtilityBatch:
    f = _check_values(f_values)
    if f.shape[0] < 2:
        raise ValueError("ranking utilities need at least 2 values")
    return UtilityBatch.from_utilities(assign_by_rank(f, ranking_weights(f.shape[0]), minimize))


def truncation_utilities(f_values, mu: int, minimize: bool = True) -> UtilityBatch:
    f = _check_values(f_values)
    return UtilityBatch.from_utilities(assign_by_rank(f, truncation_weights(f.shape[0], mu), minimize))


def bounded_utilities(f_values) -> UtilityBatch:
    """``exp(-f)``; bounded and positive, suitable for minimization."""
    return UtilityBatch.from_utilities(np.exp(-_check_values(f_values)))
