"""Pseudo-Boolean test functions, all minimized, all with optimum 0 at all-ones."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels

KINDS = ("onemax", "leadingones", "linear", "noisy-onemax")


def onemax(x: np.ndarray) -> np.ndarray:
    """``n - sum(x)``; works on one string or a batch (rows)."""
    x = np.asarray(x)
    if x.ndim == 2 and x.dtype == np.uint8:
        return x.shape[1] - _kernels.ones_rows(x)
    return x.shape[-1] - x.sum(axis=-1)


def leading_ones_prefix(x: np.ndarray) -> np.ndarray:
    """Length of the leading run of ones."""
    x = np.asarray(x)
    if x.ndim == 2 and x.dtype == np.uint8:
        return _kernels.leading_ones_rows(x)
    zero = x == 0
    return np.where(zero.any(axis=-1), zero.argmax(axis=-1), x.shape[-1])


def leadingones(x: np.ndarray) -> np.ndarray:
    """``n - sum_k prod_{j<=k} x_j``."""
    x = np.asarray(x)
    return x.shape[-1] - leading_ones_prefix(x)


def linear(x: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """``sum_k w_k (1 - x_k)``."""
    x = np.asarray(x)
    w = np.ascontiguousarray(weights, dtype=float)
    if x.ndim == 1:
        return _kernels.linear_rows(np.ascontiguousarray(x[None, :], dtype=np.uint8), w)[0]
    return _kernels.linear_rows(np.ascontiguousarray(x, dtype=np.uint8), w)


def load_weights(path) -> np.ndarray:
    """One positive weight per line; blank lines and ``#`` comments ignored."""
    w = np.loadtxt(Path(path), dtype=float, ndmin=1, comments="#")
    if w.ndim != 1:
        raise ValueError("weight file must have a single column")
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValueError("linear weights must be finite and positive")
    return w


@dataclass
class Objective:
    """A benchmark instance plus its evaluation counter.

    ``sigma`` only matters for ``noisy-onemax``; ``weights`` only for
    ``linear`` (default all ones).
    """

    kind: str
    n: int
    weights: np.ndarray | None = None
    sigma: float = 0.0
    evaluations: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown objective {self.kind!r}; expected one of {KINDS}")
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.kind == "linear":
            self.weights = np.ones(self.n) if self.weights is None else np.asarray(self.weights, dtype=float)
            if self.weights.shape != (self.n,):
                raise ValueError(f"need {self.n} linear weights, got {self.weights.shape}")
            if np.any(self.weights <= 0):
                raise ValueError("linear weights must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    @property
    def label(self) -> str:
        return self.kind

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.shape[-1] != self.n:
            raise ValueError(f"expected bit strings of length {self.n}, got {x.shape[-1]}")
        return x

    def evaluate_batch(self, x: np.ndarray, rng: np.random.Generator | None = None) -> np.ndarray:
        """Evaluate rows of ``x`` in order. Noise draws are taken in row order."""
        x = self._check(x)
        if x.ndim == 1:
            x = x[None, :]
        if self.kind == "onemax":
            f = onemax(x).astype(float)
        elif self.kind == "leadingones":
            f = leadingones(x).astype(float)
        elif self.kind == "linear":
            f = linear(x, self.weights)
        else:
            f = onemax(x).astype(float)
            if self.sigma > 0:
                if rng is None:
                    raise ValueError("noisy objective needs a random stream")
                f = f + self.sigma * rng.standard_normal(x.shape[0])
        self.evaluations += x.shape[0]
        return f

    def evaluate(self, x: np.ndarray, rng: np.random.Generator | None = None) -> float:
        x = self._check(x)
        if x.ndim != 1:
            raise ValueError("evaluate takes a single bit string")
        return float(self.evaluate_batch(x, rng)[0])

    def is_optimum(self, x: np.ndarray) -> bool | np.ndarray:
        """All-ones test on the noiseless structure; vectorized over rows."""
        x = self._check(x)
        return x.all(axis=-1)
