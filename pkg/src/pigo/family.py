"""Bernoulli family in expectation parameters.

``theta[k]`` is the probability that bit ``k`` is one. With this
parameterization the sufficient statistic is the bit string itself, the
natural gradient of the log-likelihood is ``x - theta`` and the Fisher
information is diagonal with entries ``1 / (theta_k (1 - theta_k))``.

Parameters are plain float64 arrays; bit strings are uint8/bool arrays of
the same length (or 2-D arrays with one sample per row).
"""

from __future__ import annotations

from typing import Protocol

import numpy as np


class ExponentialFamily(Protocol):
    """What the optimizer needs from a search distribution."""

    n: int

    def init(self) -> np.ndarray: ...

    def sample(self, theta: np.ndarray, lam: int, rng: np.random.Generator) -> np.ndarray: ...

    def sufficient_stats(self, x: np.ndarray) -> np.ndarray: ...

    def nat_grad_loglik(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray: ...

    def fisher_sqrt_diag(self, theta: np.ndarray) -> np.ndarray: ...

    def project(self, theta: np.ndarray) -> np.ndarray: ...


def _check_dim(n: int) -> None:
    if n < 2:
        raise ValueError(f"dimension must be >= 2 (projection interval is empty for n={n})")


def init_uniform(n: int) -> np.ndarray:
    _check_dim(n)
    return np.full(n, 0.5)


def sample(theta: np.ndarray, lam: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``lam`` independent bit strings, shape ``(lam, n)``.

    Consumes exactly ``lam * n`` uniforms: sample 0 bits 0..n-1 first, then
    sample 1, and so on.
    """
    if lam < 1:
        raise ValueError("lam must be >= 1")
    return (rng.random((lam, theta.shape[0])) < theta).view(np.uint8)


def project(theta_raw: np.ndarray, n: int | None = None) -> np.ndarray:
    """Clamp every component to ``[1/n, 1 - 1/n]``."""
    theta_raw = np.asarray(theta_raw, dtype=float)
    if n is None:
        n = theta_raw.shape[-1]
    elif theta_raw.shape[-1] != n:
        raise ValueError(f"expected length {n}, got {theta_raw.shape[-1]}")
    _check_dim(n)
    return np.clip(theta_raw, 1.0 / n, 1.0 - 1.0 / n)


def nat_grad_loglik(theta: np.ndarray, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.shape[-1] != theta.shape[0]:
        raise ValueError("dimension mismatch between theta and x")
    return x - theta


def fisher_sqrt_diag(theta: np.ndarray) -> np.ndarray:
    """Elementwise ``(theta_k (1 - theta_k)) ** -0.5``."""
    theta = np.asarray(theta, dtype=float)
    if np.any((theta <= 0.0) | (theta >= 1.0)):
        raise ValueError("Fisher metric is singular for components outside (0, 1)")
    return 1.0 / np.sqrt(theta * (1.0 - theta))


def entropy(theta: np.ndarray) -> float:
    """Mean per-bit Bernoulli entropy in nats."""
    t = np.clip(theta, 1e-300, 1.0)
    u = np.clip(1.0 - theta, 1e-300, 1.0)
    return float(np.mean(-(theta * np.log(t) + (1.0 - theta) * np.log(u))))


class Bernoulli:
    """The Bernoulli family bound to a dimension."""

    def __init__(self, n: int):
        _check_dim(n)
        self.n = n

    def init(self) -> np.ndarray:
        return init_uniform(self.n)

    def sample(self, theta, lam, rng):
        return sample(theta, lam, rng)

    def sufficient_stats(self, x):
        return np.asarray(x, dtype=float)

    def nat_grad_loglik(self, theta, x):
        return nat_grad_loglik(theta, x)

    def fisher_sqrt_diag(self, theta):
        return fisher_sqrt_diag(theta)

    def project(self, theta):
        return project(theta, self.n)

    def __repr__(self):
        return f"Bernoulli(n={self.n})"
