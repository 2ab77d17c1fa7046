"""Parameterless IGO over Bernoulli distributions as an ask/tell optimizer.

Three modes share one update rule:

* ``ADAPT_LAMBDA`` (PBIL-lambda): step size fixed, sample size adapted so
  that the signal-to-noise ratio of the time-averaged natural gradient
  stays near ``alpha``.
* ``ADAPT_EPSILON`` (PBIL-epsilon): sample size pinned at ``lambda_min``;
  the same statistic shrinks the step size instead.
* ``FIXED``: classic baselines (cGA, UMDA, PBIL), no adaptation.

Usage::

    opt = new_parameterless(100, ADAPT_LAMBDA)
    rng = stream(seed)
    while not done:
        x = opt.ask(rng)
        opt.tell(x, [f(xi) for xi in x])
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import _kernels, family, preference

ADAPT_LAMBDA = "adapt_lambda"
ADAPT_EPSILON = "adapt_epsilon"
FIXED = "fixed"
MODES = (ADAPT_LAMBDA, ADAPT_EPSILON, FIXED)

BASELINES = ("cga", "umda", "pbil")

_ERRORS = {
    _kernels.BAD_VALUE: "utilities must be finite",
    _kernels.NEGATIVE: "utilities must be nonnegative",
    _kernels.ALL_ZERO: "utilities must not be all zero",
}


def round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def snr_normalizer_fixed_point(beta: float) -> float:
    """Limit of ``gamma <- (1-beta)^2 gamma + beta (2-beta)``; always 1."""
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    return beta * (2.0 - beta) / (1.0 - (1.0 - beta) ** 2)


@dataclass
class OptimizerState:
    n: int
    theta: np.ndarray
    s: np.ndarray
    gamma: float
    lambda_r: float
    lam: int
    epsilon: float
    beta: float
    mode: str
    alpha: float
    lambda_min: int
    lambda_max: int | None  # None means unbounded
    base_epsilon: float  # step size before any epsilon adaptation
    utility: str = "ranking"  # ranking | truncation | bounded
    centered: bool = True  # subtract the mean utility (baseline) before the step
    mu: int | None = None  # truncation size for UMDA / PBIL baselines
    kind: str = "pbil-lambda"
    minimize: bool = True
    fisher_post_update: bool = False  # metric at the pre-update theta
    unit_mean: bool = True  # table weights count as mean 1: step scales with the table mean
    iteration: int = 0
    f_calls: int = 0
    skipped: int = 0

    # ------------------------------------------------------------------ ask
    def ask(self, rng: np.random.Generator) -> np.ndarray:
        """Sample ``self.lam`` bit strings, shape ``(lam, n)``."""
        return family.sample(self.theta, self.lam, rng)

    # ----------------------------------------------------------------- tell
    def utilities_for(self, f_values) -> preference.UtilityBatch:
        if self.utility == "ranking":
            return preference.ranking_utilities(f_values, self.minimize)
        if self.utility == "truncation":
            return preference.truncation_utilities(f_values, self.mu, self.minimize)
        if self.utility == "bounded":
            return preference.bounded_utilities(f_values)
        raise ValueError(f"unknown utility scheme {self.utility!r}")

    def tell(self, samples, f_values) -> "OptimizerState":
        f = np.asarray(f_values, dtype=float)
        if f.ndim != 1 or np.ndim(samples) != 2 or len(samples) != f.shape[0]:
            raise ValueError("need one objective value per sample")
        if self.utility == "ranking" and f.shape[0] >= 2:
            if not np.isfinite(f).all():
                raise ValueError("f_values must be finite")
            u = _kernels.rank_assign(f if self.minimize else -f, preference.ranking_weights(f.shape[0]))
        else:
            u = self.utilities_for(f).utilities
        return self.tell_utilities(samples, u)

    def tell_utilities(self, samples, utilities) -> "OptimizerState":
        """Update from raw utilities (higher is better, nonnegative, not all 0).

        The step only depends on utilities through ``u / mean(u)``, so
        rescaling all utilities by a positive constant leaves the whole
        trajectory unchanged. A batch with all-equal utilities changes
        nothing but the counters.
        """
        x = np.asarray(samples)
        u = np.asarray(utilities, dtype=float)
        lam = u.shape[0]
        if u.ndim != 1 or x.shape != (lam, self.n):
            raise ValueError(f"samples must have shape ({lam}, {self.n}), got {x.shape}")
        status, theta, s, gamma, lambda_r = _kernels.igo_step(
            self.theta,
            self.s,
            x,
            u,
            self.epsilon,
            self.beta,
            self.centered,
            self.mode != FIXED,
            self.fisher_post_update,
            self.gamma,
            self.lambda_r,
            self.alpha,
            float(self.lambda_min),
            math.inf if self.lambda_max is None else float(self.lambda_max),
            self.step_gain(lam),
        )
        if status >= _kernels.BAD_VALUE:
            raise ValueError(_ERRORS[status])
        self.iteration += 1
        self.f_calls += lam
        if status == _kernels.SKIPPED:
            self.skipped += 1
            return self
        self.theta = theta
        if self.mode == FIXED:
            return self
        self.s, self.gamma, self.lambda_r = s, gamma, lambda_r
        if self.mode == ADAPT_LAMBDA:
            self.lam = round_half_away(lambda_r)
        else:
            self.lam = self.lambda_min
            self.epsilon = self.beta = self.base_epsilon / (lambda_r / self.lambda_min)
        return self

    def step_gain(self, lam: int) -> float:
        """Multiplier on ``epsilon`` for a batch of ``lam`` samples.

        With ``unit_mean`` the nominal weight table is treated as having mean
        one, so the step grows by the table's actual mean (``lam / mu`` for
        rank weights, 1 for truncation). It depends on ``lam`` only, never on
        the utilities passed in.
        """
        if not self.unit_mean or self.utility != "ranking" or lam < 2:
            return 1.0
        return float(preference.ranking_weights(lam).sum() / lam)

    # ------------------------------------------------------- serialization
    def snr_surrogate(self) -> float:
        """``||s||^2 / gamma`` (nan before the first update)."""
        return float(self.s @ self.s) / self.gamma if self.gamma > 0 else math.nan

    def to_dict(self) -> dict:
        d = asdict(self)
        d["theta"] = self.theta.tolist()
        d["s"] = self.s.tolist()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizerState":
        d = dict(d)
        d["theta"] = np.asarray(d["theta"], dtype=float)
        d["s"] = np.asarray(d["s"], dtype=float)
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "OptimizerState":
        return cls.from_dict(json.loads(text))


def new_parameterless(
    n: int,
    mode: str = ADAPT_LAMBDA,
    alpha: float = 1.5,
    epsilon: float | None = None,
    lambda_min: int = 2,
    lambda_max: int | None | str = "n",
    utility: str = "ranking",
    fisher_post_update: bool = False,
    unit_mean: bool = True,
) -> OptimizerState:
    """Parameterless IGO with the default strategy parameters.

    ``epsilon`` (and ``beta``, which always equals it) defaults to
    ``n ** -0.5``. ``lambda_max="n"`` means ``lambda_max = n``; pass None
    for no upper bound.
    """
    if mode not in (ADAPT_LAMBDA, ADAPT_EPSILON):
        raise ValueError(f"mode must be {ADAPT_LAMBDA!r} or {ADAPT_EPSILON!r}, got {mode!r}")
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    if lambda_min < 2:
        raise ValueError("lambda_min must be >= 2 (the utility variance needs two samples)")
    theta = family.init_uniform(n)
    eps = n ** -0.5 if epsilon is None else float(epsilon)
    if not 0.0 < eps <= 1.0:
        raise ValueError("epsilon must lie in (0, 1]")
    if lambda_max == "n":
        lambda_max = n
    if lambda_max is not None and lambda_max < lambda_min:
        raise ValueError("lambda_max must be >= lambda_min")
    return OptimizerState(
        n=n,
        theta=theta,
        s=np.zeros(n),
        gamma=0.0,
        lambda_r=float(lambda_min),
        lam=lambda_min,
        epsilon=eps,
        beta=eps,
        mode=mode,
        alpha=float(alpha),
        lambda_min=lambda_min,
        lambda_max=lambda_max,
        base_epsilon=eps,
        utility=utility,
        kind="pbil-lambda" if mode == ADAPT_LAMBDA else "pbil-eps",
        fisher_post_update=fisher_post_update,
        unit_mean=unit_mean,
    )


def default_baseline_lambda(n: int) -> int:
    return 4 * math.ceil(math.sqrt(n))


def new_baseline(
    kind: str,
    n: int,
    lam: int | None = None,
    epsilon: float | None = None,
    mu: int | None = None,
) -> OptimizerState:
    """Fixed-parameter baselines.

    * ``cga``: two samples, rank weights, default step ``1/n``; the update
      is ``theta += epsilon * (x_better - x_worse)``.
    * ``umda``: step 1, the ``mu`` best of ``lam`` samples (default
      ``lam // 2``) with equal weight, no baseline subtraction, so the new
      ``theta`` is their bit frequency (before projection).
    * ``pbil``: as UMDA but with a step ``epsilon < 1`` (default ``n ** -0.5``).
    """
    theta = family.init_uniform(n)
    kind = kind.lower()
    if kind == "cga":
        if lam is not None and lam != 2:
            raise ValueError("cGA samples exactly 2 points")
        if mu is not None:
            raise ValueError("cGA does not take mu")
        lam = 2
        eps = 1.0 / n if epsilon is None else float(epsilon)
        utility, centered = "ranking", True
    elif kind in ("umda", "pbil"):
        if lam is None:
            lam = default_baseline_lambda(n)
        if lam < 2:
            raise ValueError(f"{kind} needs lam >= 2")
        if kind == "umda":
            if epsilon is not None and epsilon != 1.0:
                raise ValueError("UMDA uses epsilon = 1")
            eps = 1.0
        else:
            eps = n ** -0.5 if epsilon is None else float(epsilon)
            if not 0.0 < eps < 1.0:
                raise ValueError("PBIL needs 0 < epsilon < 1")
        mu = max(1, lam // 2) if mu is None else int(mu)
        if not 1 <= mu <= lam:
            raise ValueError("need 1 <= mu <= lam")
        utility, centered = "truncation", False
    else:
        raise ValueError(f"unknown baseline {kind!r}; expected one of {BASELINES}")
    if not 0.0 < eps <= 1.0:
        raise ValueError("epsilon must lie in (0, 1]")
    return OptimizerState(
        n=n,
        theta=theta,
        s=np.zeros(n),
        gamma=0.0,
        lambda_r=float(lam),
        lam=lam,
        epsilon=eps,
        beta=eps,
        mode=FIXED,
        alpha=1.5,
        lambda_min=lam,
        lambda_max=lam,
        base_epsilon=eps,
        utility=utility,
        centered=centered,
        mu=mu,
        kind=kind,
    )


def natural_gradient_estimate(theta: np.ndarray, samples, utilities) -> np.ndarray:
    """``(1/lam) sum_i (w_i - mean(w)) (x_i - theta)``.

    ``utilities`` may be a UtilityBatch or a plain vector.
    """
    if isinstance(utilities, preference.UtilityBatch):
        w, m = utilities.utilities, utilities.mean_w
    else:
        w = np.asarray(utilities, dtype=float)
        m = float(np.mean(w))
    x = np.asarray(samples)
    if x.shape[0] != w.shape[0]:
        raise ValueError("need one utility per sample")
    return ((w - m) @ (x - theta)) / w.shape[0]
