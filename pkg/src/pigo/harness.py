"""Seeded first-hitting-time experiments.

A trial runs one optimizer on one objective until the all-ones string is
sampled or the f-call budget is spent. Suites sweep algorithms x objectives
x dimensions x trials; each trial's seed is derived from the base seed and
the trial's coordinates, so results do not depend on the worker count or
on which trials run together.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import product
from pathlib import Path

import numpy as np

from . import _kernels, core, rng as rng_mod
from .benchmarks import Objective, load_weights

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 10_000_000
DEFAULT_NS = (10, 30, 100, 300, 1000, 3000)
ALGORITHMS = ("pbil-lambda", "pbil-eps", "cga", "umda", "pbil")
CSV_COLUMNS = (
    "algorithm",
    "objective",
    "n",
    "seed",
    "hitting_time",
    "exhausted",
    "budget",
    "median_lambda",
    "mean_epsilon",
)


def resolve_epsilon(value, n: int) -> float | None:
    """``default`` -> None (let the algorithm decide), ``inv-n`` -> 1/n,
    ``inv-sqrt-n`` -> n**-0.5, anything else is parsed as a number."""
    if value is None or value == "default":
        return None
    if value == "inv-n":
        return 1.0 / n
    if value == "inv-sqrt-n":
        return n ** -0.5
    return float(value)


@dataclass(frozen=True)
class AlgoConfig:
    name: str
    alpha: float = 1.5
    epsilon: str | float = "default"
    lam: int | None = None
    mu: int | None = None

    def __post_init__(self):
        if self.name not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.name!r}; expected one of {ALGORITHMS}")

    @property
    def label(self) -> str:
        parts = []
        if self.name in ("pbil-lambda", "pbil-eps") and self.alpha != 1.5:
            parts.append(f"alpha={self.alpha:g}")
        if self.epsilon != "default":
            parts.append(f"eps={self.epsilon}")
        if self.lam is not None:
            parts.append(f"lam={self.lam}")
        if self.mu is not None:
            parts.append(f"mu={self.mu}")
        return self.name + (f"({','.join(parts)})" if parts else "")

    def build(self, n: int) -> core.OptimizerState:
        eps = resolve_epsilon(self.epsilon, n)
        if self.name == "pbil-lambda":
            return core.new_parameterless(n, core.ADAPT_LAMBDA, alpha=self.alpha, epsilon=eps)
        if self.name == "pbil-eps":
            return core.new_parameterless(n, core.ADAPT_EPSILON, alpha=self.alpha, epsilon=eps)
        return core.new_baseline(self.name, n, lam=self.lam, epsilon=eps, mu=self.mu)


@dataclass(frozen=True)
class ObjectiveConfig:
    kind: str
    sigma: float = 0.0
    weights_path: str | None = None

    @property
    def label(self) -> str:
        if self.kind == "noisy-onemax":
            return f"noisy-onemax(sigma={self.sigma:g})"
        return self.kind

    def build(self, n: int) -> Objective:
        weights = load_weights(self.weights_path) if self.weights_path else None
        return Objective(self.kind, n, weights=weights, sigma=self.sigma)


@dataclass
class TrialRecord:
    seed: int
    n: int
    algorithm: str
    objective: str
    hitting_time: int | None  # None when the budget ran out
    budget: int
    f_calls: int
    iterations: int
    median_lambda: float
    mean_epsilon: float
    final_theta_summary: dict
    lambda_trajectory: list = field(default_factory=list)  # [iteration, lam, epsilon]
    error: str | None = None

    @property
    def exhausted(self) -> bool:
        return self.hitting_time is None

    @property
    def censored_time(self) -> int:
        return self.budget if self.hitting_time is None else self.hitting_time

    def csv_row(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "objective": self.objective,
            "n": self.n,
            "seed": self.seed,
            "hitting_time": self.censored_time,
            "exhausted": str(self.exhausted).lower(),
            "budget": self.budget,
            "median_lambda": f"{self.median_lambda:g}",
            "mean_epsilon": f"{self.mean_epsilon:.6g}",
        }

    def to_dict(self) -> dict:
        d = asdict(self)
        d["exhausted"] = self.exhausted
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrialRecord":
        d = {k: v for k, v in d.items() if k != "exhausted"}
        return cls(**d)


def thinning_stride(n: int) -> int:
    return 1 if n <= 200 else 10


_OBJ_CODES = {
    "onemax": _kernels.ONEMAX,
    "leadingones": _kernels.LEADINGONES,
    "linear": _kernels.LINEAR,
    "noisy-onemax": _kernels.NOISY_ONEMAX,
}
_MODE_CODES = {core.ADAPT_LAMBDA: _kernels.M_LAMBDA, core.ADAPT_EPSILON: _kernels.M_EPSILON, core.FIXED: _kernels.M_FIXED}
_UTILITY_CODES = {"ranking": _kernels.RANKING, "truncation": _kernels.TRUNCATION}


def _loop_python(opt, obj, sampler, noise, budget):
    """Reference route: plain ask / evaluate / tell."""
    lams: list[int] = []
    epss: list[float] = []
    used = 0
    while True:
        x = opt.ask(sampler)
        partial = used + x.shape[0] > budget
        if partial:
            x = x[: budget - used]
        lams.append(x.shape[0])
        epss.append(opt.epsilon)
        f = obj.evaluate_batch(x, noise)
        hit = obj.is_optimum(x)
        if hit.any():
            return used + int(hit.argmax()) + 1, used + x.shape[0], lams, epss
        used += x.shape[0]
        if partial or used >= budget:
            return None, used, lams, epss
        opt.tell(x, f)


def _loop_compiled(opt, obj, sampler, noise, budget):
    """Same loop fused into one compiled call; bit-identical to the reference."""
    weights = obj.weights if obj.weights is not None else np.ones(obj.n)
    hi = math.inf if opt.lambda_max is None else float(opt.lambda_max)
    (hitting, used, theta, s, gamma, lambda_r, lam, eps, beta, told, skipped, lams, epss) = _kernels.run_trial_loop(
        opt.theta, opt.s, opt.gamma, opt.lambda_r, opt.lam, opt.epsilon, opt.beta, opt.base_epsilon,
        _MODE_CODES[opt.mode], _UTILITY_CODES[opt.utility], opt.centered, opt.mu or 1,
        opt.alpha, float(opt.lambda_min), hi, opt.fisher_post_update, opt.unit_mean,
        _OBJ_CODES[obj.kind], np.ascontiguousarray(weights, dtype=float), float(obj.sigma), sampler, noise, budget,
    )
    opt.theta, opt.s, opt.gamma, opt.lambda_r = theta, s, gamma, lambda_r
    opt.lam, opt.epsilon, opt.beta = lam, eps, beta
    opt.iteration += told
    opt.f_calls += int(lams[:told].sum())
    opt.skipped += skipped
    obj.evaluations += used
    return (None if hitting < 0 else int(hitting)), int(used), lams, epss


def run_trial(
    algo: AlgoConfig,
    objective: ObjectiveConfig,
    n: int,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    keep_trajectory: bool = True,
    engine: str = "auto",
) -> TrialRecord:
    """Run until the optimum is sampled or ``budget`` f-calls are used.

    The hitting time is the 1-based index of the first optimal sample in
    the overall sequence of evaluations. A final batch that would overrun
    the budget is truncated to the remaining f-calls.

    ``engine`` picks the ask/tell loop in Python (``"python"``) or the
    compiled loop (``"compiled"``); ``"auto"`` uses the compiled one when
    the utility scheme supports it. Both give identical records.
    """
    opt = algo.build(n)
    if budget < opt.lambda_min:
        raise ValueError(f"budget {budget} is smaller than the minimum sample size {opt.lambda_min}")
    obj = objective.build(n)
    sampler = rng_mod.stream(seed, rng_mod.SAMPLING)
    noise = rng_mod.stream(seed, rng_mod.NOISE)
    if engine == "auto":
        engine = "compiled" if opt.utility in _UTILITY_CODES else "python"
    if engine == "compiled":
        hitting, used, lams, epss = _loop_compiled(opt, obj, sampler, noise, budget)
    elif engine == "python":
        hitting, used, lams, epss = _loop_python(opt, obj, sampler, noise, budget)
    else:
        raise ValueError(f"unknown engine {engine!r}")

    lams = np.asarray(lams)
    epss = np.asarray(epss, dtype=float)
    traj = []
    if keep_trajectory:
        stride = thinning_stride(n)
        traj = [[int(i), int(lams[i]), float(epss[i])] for i in range(0, len(lams), stride)]
    theta = opt.theta
    return TrialRecord(
        seed=seed,
        n=n,
        algorithm=algo.label,
        objective=objective.label,
        hitting_time=hitting,
        budget=budget,
        f_calls=used,
        iterations=len(lams),
        median_lambda=float(np.median(lams)),
        mean_epsilon=float(np.mean(epss)),
        final_theta_summary={"min": float(theta.min()), "mean": float(theta.mean()), "max": float(theta.max())},
        lambda_trajectory=traj,
    )


@dataclass
class SuiteConfig:
    algorithms: list[AlgoConfig]
    objectives: list[ObjectiveConfig]
    ns: list[int] = field(default_factory=lambda: list(DEFAULT_NS))
    trials: int = 10
    base_seed: int = 0
    budget: int = DEFAULT_BUDGET
    keep_trajectory: bool = True

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")

    def jobs(self):
        for algo, obj, n, t in product(self.algorithms, self.objectives, self.ns, range(self.trials)):
            seed = rng_mod.derive_seed(self.base_seed, algo.label, obj.label, n, t)
            yield algo, obj, n, self.budget, seed, self.keep_trajectory


def _run_job(job) -> TrialRecord:
    algo, obj, n, budget, seed, keep = job
    try:
        return run_trial(algo, obj, n, budget, seed, keep)
    except Exception as exc:  # recorded per trial, the suite carries on
        log.warning("trial %s/%s n=%d seed=%d failed: %s", algo.label, obj.label, n, seed, exc)
        return TrialRecord(seed, n, algo.label, obj.label, None, budget, 0, 0, math.nan, math.nan, {}, [], repr(exc))


def quartiles(values) -> tuple[float, float, float]:
    """(lower quartile, median, upper quartile), linear interpolation."""
    q1, med, q3 = np.percentile(np.asarray(values, dtype=float), [25, 50, 75])
    return float(q1), float(med), float(q3)


@dataclass
class Aggregate:
    algorithm: str
    objective: str
    n: int
    median: float
    q1: float
    q3: float
    successes: int
    trials: int


@dataclass
class SuiteReport:
    rows: list[Aggregate]

    @classmethod
    def from_records(cls, records: list[TrialRecord]) -> "SuiteReport":
        groups: dict[tuple, list[TrialRecord]] = {}
        for r in records:
            groups.setdefault((r.algorithm, r.objective, r.n), []).append(r)
        rows = []
        for (a, o, n), rs in groups.items():
            q1, med, q3 = quartiles([r.censored_time for r in rs])
            rows.append(Aggregate(a, o, n, med, q1, q3, sum(not r.exhausted for r in rs), len(rs)))
        return cls(rows)

    def get(self, algorithm: str, objective: str, n: int) -> Aggregate:
        for row in self.rows:
            if (row.algorithm, row.objective, row.n) == (algorithm, objective, n):
                return row
        raise KeyError((algorithm, objective, n))


def run_suite(config: SuiteConfig, workers: int = 1) -> tuple[SuiteReport, list[TrialRecord]]:
    jobs = list(config.jobs())
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_job, jobs, chunksize=1))
    else:
        records = [_run_job(j) for j in jobs]
    return SuiteReport.from_records(records), records


@dataclass
class AlphaRatio:
    objective: str
    n: int
    alpha: float
    median_ratio: float
    q1_ratio: float
    q3_ratio: float
    best_alpha: float


def alpha_ratios(records: list[TrialRecord], alphas: list[float], labels: dict[str, float]) -> list[AlphaRatio]:
    """Hitting times divided by the median hitting time of the best alpha.

    ``labels`` maps algorithm label -> alpha value.
    """
    out = []
    by_group: dict[tuple, dict[float, list[int]]] = {}
    for r in records:
        if r.algorithm not in labels:
            continue
        by_group.setdefault((r.objective, r.n), {}).setdefault(labels[r.algorithm], []).append(r.censored_time)
    for (obj, n), per_alpha in by_group.items():
        medians = {a: float(np.median(v)) for a, v in per_alpha.items()}
        best = min(medians, key=lambda a: (medians[a], a))
        for a in alphas:
            if a not in per_alpha:
                continue
            q1, med, q3 = quartiles(np.asarray(per_alpha[a]) / medians[best])
            out.append(AlphaRatio(obj, n, a, med, q1, q3, best))
    return out


def run_alpha_sweep(
    alphas: list[float],
    objectives: list[ObjectiveConfig],
    ns: list[int],
    trials: int = 10,
    base_seed: int = 0,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
    epsilon="default",
) -> tuple[list[AlphaRatio], SuiteReport, list[TrialRecord]]:
    algos = [AlgoConfig("pbil-lambda", alpha=a, epsilon=epsilon) for a in alphas]
    # the alpha label must always be present so it can be recovered
    labels = {a.label: a.alpha for a in algos}
    cfg = SuiteConfig(algos, objectives, list(ns), trials, base_seed, budget)
    report, records = run_suite(cfg, workers)
    return alpha_ratios(records, list(alphas), labels), report, records


def write_records(records: list[TrialRecord], fmt: str, fh) -> None:
    if fmt == "csv":
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in records:
            w.writerow(r.csv_row())
    elif fmt == "jsonl":
        for r in records:
            fh.write(json.dumps(r.to_dict()) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def emit(records: list[TrialRecord], fmt: str, path) -> Path:
    """Write trial records as CSV (fixed columns) or JSONL (full records)."""
    if not records:
        raise ValueError("no records to write")
    if fmt not in ("csv", "jsonl"):
        raise ValueError(f"unknown format {fmt!r}")
    path = Path(path)
    with path.open("w", newline="") as fh:
        write_records(records, fmt, fh)
    return path


def read_jsonl(path) -> list[TrialRecord]:
    with Path(path).open() as fh:
        return [TrialRecord.from_dict(json.loads(line)) for line in fh if line.strip()]


def emit_aggregates(rows, path) -> Path:
    """CSV of any list of dataclass rows (suite aggregates, alpha ratios)."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to write")
    path = Path(path)
    dicts = [asdict(r) for r in rows]
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(dicts[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(dicts)
    return path
