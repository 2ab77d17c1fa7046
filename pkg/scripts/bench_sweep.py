"""Hitting-time sweep on OneMax and LeadingOnes for every optimizer.

    python3 scripts/bench_sweep.py --n 10,30,100,300 --trials 10 --out results/
"""

import argparse
from pathlib import Path

from pigo.harness import AlgoConfig, ObjectiveConfig, SuiteConfig, emit, emit_aggregates, run_suite

ALGOS = [
    AlgoConfig("pbil-lambda"),
    AlgoConfig("pbil-eps"),
    AlgoConfig("cga", epsilon="inv-n"),
    AlgoConfig("cga", epsilon="inv-sqrt-n"),
    AlgoConfig("umda"),
    AlgoConfig("pbil"),
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", default="10,30,100,300,1000,3000")
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--budget", type=int, default=10**7)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results"))
    a = ap.parse_args()
    a.out.mkdir(parents=True, exist_ok=True)
    ns = [int(v) for v in a.n.split(",")]
    for obj in ("onemax", "leadingones"):
        cfg = SuiteConfig(ALGOS, [ObjectiveConfig(obj)], ns, a.trials, a.seed, a.budget)
        report, records = run_suite(cfg, workers=a.workers)
        emit(records, "csv", a.out / f"{obj}_trials.csv")
        emit_aggregates(report.rows, a.out / f"{obj}_summary.csv")
        for row in report.rows:
            print(f"{obj:12s} {row.algorithm:24s} n={row.n:<5d} median={row.median:<10g} "
                  f"solved={row.successes}/{row.trials}")


if __name__ == "__main__":
    main()
