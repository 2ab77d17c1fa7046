"""Median hitting time of pbil-lambda relative to the best alpha in the grid."""

import argparse

from pigo.harness import ObjectiveConfig, run_alpha_sweep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--alphas", default="1.1,1.25,1.5,1.75,2.0")
    ap.add_argument("--n", default="100,300")
    ap.add_argument("--objective", default="onemax")
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    alphas = [float(v) for v in a.alphas.split(",")]
    ns = [int(v) for v in a.n.split(",")]
    ratios, _, _ = run_alpha_sweep(alphas, [ObjectiveConfig(a.objective)], ns, trials=a.trials, base_seed=a.seed)
    for r in ratios:
        print(f"n={r.n:<5d} alpha={r.alpha:<5g} median/best={r.median_ratio:.3f}")


if __name__ == "__main__":
    main()
