"""Train a gated MLP on the spiral task and compare with fixed masks."""

import argparse

import numpy as np

from pigo import neuro


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--gating", choices=[neuro.LAYERSKIP, neuro.ACTIVATION], default=neuro.LAYERSKIP)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    cfg = neuro.TrainConfig(gating=a.gating, seed=a.seed)
    n = neuro.gating_for(a.gating, cfg.widths(2, 3)).mask_dim
    for label, mask in (("all ones", np.ones(n)), ("all zeros", np.zeros(n))):
        r = neuro.train_simultaneous(neuro.TrainConfig(gating=a.gating, seed=a.seed, optimizer="fixed"), fixed_mask=mask)
        print(f"fixed {label:10s} test acc {r.summary['final_test_acc']:.3f}")
    for opt in ("pbil-eps", "pbil-lambda"):
        r = neuro.train_simultaneous(neuro.TrainConfig(gating=a.gating, seed=a.seed, optimizer=opt))
        ma = neuro.moving_average([row["loss"] for row in r.history], 100)
        print(f"{opt:11s} test acc {r.summary['final_test_acc']:.3f}  loss MA {ma[0]:.3f} -> {ma[-1]:.4f}  "
              f"mask {r.summary['mask']}")


if __name__ == "__main__":
    main()
