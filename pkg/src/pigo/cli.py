"""Command line entry point: ``pigo bench | alpha-sweep | neuro``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import harness, neuro


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of numbers, got {text!r}")


def _epsilon(text: str):
    if text in ("default", "inv-n", "inv-sqrt-n"):
        return text
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("epsilon must be default, inv-n, inv-sqrt-n or a number")
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError("epsilon must lie in (0, 1]")
    return text


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--objective", default="onemax", choices=["onemax", "leadingones", "linear", "noisy-onemax"])
    p.add_argument("--n", type=_int_list, default=list(harness.DEFAULT_NS), help="comma separated dimensions")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--epsilon", type=_epsilon, default="default", help="default | inv-n | inv-sqrt-n | <real>")
    p.add_argument("--budget", type=int, default=harness.DEFAULT_BUDGET, help="f-call limit per trial")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--sigma", type=float, default=1.0, help="noise std for noisy-onemax")
    p.add_argument("--weights", default=None, help="file with one linear weight per line")
    p.add_argument("--out", default="-", help="output path, - for stdout")
    p.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    p.add_argument("--summary", default=None, help="also write per-(algorithm, n) quartiles as CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pigo", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="first hitting times over an n-grid")
    b.add_argument("--algo", default="pbil-lambda", help="comma separated: " + ", ".join(harness.ALGORITHMS))
    b.add_argument("--alpha", type=float, default=1.5)
    b.add_argument("--lam", type=int, default=None, help="sample size for umda / pbil")
    _add_common(b)

    a = sub.add_parser("alpha-sweep", help="PBIL-lambda robustness to the SNR target alpha")
    a.add_argument("--alphas", type=_float_list, default=[1.1, 1.5, 2.0])
    a.add_argument("--ratios", default=None, help="write normalized hitting-time ratios as CSV here")
    _add_common(a)

    nr = sub.add_parser("neuro", help="joint weight / architecture training on a toy task")
    nr.add_argument("--mode", choices=[neuro.LAYERSKIP, neuro.ACTIVATION], default=neuro.LAYERSKIP)
    nr.add_argument("--optimizer", choices=list(neuro.OPTIMIZERS), default="pbil-eps")
    nr.add_argument("--updates", type=int, default=6000, help="number of weight updates (T_max)")
    nr.add_argument("--lr", type=float, default=0.05)
    nr.add_argument("--batch-size", type=int, default=64)
    nr.add_argument("--double-batch", action="store_true", help="PBIL-lambda: 2x mini-batch per sample")
    nr.add_argument("--eval-every", type=int, default=500)
    nr.add_argument("--seed", type=int, default=0)
    nr.add_argument("--data", default=None, help="training CSV (features..., label); default: spirals")
    nr.add_argument("--test-data", default=None, help="test CSV in the same format")
    nr.add_argument("--out", default="-")
    return parser


def _open_out(path):
    return sys.stdout if path == "-" else open(path, "w")


def _write_records(records, fmt, path) -> None:
    if path == "-":
        harness.write_records(records, fmt, sys.stdout)
    else:
        harness.emit(records, fmt, path)


def _objective(args) -> harness.ObjectiveConfig:
    sigma = args.sigma if args.objective == "noisy-onemax" else 0.0
    if args.objective != "linear" and args.weights:
        raise ValueError("--weights only applies to the linear objective")
    return harness.ObjectiveConfig(args.objective, sigma=sigma, weights_path=args.weights)


def _validate(algos, objective, ns) -> None:
    """Build everything once so bad combinations fail before any trial runs."""
    for n in ns:
        objective.build(n)
        for a in algos:
            a.build(n)


def cmd_bench(args) -> int:
    names = [v.strip() for v in args.algo.split(",") if v.strip()]
    algos = [harness.AlgoConfig(nm, alpha=args.alpha, epsilon=args.epsilon, lam=args.lam) for nm in names]
    objective = _objective(args)
    _validate(algos, objective, args.n)
    cfg = harness.SuiteConfig(algos, [objective], args.n, args.trials, args.seed, args.budget)
    report, records = harness.run_suite(cfg, args.workers)
    _write_records(records, args.format, args.out)
    if args.summary:
        harness.emit_aggregates(report.rows, args.summary)
    return 0


def cmd_alpha_sweep(args) -> int:
    objective = _objective(args)
    _validate([harness.AlgoConfig("pbil-lambda", alpha=a, epsilon=args.epsilon) for a in args.alphas], objective, args.n)
    ratios, report, records = harness.run_alpha_sweep(
        args.alphas, [objective], args.n, args.trials, args.seed, args.budget, args.workers, args.epsilon
    )
    _write_records(records, args.format, args.out)
    if args.ratios:
        harness.emit_aggregates(ratios, args.ratios)
    if args.summary:
        harness.emit_aggregates(report.rows, args.summary)
    for r in ratios:
        print(f"{r.objective} n={r.n} alpha={r.alpha:g} median/best={r.median_ratio:.3f}", file=sys.stderr)
    return 0


def cmd_neuro(args) -> int:
    cfg = neuro.TrainConfig(
        gating=args.mode,
        optimizer=args.optimizer,
        t_max=args.updates,
        lr=args.lr,
        batch_size=args.batch_size,
        double_batch=args.double_batch,
        eval_every=args.eval_every,
        seed=args.seed,
    )
    train = test = None
    if args.data:
        train = neuro.load_csv_dataset(args.data)
        test = neuro.load_csv_dataset(args.test_data) if args.test_data else None
    result = neuro.train_simultaneous(cfg, train, test)
    checkpoints = {c["update"]: c for c in result.checkpoints}
    out = _open_out(args.out)
    try:
        for row in result.history:
            row = dict(row)
            row.update({k: v for k, v in checkpoints.get(row["update"], {}).items() if k != "update"})
            out.write(json.dumps(row) + "\n")
        out.write(json.dumps({"summary": result.summary}) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handlers = {"bench": cmd_bench, "alpha-sweep": cmd_alpha_sweep, "neuro": cmd_neuro}
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"pigo: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
