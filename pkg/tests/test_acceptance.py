"""Acceptance criteria 1-9.

Each criterion prints exactly one ``PASS``/``FAIL`` line. Run under pytest
or directly with ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import itertools
import math
import sys
import time

import numpy as np
import pytest

from pigo import core, family, neuro
from pigo.benchmarks import onemax
from pigo.harness import AlgoConfig, ObjectiveConfig, SuiteConfig, run_suite
from pigo.rng import stream

BASE_SEED = 0


def _suite(algos, objectives, ns, trials=10, budget=10**7, keep=False):
    cfg = SuiteConfig([AlgoConfig(**a) for a in algos], [ObjectiveConfig(o) for o in objectives], list(ns),
                      trials, BASE_SEED, budget, keep_trajectory=keep)
    return run_suite(cfg)


def _line(num, title, ok, detail):
    return f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {title} | {detail}"


# -------------------------------------------------------------- criteria
def check_1():
    t0 = time.perf_counter()
    report, _ = _suite([dict(name="pbil-lambda")], ["onemax", "leadingones"], [50, 100, 300], budget=10**6)
    elapsed = time.perf_counter() - t0
    solved = {(r.objective, r.n): r.successes for r in report.rows}
    ok = all(v == 10 for v in solved.values()) and elapsed < 60
    detail = ", ".join(f"{o} n={n}: {v}/10" for (o, n), v in solved.items()) + f"; {elapsed:.1f}s"
    return ok, detail


def check_2():
    report, _ = _suite([dict(name="cga", epsilon="inv-sqrt-n")], ["leadingones"], [100], budget=10**6)
    failures = 10 - report.rows[0].successes
    return failures >= 5, f"cGA(eps=n^-1/2) LeadingOnes n=100 failed {failures}/10 (need >= 5)"


def check_3():
    parts, ok = [], True
    for obj, eps in (("onemax", "inv-sqrt-n"), ("leadingones", "inv-n")):
        report, _ = _suite([dict(name="pbil-lambda"), dict(name="cga", epsilon=eps)], [obj], [100, 300])
        for n in (100, 300):
            p = report.get("pbil-lambda", obj, n).median
            c = report.get(f"cga(eps={eps})", obj, n).median
            ok &= p <= 1.2 * c
            parts.append(f"{obj} n={n}: {p:.0f}/{c:.0f}={p / c:.2f}")
    return ok, "; ".join(parts) + " (need <= 1.2)"


def check_4():
    report, records = _suite([dict(name="pbil-lambda", epsilon="inv-n"), dict(name="cga", epsilon="inv-n")],
                             ["onemax"], [100], keep=True)
    lams = np.concatenate([[t[1] for t in r.lambda_trajectory] for r in records if r.algorithm.startswith("pbil")])
    frac = float(np.mean(lams == 2))
    p = report.get("pbil-lambda(eps=inv-n)", "onemax", 100).median
    c = report.get("cga(eps=inv-n)", "onemax", 100).median
    ratio = max(p / c, c / p)
    ok = frac >= 0.9 and ratio <= 1.5
    return ok, f"lambda=2 in {frac:.1%} of iterations (need >= 90%); medians {p:.0f} vs {c:.0f}, ratio {ratio:.2f} (need <= 1.5)"


def check_5():
    parts, ok = [], True
    for obj in ("onemax", "leadingones"):
        _, records = _suite([dict(name="pbil-lambda")], [obj], [1000], keep=True)
        med = float(np.median([r.median_lambda for r in records]))
        ok &= 8 <= med <= 32
        parts.append(f"{obj} median lambda {med:g}")
        if obj == "leadingones":
            rising = 0
            for r in records:
                lam = np.array([t[1] for t in r.lambda_trajectory], dtype=float)
                q = len(lam) // 4
                rising += lam[-q:].mean() > lam[:q].mean()
            ok &= rising == len(records)
            parts.append(f"leadingones rising trend in {rising}/{len(records)} trials")
    return ok, "; ".join(parts) + " (need medians in [8, 32], trend in all)"


def check_6():
    algos = [dict(name="pbil-lambda", alpha=a) for a in (1.1, 1.5, 2.0)]
    report, _ = _suite(algos, ["onemax"], [100, 300])
    parts, ok = [], True
    for n in (100, 300):
        meds = [r.median for r in report.rows if r.n == n]
        ratio = max(meds) / min(meds)
        ok &= ratio <= 1.6
        parts.append(f"n={n} worst/best {ratio:.2f}")
    return ok, "; ".join(parts) + " (need <= 1.6)"


def check_7():
    ns = [50, 100, 200, 400, 800]
    t0 = time.perf_counter()
    parts, ok = [], True
    for eps, lo, hi in (("inv-n", 1.2, 1.8), ("inv-sqrt-n", 0.8, 1.3)):
        report, _ = _suite([dict(name="cga", epsilon=eps)], ["onemax"], ns, trials=100)
        meds = [report.get(f"cga(eps={eps})", "onemax", n).median for n in ns]
        slope = float(np.polyfit(np.log(ns), np.log(meds), 1)[0])
        ok &= lo <= slope <= hi
        parts.append(f"cGA({eps}) slope {slope:.3f} in [{lo}, {hi}]")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 300
    return ok, "; ".join(parts) + f"; 100 trials per n; {elapsed:.1f}s"


def _mc_matches_enumeration(n=10, lam=4, batches=100_000):
    rng = np.random.default_rng(n)
    theta = family.project(rng.uniform(0.2, 0.8, n))
    xs = np.array(list(itertools.product((0, 1), repeat=n)), dtype=float)
    p = np.prod(np.where(xs == 1, theta, 1 - theta), axis=1)
    w_all = np.exp(-(n - xs.sum(1)) / 2)
    exact = (1 - 1 / lam) * (p @ ((w_all - p @ w_all)[:, None] * (xs - theta)))
    x = family.sample(theta, lam * batches, stream(n)).reshape(batches, lam, n).astype(float)
    w = np.exp(-(n - x.sum(2)) / 2)
    est = np.einsum("bl,bln->bn", w - w.mean(1, keepdims=True), x - theta) / lam
    se = est.std(0, ddof=1) / math.sqrt(batches)
    return bool(np.all(np.abs(est.mean(0) - exact) < 4 * se))


def check_8():
    res = {}
    # gamma: fixed point and monotone increase, theta bounds, skip rule
    o = core.new_parameterless(40)
    rng = stream(1)
    gam, bounds = [], True
    for _ in range(500):
        x = o.ask(rng)
        skipped = o.skipped
        o.tell(x, onemax(x))
        if o.skipped == skipped:  # tied batches leave gamma untouched by design
            gam.append(o.gamma)
        bounds &= bool(np.all(o.theta >= 1 / 40) and np.all(o.theta <= 1 - 1 / 40))
    g = np.array(gam)
    res["gamma"] = (core.snr_normalizer_fixed_point(o.beta) == pytest.approx(1.0)
                    and bool(np.all(np.diff(g) >= 0)) and bool(np.all((np.diff(g) > 0) | (1 - g[:-1] < 1e-15)))
                    and g.max() <= 1.0)
    res["theta bounds"] = bounds
    before = o.to_dict()
    x = o.ask(rng)
    o.tell(x, np.zeros(len(x)))
    after = o.to_dict()
    res["skip"] = all(after[k] == before[k] for k in ("theta", "s", "gamma", "lambda_r", "lam")) and \
        after["f_calls"] == before["f_calls"] + len(x)
    # utility scale c = 7, paired trajectories
    same = True
    for mode in (core.ADAPT_LAMBDA, core.ADAPT_EPSILON):
        a, b = core.new_parameterless(50, mode), core.new_parameterless(50, mode)
        r = stream(2)
        for _ in range(1000):
            x = a.ask(r)
            u = x.sum(1).astype(float) ** 2
            a.tell_utilities(x, u)
            b.tell_utilities(x, 7.0 * u)
            same &= (np.array_equal(a.theta, b.theta) and np.array_equal(a.s, b.s)
                     and a.gamma == b.gamma and a.lambda_r == b.lambda_r)
    res["scale c=7"] = bool(same)
    res["MC vs enumeration"] = _mc_matches_enumeration()
    # pure noise
    o = core.new_parameterless(30)
    r, noise = stream(3), stream(3, 1)
    sur, lrs = [], []
    for _ in range(10_000):
        x = o.ask(r)
        o.tell(x, noise.random(len(x)))
        sur.append(o.snr_surrogate())
        lrs.append(o.lambda_r)
    m = float(np.mean(sur))
    tail = float(np.mean(lrs[-1000:]))
    res[f"noise surrogate {m:.3f}"] = 0.7 <= m <= 1.4
    res[f"noise lambda_r tail {tail:.1f} toward lambda_min"] = tail <= o.lambda_min + 0.1 * (o.lambda_max - o.lambda_min)
    ok = all(res.values())
    return ok, ", ".join(f"{k}: {'ok' if v else 'NO'}" for k, v in res.items())


def _fd_rel_error(kind, widths, mask, seed):
    rng = np.random.default_rng(seed)
    w = neuro.NetWeights.init(widths, rng)
    w = neuro.NetWeights(w.widths, [(a, rng.normal(0, 0.3, b.shape)) for a, b in w.layers])
    x, y = rng.normal(size=(6, widths[0])), rng.integers(0, widths[-1], 6)
    mode = neuro.gating_for(kind, widths)
    _, g = neuro.loss_and_grad(w, mask, x, y, mode)
    worst, h = 0.0, 1e-5
    for (wk, bk), (gw, gb) in zip(w.layers, g.layers):
        for arr, garr in ((wk, gw), (bk, gb)):
            for idx in np.ndindex(arr.shape):
                old = arr[idx]
                arr[idx] = old + h
                lp = neuro.loss_only(w, mask, x, y, mode)
                arr[idx] = old - h
                lm = neuro.loss_only(w, mask, x, y, mode)
                arr[idx] = old
                num = (lp - lm) / (2 * h)
                scale = max(abs(num), abs(garr[idx]))
                worst = max(worst, abs(num - garr[idx]) / scale if scale > 1e-7 else abs(num - garr[idx]))
    return worst


def check_9():
    t0 = time.perf_counter()
    res = {}
    fd = max(_fd_rel_error(neuro.ACTIVATION, (2, 4, 3), np.array([1.0, 0, 1, 0]), 0),
             _fd_rel_error(neuro.LAYERSKIP, (2, 4, 4, 4, 3), np.array([1.0, 0]), 1),
             _fd_rel_error(neuro.LAYERSKIP, (2, 4, 4, 4, 3), np.array([1.0, 1]), 2))
    res[f"fd rel err {fd:.1e}"] = fd < 1e-4

    rng = np.random.default_rng(0)
    w = neuro.NetWeights.init((2, 5, 5, 5, 3), rng)
    x = rng.normal(size=(9, 2))
    ls = neuro.gating_for(neuro.LAYERSKIP, w.widths)
    (w1, b1), *mid, (wo, bo) = w.layers
    h = np.maximum(x @ w1 + b1, 0.0)
    for wk, bk in mid:
        h = h + np.maximum(h @ wk + bk, 0.0)
    ident = np.array_equal(neuro.forward(w, np.ones(2), x, ls), h @ wo + bo)
    ident &= np.array_equal(neuro.forward(w, np.zeros(2), x, ls), np.maximum(x @ w1 + b1, 0.0) @ wo + bo)
    act = neuro.gating_for(neuro.ACTIVATION, w.widths)
    ht = x
    for wk, bk in w.layers[:-1]:
        ht = np.tanh(ht @ wk + bk)
    ident &= np.array_equal(neuro.forward(w, np.zeros(act.mask_dim), x, act), ht @ wo + bo)
    res["gating identities"] = bool(ident)
    _, g = neuro.loss_and_grad(w, np.array([0.0, 1.0]), x, rng.integers(0, 3, 9), ls)
    res["skipped-layer zero grad"] = not (g.layers[1][0].any() or g.layers[1][1].any())

    for gating in (neuro.LAYERSKIP, neuro.ACTIVATION):
        n = neuro.gating_for(gating, neuro.TrainConfig(gating=gating).widths(2, 3)).mask_dim
        base = []
        for m in (np.ones(n), np.zeros(n)):
            r = neuro.train_simultaneous(neuro.TrainConfig(gating=gating, optimizer="fixed"), fixed_mask=m)
            base.append(r.summary["final_test_acc"])
        best = max(base)
        for opt in ("pbil-eps", "pbil-lambda"):
            r = neuro.train_simultaneous(neuro.TrainConfig(gating=gating, optimizer=opt))
            ma = neuro.moving_average([row["loss"] for row in r.history], 100)
            acc = r.summary["final_test_acc"]
            res[f"{gating}/{opt} loss {ma[-1] / ma[0]:.1%} of initial"] = ma[-1] < 0.25 * ma[0]
            res[f"{gating}/{opt} acc {acc:.3f} vs best fixed {best:.3f}"] = acc >= best - 0.02
    elapsed = time.perf_counter() - t0
    res[f"{elapsed:.0f}s"] = elapsed < 300
    return all(res.values()), ", ".join(f"{k}: {'ok' if v else 'NO'}" for k, v in res.items())


CRITERIA = [
    (1, "solvability", check_1),
    (2, "cGA failure mode", check_2),
    (3, "relative speed", check_3),
    (4, "degenerate-epsilon equivalence", check_4),
    (5, "lambda dynamics", check_5),
    (6, "alpha robustness", check_6),
    (7, "scaling sanity", check_7),
    (8, "property suite", check_8),
    (9, "neuro checks", check_9),
]


@pytest.mark.slow
@pytest.mark.parametrize("num,title,check", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(num, title, check, capsys):
    ok, detail = check()
    with capsys.disabled():
        print("\n" + _line(num, title, ok, detail), flush=True)
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for num, title, check in CRITERIA:
        ok, detail = check()
        failed += not ok
        print(_line(num, title, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
