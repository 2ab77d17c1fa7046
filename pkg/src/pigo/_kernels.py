"""Compiled inner loops. Everything here is called once per iteration, where
numpy's per-call overhead would otherwise dominate for small batches."""

from __future__ import annotations

import numpy as np
from numba import njit

OK = 0
SKIPPED = 1
BAD_VALUE = 2
NEGATIVE = 3
ALL_ZERO = 4


@njit(cache=True)
def rank_assign(key, weights):
    """weights[i] to the i-th smallest key, tied keys share their mean weight."""
    lam = key.shape[0]
    order = np.argsort(key, kind="mergesort")
    out = np.empty(lam)
    i = 0
    while i < lam:
        j = i + 1
        while j < lam and key[order[j]] == key[order[i]]:
            j += 1
        if j - i == 1:
            out[order[i]] = weights[i]
        else:
            acc = 0.0
            for k in range(i, j):
                acc += weights[k]
            acc /= j - i
            # clamp to the group's own range so rounding cannot break monotonicity
            lo = min(weights[i], weights[j - 1])
            hi = max(weights[i], weights[j - 1])
            acc = min(max(acc, lo), hi)
            for k in range(i, j):
                out[order[k]] = acc
        i = j
    return out


@njit(cache=True)
def igo_step(theta, s, x, u, eps, beta, centered, adapt, fisher_post, gamma, lambda_r, alpha, lmin, lmax, gain):
    """One iteration of the update. Returns (status, theta, s, gamma, lambda_r).

    ``u`` are raw nonnegative utilities; only ``u / mean(u)`` is used, and
    theta moves by ``eps * gain`` times the gradient of that ratio.
    """
    lam, n = x.shape
    total = 0.0
    umin = np.inf
    umax = -np.inf
    for i in range(lam):
        v = u[i]
        if not np.isfinite(v):
            return BAD_VALUE, theta, s, gamma, lambda_r
        if v < 0.0:
            return NEGATIVE, theta, s, gamma, lambda_r
        total += v
        umin = min(umin, v)
        umax = max(umax, v)
    if total <= 0.0:
        return ALL_ZERO, theta, s, gamma, lambda_r
    if umax == umin:
        return SKIPPED, theta, s, gamma, lambda_r

    r = np.empty(lam)
    rmean = 0.0
    for i in range(lam):
        r[i] = u[i] * lam / total
        rmean += r[i]
    rmean /= lam
    var = 0.0
    for i in range(lam):
        c = r[i] - rmean
        var += c * c
    var /= lam

    grad = np.zeros(n)
    for i in range(lam):
        d = r[i] - rmean if centered else r[i]
        for k in range(n):
            grad[k] += d * (x[i, k] - theta[k])
    step = eps * gain
    lo = 1.0 / n
    hi = 1.0 - lo
    new_theta = np.empty(n)
    for k in range(n):
        grad[k] /= lam
        t = theta[k] + step * grad[k]
        new_theta[k] = min(max(t, lo), hi)
    if not adapt:
        return OK, new_theta, s, gamma, lambda_r

    coef = np.sqrt(beta * (2.0 - beta) * lam / (n * var))
    ref = new_theta if fisher_post else theta
    new_s = np.empty(n)
    s2 = 0.0
    for k in range(n):
        t = ref[k]
        v = (1.0 - beta) * s[k] + coef * grad[k] / np.sqrt(t * (1.0 - t))
        new_s[k] = v
        s2 += v * v
    # (1-b)^2 g + b(2-b), arranged so rounding cannot push it above 1
    gamma = 1.0 - (1.0 - beta) ** 2 * (1.0 - gamma)
    lr = lambda_r * np.exp(beta * (gamma - s2 / alpha))
    lambda_r = min(max(lr, lmin), lmax)
    return OK, new_theta, new_s, gamma, lambda_r


@njit(cache=True)
def leading_ones_rows(x):
    lam, n = x.shape
    out = np.empty(lam, dtype=np.int64)
    for i in range(lam):
        k = 0
        while k < n and x[i, k] != 0:
            k += 1
        out[i] = k
    return out


@njit(cache=True)
def ones_rows(x):
    lam, n = x.shape
    out = np.empty(lam, dtype=np.int64)
    for i in range(lam):
        c = 0
        for k in range(n):
            c += x[i, k] != 0
        out[i] = c
    return out


@njit(cache=True)
def linear_rows(x, w):
    lam, n = x.shape
    out = np.empty(lam)
    for i in range(lam):
        acc = 0.0
        for k in range(n):
            if x[i, k] == 0:
                acc += w[k]
        out[i] = acc
    return out


@njit(cache=True)
def ranking_table(lam):
    mu = (lam + 3) // 4
    w = np.full(lam, lam / mu)
    w[:mu] = 2 * lam / mu
    w[lam - mu:] = 0.0
    return w


@njit(cache=True)
def truncation_table(lam, mu):
    w = np.zeros(lam)
    w[:mu] = lam / mu
    return w


ONEMAX, LEADINGONES, LINEAR, NOISY_ONEMAX = 0, 1, 2, 3
RANKING, TRUNCATION = 0, 1
M_LAMBDA, M_EPSILON, M_FIXED = 0, 1, 2


@njit(cache=True)
def _evaluate(x, obj, weights, sigma, noise):
    lam, n = x.shape
    if obj == LEADINGONES:
        return (n - leading_ones_rows(x)).astype(np.float64)
    if obj == LINEAR:
        return linear_rows(x, weights)
    f = (n - ones_rows(x)).astype(np.float64)
    if obj == NOISY_ONEMAX and sigma > 0.0:
        f = f + sigma * noise.standard_normal(lam)
    return f


@njit(cache=True)
def _round_half_away(v):
    return int(np.floor(v + 0.5))


@njit(cache=True)
def run_trial_loop(
    theta, s, gamma, lambda_r, lam, eps, beta, base_eps, mode, utility, centered, mu,
    alpha, lmin, lmax, fisher_post, unit_mean, obj, weights, sigma, sampler, noise, budget,
):
    """Whole first-hitting-time trial. Draw order matches the ask/tell route."""
    n = theta.shape[0]
    cap = 1024
    lams = np.empty(cap, dtype=np.int64)
    epss = np.empty(cap)
    iters = 0
    used = 0
    hitting = -1
    told = 0
    skipped = 0
    while True:
        uni = sampler.random((lam, n))
        m = min(lam, budget - used)
        partial = lam > budget - used
        x = np.empty((m, n), dtype=np.uint8)
        for i in range(m):
            for k in range(n):
                x[i, k] = uni[i, k] < theta[k]
        if iters == cap:
            cap *= 2
            nl = np.empty(cap, dtype=np.int64)
            ne = np.empty(cap)
            nl[:iters] = lams
            ne[:iters] = epss
            lams, epss = nl, ne
        lams[iters] = m
        epss[iters] = eps
        iters += 1
        f = _evaluate(x, obj, weights, sigma, noise)
        hit = -1
        for i in range(m):
            allone = True
            for k in range(n):
                if x[i, k] == 0:
                    allone = False
                    break
            if allone:
                hit = i
                break
        if hit >= 0:
            hitting = used + hit + 1
            used += m
            break
        used += m
        if partial or used >= budget:
            break
        if utility == RANKING:
            table = ranking_table(m)
        else:
            table = truncation_table(m, mu)
        u = rank_assign(f, table)
        gain = table.sum() / m if unit_mean else 1.0
        status, new_theta, new_s, new_gamma, new_lr = igo_step(
            theta, s, x, u, eps, beta, centered, mode != M_FIXED, fisher_post, gamma, lambda_r, alpha, lmin, lmax,
            gain,
        )
        told += 1
        if status == SKIPPED:
            skipped += 1
            continue
        theta = new_theta
        if mode == M_FIXED:
            continue
        s, gamma, lambda_r = new_s, new_gamma, new_lr
        if mode == M_LAMBDA:
            lam = _round_half_away(lambda_r)
        else:
            lam = int(lmin)
            eps = base_eps / (lambda_r / lmin)
            beta = eps
    return hitting, used, theta, s, gamma, lambda_r, lam, eps, beta, told, skipped, lams[:iters], epss[:iters]
