"""Joint training of network weights and binary architecture bits.

A small fully connected classifier whose structure is switched by a bit
mask ``m``:

* ``layerskip``: hidden layer 1 is always on; for k = 1..n the next layer
  is residual and gated, ``X[k+2] = X[k+1] + m[k] * relu(W X[k+1] + b)``.
* ``activation``: one bit per hidden unit, relu if 1 and tanh if 0.

The weights follow SGD with Nesterov momentum on the loss averaged over
masks sampled from the Bernoulli distribution; the distribution itself is
updated by PBIL-epsilon, PBIL-lambda or cGA from the ranked losses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import core, family, rng as rng_mod

LAYERSKIP = "layerskip"
ACTIVATION = "activation"
OPTIMIZERS = ("pbil-eps", "pbil-lambda", "cga")


# --------------------------------------------------------------------- data


def spiral_points(points: int, classes: int, noise: float, rng: np.random.Generator, turns: float = 1.0):
    """Raw interleaved spirals. Class c sits on
    ``r (cos phi, sin phi)`` with ``phi = 2 pi (c / classes + turns * r)``,
    ``r`` evenly spaced in [0.05, 1]; ``noise`` perturbs ``phi`` (radians).
    """
    if points < classes:
        raise ValueError("need at least one point per class")
    counts = np.full(classes, points // classes)
    counts[: points % classes] += 1
    xs, ys = [], []
    for c in range(classes):
        r = np.linspace(0.05, 1.0, counts[c])
        phi = 2 * np.pi * (c / classes + turns * r)
        if noise > 0:
            phi = phi + noise * rng.standard_normal(counts[c])
        xs.append(np.column_stack([r * np.cos(phi), r * np.sin(phi)]))
        ys.append(np.full(counts[c], c))
    return np.concatenate(xs), np.concatenate(ys)


@dataclass
class Dataset:
    x: np.ndarray
    y: np.ndarray

    def __len__(self):
        return self.y.shape[0]

    @property
    def classes(self) -> int:
        return int(self.y.max()) + 1


def gen_spiral_dataset(points: int, classes: int = 3, noise: float = 0.2, seed: int = 0, standardize: bool = True) -> Dataset:
    rng = np.random.Generator(np.random.Philox(seed))
    x, y = spiral_points(points, classes, noise, rng)
    if standardize:
        x = (x - x.mean(axis=0)) / x.std(axis=0)
    return Dataset(x, y)


def spiral_splits(train: int = 3000, test: int = 1000, classes: int = 3, noise: float = 0.2, seed: int = 0):
    """Train/test spirals; both standardized with the training statistics."""
    tr = gen_spiral_dataset(train, classes, noise, seed, standardize=False)
    te = gen_spiral_dataset(test, classes, noise, seed + 1, standardize=False)
    mean, std = tr.x.mean(axis=0), tr.x.std(axis=0)
    return Dataset((tr.x - mean) / std, tr.y), Dataset((te.x - mean) / std, te.y)


def load_csv_dataset(path) -> Dataset:
    """Feature columns followed by an integer label column; optional header."""
    with open(path) as fh:
        first = fh.readline()
    try:
        [float(v) for v in first.strip().split(",")]
        skip = 0
    except ValueError:
        skip = 1
    data = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    y = data[:, -1]
    if np.any(y != np.round(y)) or np.any(y < 0):
        raise ValueError("last column must hold nonnegative integer labels")
    return Dataset(data[:, :-1].astype(float), y.astype(int))


# ------------------------------------------------------------------ network


@dataclass(frozen=True)
class GatingMode:
    kind: str
    mask_dim: int

    def __post_init__(self):
        if self.kind not in (LAYERSKIP, ACTIVATION):
            raise ValueError(f"unknown gating kind {self.kind!r}")


@dataclass
class NetWeights:
    """``layers[i] = (W, b)`` with ``W`` of shape (fan_in, fan_out)."""

    widths: tuple[int, ...]  # input, hidden..., output
    layers: list[tuple[np.ndarray, np.ndarray]]

    @classmethod
    def init(cls, widths, rng: np.random.Generator) -> "NetWeights":
        layers = []
        for a, b in zip(widths[:-1], widths[1:]):
            limit = math.sqrt(6.0 / (a + b))
            layers.append((rng.uniform(-limit, limit, size=(a, b)), np.zeros(b)))
        return cls(tuple(widths), layers)

    def zeros_like(self) -> "NetWeights":
        return NetWeights(self.widths, [(np.zeros_like(w), np.zeros_like(b)) for w, b in self.layers])

    def copy(self) -> "NetWeights":
        return NetWeights(self.widths, [(w.copy(), b.copy()) for w, b in self.layers])

    def flat(self) -> np.ndarray:
        return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in self.layers])

    def arrays(self):
        for w, b in self.layers:
            yield w
            yield b

    def norm(self) -> float:
        return math.sqrt(sum(float(np.sum(a * a)) for a in self.arrays()))

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())


def gating_for(kind: str, widths) -> GatingMode:
    hidden = widths[1:-1]
    if kind == LAYERSKIP:
        if len(set(hidden)) != 1 or len(hidden) < 2:
            raise ValueError("layerskip needs >= 2 hidden layers of equal width")
        return GatingMode(LAYERSKIP, len(hidden) - 1)
    return GatingMode(ACTIVATION, int(sum(hidden)))


def _check(w: NetWeights, m, mode: GatingMode, x) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.shape != (mode.mask_dim,):
        raise ValueError(f"mask must have length {mode.mask_dim}, got {m.shape}")
    if x.ndim != 2 or x.shape[1] != w.widths[0] or x.shape[0] == 0:
        raise ValueError("batch must be a nonempty (batch, features) array")
    return m


def _softmax_xent(logits, y):
    z = logits - logits.max(axis=1, keepdims=True)
    ez = np.exp(z)
    p = ez / ez.sum(axis=1, keepdims=True)
    bsz = y.shape[0]
    loss = float(-np.mean(z[np.arange(bsz), y] - np.log(ez.sum(axis=1))))
    return loss, p


def forward(w: NetWeights, m, x, mode: GatingMode) -> np.ndarray:
    """Logits for a batch."""
    m = _check(w, m, mode, x)
    return _forward(w, m, x, mode)[0]


def _forward(w, m, x, mode):
    cache = []
    layers = w.layers
    if mode.kind == LAYERSKIP:
        w1, b1 = layers[0]
        z = x @ w1 + b1
        h = np.maximum(z, 0.0)
        cache.append((x, z))
        for k in range(mode.mask_dim):
            wk, bk = layers[k + 1]
            z = h @ wk + bk
            cache.append((h, z))
            if m[k] != 0.0:
                h = h + m[k] * np.maximum(z, 0.0)
        cache.append((h, None))
        wo, bo = layers[-1]
        return h @ wo + bo, cache
    h = x
    offset = 0
    for wk, bk in layers[:-1]:
        z = h @ wk + bk
        width = wk.shape[1]
        g = m[offset:offset + width]
        offset += width
        t = np.tanh(z)
        cache.append((h, z, g, t))
        h = g * np.maximum(z, 0.0) + (1.0 - g) * t
    cache.append((h, None, None, None))
    wo, bo = layers[-1]
    return h @ wo + bo, cache


def loss_and_grad(w: NetWeights, m, x, y, mode: GatingMode):
    """Mean softmax cross-entropy and its gradient w.r.t. every weight."""
    m = _check(w, m, mode, x)
    y = np.asarray(y)
    logits, cache = _forward(w, m, x, mode)
    if not np.all(np.isfinite(logits)):
        raise FloatingPointError("non-finite activations")
    loss, p = _softmax_xent(logits, y)
    bsz = y.shape[0]
    dlogits = p
    dlogits[np.arange(bsz), y] -= 1.0
    dlogits /= bsz

    grads: list = [None] * len(w.layers)
    h_last = cache[-1][0]
    wo, _ = w.layers[-1]
    grads[-1] = (h_last.T @ dlogits, dlogits.sum(axis=0))
    dh = dlogits @ wo.T
    if mode.kind == LAYERSKIP:
        for k in range(mode.mask_dim - 1, -1, -1):
            h_in, z = cache[k + 1]
            wk, _ = w.layers[k + 1]
            if m[k] == 0.0:
                grads[k + 1] = (np.zeros_like(wk), np.zeros(wk.shape[1]))
                continue
            dz = m[k] * dh * (z > 0)
            grads[k + 1] = (h_in.T @ dz, dz.sum(axis=0))
            dh = dh + dz @ wk.T
        x_in, z = cache[0]
        dz = dh * (z > 0)
        grads[0] = (x_in.T @ dz, dz.sum(axis=0))
        return loss, NetWeights(w.widths, grads)
    for k in range(len(w.layers) - 2, -1, -1):
        h_in, z, g, t = cache[k]
        wk, _ = w.layers[k]
        dz = dh * (g * (z > 0) + (1.0 - g) * (1.0 - t * t))
        grads[k] = (h_in.T @ dz, dz.sum(axis=0))
        if k > 0:
            dh = dz @ wk.T
    return loss, NetWeights(w.widths, grads)


def loss_only(w: NetWeights, m, x, y, mode: GatingMode) -> float:
    m = _check(w, m, mode, x)
    logits, _ = _forward(w, m, x, mode)
    return _softmax_xent(logits, np.asarray(y))[0]


# ----------------------------------------------------------------- training


@dataclass
class TrainConfig:
    gating: str = LAYERSKIP
    optimizer: str = "pbil-eps"
    batch_size: int = 64
    t_max: int = 6000
    lr: float = 0.05
    momentum: float = 0.9
    weight_decay: float = 1e-4
    clip_norm: float | None = 2.0  # applied in layerskip mode only
    double_batch: bool = False  # PBIL-lambda uses 2 * batch_size per sample
    hidden: tuple[int, ...] | None = None  # default depends on gating
    alpha: float = 1.5
    seed: int = 0
    eval_every: int = 500
    # dataset
    train_points: int = 3000
    test_points: int = 1000
    classes: int = 3
    noise: float = 0.2

    def __post_init__(self):
        if self.gating not in (LAYERSKIP, ACTIVATION):
            raise ValueError(f"unknown gating {self.gating!r}")
        if self.optimizer not in OPTIMIZERS and self.optimizer != "fixed":
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.hidden is None:
            self.hidden = (16,) * 8 if self.gating == LAYERSKIP else (32, 32)

    def widths(self, features: int, classes: int) -> tuple[int, ...]:
        return (features, *self.hidden, classes)

    def lr_at(self, t: int) -> float:
        """Learning rate for the update with 0-based index ``t``."""
        drops = (t >= math.ceil(self.t_max / 2)) + (t >= math.ceil(3 * self.t_max / 4))
        return self.lr / 10**drops


def weight_update(w: NetWeights, grad: NetWeights, velocity: NetWeights, t: int, config: TrainConfig):
    """Clip (layerskip only), add weight decay, then one Nesterov step.

    Velocity form: ``v <- mu v - lr g``; ``w <- w + mu v - lr g``.
    Returns new (weights, velocity); inputs are not modified.
    """
    if not (grad.all_finite() and w.all_finite() and velocity.all_finite()):
        raise FloatingPointError("non-finite weights or gradient")
    scale = 1.0
    if config.gating == LAYERSKIP and config.clip_norm is not None:
        gn = grad.norm()
        if gn > config.clip_norm:
            scale = config.clip_norm / gn
    lr = config.lr_at(t)
    mu = config.momentum
    new_layers, new_vel = [], []
    for (wk, bk), (gw, gb), (vw, vb) in zip(w.layers, grad.layers, velocity.layers):
        gw = scale * gw + config.weight_decay * wk
        gb = scale * gb + config.weight_decay * bk
        vw = mu * vw - lr * gw
        vb = mu * vb - lr * gb
        new_layers.append((wk + mu * vw - lr * gw, bk + mu * vb - lr * gb))
        new_vel.append((vw, vb))
    return NetWeights(w.widths, new_layers), NetWeights(w.widths, new_vel)


def _average(grads: list[NetWeights]) -> NetWeights:
    k = len(grads)
    layers = []
    for parts in zip(*(g.layers for g in grads)):
        layers.append((sum(p[0] for p in parts) / k, sum(p[1] for p in parts) / k))
    return NetWeights(grads[0].widths, layers)


class _Batches:
    """Epoch-wise shuffled mini-batches."""

    def __init__(self, n: int, rng: np.random.Generator):
        self.n, self.rng = n, rng
        self.perm = rng.permutation(n)
        self.pos = 0

    def draw(self, size: int) -> np.ndarray:
        size = min(size, self.n)
        if self.pos + size > self.n:
            self.perm = self.rng.permutation(self.n)
            self.pos = 0
        idx = self.perm[self.pos:self.pos + size]
        self.pos += size
        return idx


def threshold_mask(theta) -> np.ndarray:
    return (np.asarray(theta) >= 0.5).astype(float)


def predict_fixed(theta, w: NetWeights, x, y, mode: GatingMode):
    """Loss and accuracy with the mask fixed to ``theta >= 0.5``."""
    m = threshold_mask(theta)
    m = _check(w, m, mode, x)
    logits, _ = _forward(w, m, x, mode)
    loss, _ = _softmax_xent(logits, np.asarray(y))
    acc = float(np.mean(np.argmax(logits, axis=1) == y))
    return loss, acc


@dataclass
class TrainResult:
    weights: NetWeights
    theta: np.ndarray
    history: list[dict] = field(default_factory=list)
    checkpoints: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)


def _make_optimizer(config: TrainConfig, n: int):
    if config.optimizer == "pbil-eps":
        return core.new_parameterless(n, core.ADAPT_EPSILON, alpha=config.alpha)
    if config.optimizer == "pbil-lambda":
        return core.new_parameterless(n, core.ADAPT_LAMBDA, alpha=config.alpha)
    return core.new_baseline("cga", n)


def train_simultaneous(
    config: TrainConfig,
    train: Dataset | None = None,
    test: Dataset | None = None,
    fixed_mask=None,
) -> TrainResult:
    """Train weights and mask distribution together.

    PBIL-eps / cGA: per iteration one mini-batch, two masks, one weight
    update with the averaged gradient, one distribution update.
    PBIL-lambda: per iteration ``lam`` masks, each with its own mini-batch
    and its own immediate weight update, then one distribution update from
    the ``lam`` losses. ``T`` counts weight updates; stop once ``T >= t_max``.

    ``fixed_mask`` trains a plain network with that mask instead (one
    mini-batch per update, no distribution).
    """
    if train is None:
        train, test = spiral_splits(config.train_points, config.test_points, config.classes, config.noise, config.seed)
    widths = config.widths(train.x.shape[1], max(train.classes, test.classes if test else 0))
    mode = gating_for(config.gating, widths)
    n = mode.mask_dim
    init_rng = rng_mod.stream(config.seed, rng_mod.TRAINING)
    w = NetWeights.init(widths, init_rng)
    vel = w.zeros_like()
    batches = _Batches(len(train), init_rng)
    sampler = rng_mod.stream(config.seed, rng_mod.SAMPLING)

    opt = None
    if fixed_mask is None:
        opt = _make_optimizer(config, n)
        theta = opt.theta
    else:
        fixed_mask = np.asarray(fixed_mask, dtype=float)
        theta = np.where(fixed_mask > 0, 1.0, 0.0)

    history: list[dict] = []
    checkpoints: list[dict] = []
    t = 0

    def log_update(loss):
        history.append({
            "update": t,
            "loss": loss,
            "lambda_r": opt.lambda_r if opt else math.nan,
            "epsilon": opt.epsilon if opt else math.nan,
            "entropy": family.entropy(opt.theta) if opt else 0.0,
        })
        if config.eval_every and t % config.eval_every == 0:
            checkpoints.append(_checkpoint(t))

    def _checkpoint(step):
        th = opt.theta if opt else theta
        tr_loss, tr_acc = predict_fixed(th, w, train.x, train.y, mode)
        row = {"update": step, "train_loss": tr_loss, "train_acc": tr_acc}
        if test is not None:
            te_loss, te_acc = predict_fixed(th, w, test.x, test.y, mode)
            row.update(test_loss=te_loss, test_acc=te_acc)
        return row

    entropy0 = family.entropy(opt.theta) if opt else 0.0
    bsz = config.batch_size
    while t < config.t_max:
        if opt is None:
            idx = batches.draw(bsz)
            loss, g = loss_and_grad(w, fixed_mask, train.x[idx], train.y[idx], mode)
            w, vel = weight_update(w, g, vel, t, config)
            t += 1
            log_update(loss)
        elif config.optimizer in ("pbil-eps", "cga"):
            idx = batches.draw(bsz)
            masks = opt.ask(sampler)
            results = [loss_and_grad(w, mk, train.x[idx], train.y[idx], mode) for mk in masks]
            losses = [r[0] for r in results]
            w, vel = weight_update(w, _average([r[1] for r in results]), vel, t, config)
            opt.tell(masks, losses)
            t += 1
            log_update(float(np.mean(losses)))
        else:
            masks = opt.ask(sampler)
            losses = []
            size = 2 * bsz if config.double_batch else bsz
            for mk in masks:
                idx = batches.draw(size)
                loss, g = loss_and_grad(w, mk, train.x[idx], train.y[idx], mode)
                w, vel = weight_update(w, g, vel, t, config)
                losses.append(loss)
                t += 1
                log_update(loss)
            opt.tell(masks, losses)

    final = _checkpoint(t)
    if not checkpoints or checkpoints[-1]["update"] != t:
        checkpoints.append(final)
    final_theta = opt.theta if opt else theta
    summary = {
        "updates": t,
        "optimizer": config.optimizer if opt else "fixed",
        "gating": config.gating,
        "mask_dim": n,
        "entropy_initial": entropy0,
        "entropy_final": family.entropy(final_theta) if opt else 0.0,
        "mask": threshold_mask(final_theta).astype(int).tolist(),
        "f_calls": opt.f_calls if opt else 0,
        "theta_updates": opt.iteration if opt else 0,
        **{f"final_{k}": v for k, v in final.items() if k != "update"},
    }
    return TrainResult(w, final_theta, history, checkpoints, summary)


def moving_average(values, window: int = 100) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.size < window:
        window = max(1, v.size)
    c = np.cumsum(np.insert(v, 0, 0.0))
    return (c[window:] - c[:-window]) / window
