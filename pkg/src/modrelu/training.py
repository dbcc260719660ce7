"""Penalized least squares over modified (or plain) ReLU networks.

The objective is ``mean((y - g(X))^2) + lam * pen(g)`` with ``pen`` the l1 norm
or the squared l2 norm of the raw weights.  Gradients are exact reverse-mode
derivatives of the forward composition, with ``alpha'`` and ``rho'`` set to 0
at their kinks.  l1 is handled by soft thresholding after each gradient step,
squared l2 by adding ``2 lam V`` to the gradient.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .datagen import RegressionDataset
from .network import (
    MODIFIED,
    PLAIN,
    Architecture,
    NetworkParams,
    alpha_prime,
    effective_layers,
    nu,
    prepare_inputs,
)

PENALTY_KINDS = ("none", "l1", "l2sq")
DIVERGENCE_LIMIT = 1e12


@dataclass(frozen=True)
class PenaltySpec:
    kind: str = "none"
    lam: float = 0.0

    def __post_init__(self):
        if self.kind not in PENALTY_KINDS:
            raise ValueError(f"penalty kind must be one of {PENALTY_KINDS}")
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError("penalty coefficient must be finite and >= 0")

    @property
    def coefficient(self) -> float:
        return 0.0 if self.kind == "none" else float(self.lam)

    def value(self, layers) -> float:
        if self.kind == "none":
            return 0.0
        flat = np.concatenate([np.ravel(V) for V in layers])
        if self.kind == "l1":
            return self.lam * math.fsum(np.abs(flat))
        return self.lam * math.fsum(flat**2)


@dataclass(frozen=True)
class TrainConfig:
    arch: Architecture
    penalty: PenaltySpec = PenaltySpec()
    step_size: float = 0.05
    max_epochs: int = 1000
    batch_size: Optional[int] = None
    seed: int = 0
    init_scale: float = 1.0
    clip_bound: Optional[float] = None
    keep_best_iterate: bool = True
    kind: str = MODIFIED
    augment_input: bool = False

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be positive or None (full batch)")
        if not self.init_scale > 0:
            raise ValueError("init_scale must be positive")


@dataclass
class EpochRecord:
    epoch: int
    objective: float
    mse: float
    penalty: float
    effective_nonzeros: int


@dataclass
class TrainTrace:
    initial_objective: float = float("nan")
    records: list = field(default_factory=list)
    best_epoch: int = 0
    best_objective: float = float("nan")

    def __len__(self):
        return len(self.records)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "objective", "mse", "penalty", "effective_nonzeros"])
        for r in self.records:
            w.writerow([r.epoch, f"{r.objective:.17g}", f"{r.mse:.17g}", f"{r.penalty:.17g}", r.effective_nonzeros])
        return buf.getvalue()


class TrainingDiverged(RuntimeError):
    def __init__(self, message, trace: TrainTrace):
        super().__init__(message)
        self.trace = trace


# ----------------------------------------------------------------------------
# objective and gradient on raw layer lists


def _outputs(kind, layers, X, clip):
    eff = effective_layers(kind, layers)
    hs, zs = [X], []
    h = X
    for A in eff[:-1]:
        z = h @ A.T
        zs.append(z)
        h = np.maximum(z, 0.0)
        hs.append(h)
    raw = (h @ eff[-1].T)[:, 0]
    out = raw if clip is None else np.clip(raw, -clip, clip)
    return eff, hs, zs, raw, out


def _mse(kind, layers, X, y, clip) -> float:
    out = _outputs(kind, layers, X, clip)[-1]
    return float(np.mean((y - out) ** 2))


def _data_gradient(kind, layers, X, y, clip):
    eff, hs, zs, raw, out = _outputs(kind, layers, X, clip)
    n = X.shape[0]
    dout = -2.0 * (y - out) / n
    if clip is not None:
        dout = dout * (np.abs(raw) < clip)
    grads = [None] * len(layers)
    g = dout[:, None]  # (n, 1)
    grads[-1] = g.T @ hs[-1]
    dh = g @ eff[-1]
    for i in range(len(layers) - 2, -1, -1):
        dz = dh * (zs[i] > 0.0)
        gA = dz.T @ hs[i]
        grads[i] = gA * alpha_prime(layers[i]) if kind == MODIFIED else gA
        if i:
            dh = dz @ eff[i]
    return grads, float(np.mean((y - out) ** 2))


def _penalty_gradient(penalty: PenaltySpec, layers, l1_mode: str):
    if penalty.kind == "l2sq":
        return [2.0 * penalty.lam * V for V in layers]
    if penalty.kind == "l1" and l1_mode == "subgradient":
        return [penalty.lam * np.sign(V) for V in layers]
    return None


def _inputs(params: NetworkParams, dataset: RegressionDataset) -> np.ndarray:
    if dataset.n == 0:
        raise ValueError("dataset is empty")
    return prepare_inputs(dataset.X, params.input_dim, params.augment_input)


def objective(params: NetworkParams, dataset: RegressionDataset, penalty: PenaltySpec) -> float:
    """Mean squared residual plus the penalty on the raw weights."""
    X = _inputs(params, dataset)
    return _mse(params.kind, params.layers, X, dataset.y, params.clip_bound) + penalty.value(params.layers)


def gradient(params: NetworkParams, dataset: RegressionDataset, penalty: PenaltySpec,
             l1_mode: str = "prox") -> list:
    """Gradient of :func:`objective` w.r.t. each raw layer.

    ``l1_mode='prox'`` (default) omits the l1 term, which the optimizer
    handles by soft thresholding; ``'subgradient'`` adds ``lam * sign(V)``.
    """
    if l1_mode not in ("prox", "subgradient"):
        raise ValueError("l1_mode must be 'prox' or 'subgradient'")
    X = _inputs(params, dataset)
    grads, _ = _data_gradient(params.kind, params.layers, X, dataset.y, params.clip_bound)
    extra = _penalty_gradient(penalty, params.layers, l1_mode)
    if extra is not None:
        grads = [g + e for g, e in zip(grads, extra)]
    return grads


def soft_threshold(V, threshold: float) -> np.ndarray:
    return np.sign(V) * np.maximum(np.abs(V) - threshold, 0.0)


def prox_l1_step(params: NetworkParams, threshold: float) -> NetworkParams:
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    return params.replace_layers([soft_threshold(V, threshold) for V in params.layers])


# ----------------------------------------------------------------------------
# optimizer


def init_params(config: TrainConfig, rng) -> list:
    """Uniform ``+-init_scale / sqrt(fan_in)`` effective weights.

    For modified networks the hidden matrices are stored as ``nu(w)``, so the
    effective weights start at ``w`` rather than inside the dead zone.
    """
    layers = []
    L = config.arch.depth
    for i, (rows, cols) in enumerate(config.arch.layer_shapes):
        bound = config.init_scale / math.sqrt(cols)
        w = rng.uniform(-bound, bound, size=(rows, cols))
        layers.append(nu(w) if (config.kind == MODIFIED and i < L) else w)
    return layers


def _nonzeros(kind, layers) -> int:
    return sum(int(np.count_nonzero(A)) for A in effective_layers(kind, layers))


def train(config: TrainConfig, dataset: RegressionDataset, init=None):
    """Mini-batch (proximal) gradient descent with constant step.

    Returns ``(params, trace)``.  With ``keep_best_iterate`` the returned model
    is the iterate (initial one included) with the smallest full-data
    objective.  Deterministic given ``config.seed``.
    """
    arch = config.arch
    expected = dataset.d + (1 if config.augment_input else 0)
    if arch.input_dim != expected:
        raise ValueError(f"architecture input width {arch.input_dim} != data dimension {expected}")
    X = prepare_inputs(dataset.X, dataset.d, config.augment_input)
    y = dataset.y
    n = X.shape[0]
    if n == 0:
        raise ValueError("dataset is empty")

    init_ss, shuffle_ss = np.random.SeedSequence(config.seed).spawn(2)
    rng_shuffle = np.random.default_rng(shuffle_ss)
    if init is None:
        layers = init_params(config, np.random.default_rng(init_ss))
    else:
        layers = [np.array(V, dtype=np.float64) for V in init.layers]
    kind, clip, pen = config.kind, config.clip_bound, config.penalty
    eta = config.step_size
    thr = eta * pen.coefficient if pen.kind == "l1" else 0.0
    bs = n if config.batch_size is None else min(config.batch_size, n)

    def full_objective(ls):
        m = _mse(kind, ls, X, y, clip)
        p = pen.value(ls)
        return m + p, m, p

    trace = TrainTrace()
    obj0 = full_objective(layers)[0]
    trace.initial_objective = obj0
    best_obj, best_layers, best_epoch = obj0, [V.copy() for V in layers], 0

    for epoch in range(1, config.max_epochs + 1):
        order = rng_shuffle.permutation(n) if bs < n else None
        for start in range(0, n, bs):
            if order is None:
                Xb, yb = X, y
            else:
                idx = order[start:start + bs]
                Xb, yb = X[idx], y[idx]
            grads, _ = _data_gradient(kind, layers, Xb, yb, clip)
            extra = _penalty_gradient(pen, layers, "prox")
            if extra is not None:
                grads = [g + e for g, e in zip(grads, extra)]
            layers = [V - eta * g for V, g in zip(layers, grads)]
            if thr > 0:
                layers = [soft_threshold(V, thr) for V in layers]
        obj, m, p = full_objective(layers)
        trace.records.append(EpochRecord(epoch, obj, m, p, _nonzeros(kind, layers)))
        if not math.isfinite(obj) or obj > DIVERGENCE_LIMIT:
            raise TrainingDiverged(f"objective {obj!r} at epoch {epoch}", trace)
        if obj < best_obj:
            best_obj, best_layers, best_epoch = obj, [V.copy() for V in layers], epoch

    if not config.keep_best_iterate:
        best_layers, best_epoch, best_obj = layers, config.max_epochs, trace.records[-1].objective
    trace.best_epoch, trace.best_objective = best_epoch, best_obj
    params = NetworkParams(kind, arch, tuple(best_layers), clip, config.augment_input)
    return params, trace


# ----------------------------------------------------------------------------
# finite-difference verification


def random_smooth_params(config: TrainConfig, rng, margin: float = 1e-3) -> NetworkParams:
    """Random network with every hidden entry at least ``margin`` from ``alpha``'s kinks.

    Roughly a quarter of the hidden entries are placed in the dead zone so the
    zero-gradient branch is exercised too.
    """
    layers = init_params(replace(config, kind=PLAIN), rng)
    L = config.arch.depth
    out = []
    for i, w in enumerate(layers):
        w = np.where(np.abs(w) < 2 * margin, np.copysign(2 * margin, w), w)
        if config.kind == MODIFIED and i < L:
            v = nu(w)
            dead = rng.random(w.shape) < 0.25
            v = np.where(dead, rng.uniform(-(1 - margin), 1 - margin, size=w.shape), v)
            out.append(v)
        else:
            out.append(w)
    return NetworkParams(config.kind, config.arch, tuple(out), config.clip_bound, config.augment_input)


def finite_difference_gradient(params: NetworkParams, dataset: RegressionDataset, penalty: PenaltySpec,
                               h: float = 1e-6) -> list:
    """Central differences of :func:`objective` (penalty included) per raw entry."""
    X = _inputs(params, dataset)
    y = dataset.y
    base = [np.array(V) for V in params.layers]

    def f(ls):
        return _mse(params.kind, ls, X, y, params.clip_bound) + penalty.value(ls)

    out = []
    for i, V in enumerate(base):
        G = np.zeros_like(V)
        for idx in np.ndindex(V.shape):
            plus = [B if k != i else B.copy() for k, B in enumerate(base)]
            minus = [B if k != i else B.copy() for k, B in enumerate(base)]
            plus[i][idx] += h
            minus[i][idx] -= h
            G[idx] = (f(plus) - f(minus)) / (2 * h)
        out.append(G)
    return out


def _kink_free_rows(params: NetworkParams, X: np.ndarray, margin: float) -> np.ndarray:
    eff, hs, zs, raw, _ = _outputs(params.kind, params.layers, X, params.clip_bound)
    ok = np.ones(X.shape[0], dtype=bool)
    for A, h, z in zip(eff, hs, zs):
        # z is identically 0 near the point when no input reaches it; that is no kink
        live = np.abs(h) @ np.abs(A).T > 0
        ok &= np.all((np.abs(z) >= margin) | ~live, axis=1)
    if params.clip_bound is not None:
        ok &= np.abs(np.abs(raw) - params.clip_bound) >= margin
    return ok


def relative_error(a: list, b: list) -> float:
    """``||a - b|| / max(||a||, ||b||)`` over all layers jointly (0 when both vanish)."""
    fa = np.concatenate([np.ravel(x) for x in a])
    fb = np.concatenate([np.ravel(x) for x in b])
    scale = max(np.linalg.norm(fa), np.linalg.norm(fb))
    return float(np.linalg.norm(fa - fb) / scale) if scale > 0 else 0.0


def gradient_check(config: TrainConfig, dataset: RegressionDataset, trials: int = 10, seed=0,
                   h: float = 1e-6, margin: float = 1e-3) -> float:
    """Worst relative discrepancy between :func:`gradient` and central differences.

    Each trial draws a random parameter point away from the kinks of ``alpha``
    and drops the data rows whose pre-activations lie within ``margin`` of 0;
    a point that leaves no row is redrawn.
    The l1 term, if any, is compared in subgradient form (no weight sits at 0).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        for _attempt in range(20):
            params = random_smooth_params(config, rng, margin)
            X = prepare_inputs(dataset.X, dataset.d, params.augment_input)
            keep = _kink_free_rows(params, X, margin)
            if keep.any():
                break
        else:
            raise RuntimeError("no parameter draw left a data row away from the kinks")
        sub = RegressionDataset(dataset.X[keep], dataset.y[keep])
        g = gradient(params, sub, config.penalty, l1_mode="subgradient")
        fd = finite_difference_gradient(params, sub, config.penalty, h)
        worst = max(worst, relative_error(g, fd))
    return worst
