"""Synthetic regression data with certified Hölder-ball targets.

Targets are checked for membership in the ball of ``beta``-smooth functions
of radius ``F`` via sufficient conditions, not by computing Hölder norms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .network import MODIFIED, Architecture, NetworkParams, forward, nu

FAMILIES = ("holder_abs", "cosine_mix", "teacher_network")
NOISE_KINDS = ("gaussian", "bounded_uniform")


@dataclass(frozen=True)
class TargetFunction:
    family: str
    beta: float
    F: float
    d: int
    amplitude: float = 0.0
    center: float = 0.5
    network: Optional[NetworkParams] = None

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.family == "holder_abs":
            return self.amplitude * np.abs(X[:, 0] - self.center) ** self.beta
        if self.family == "cosine_mix":
            return self.amplitude * np.cos(2 * np.pi * X[:, 0])
        return forward(self.network, X)


def cosine_norm_sum(beta: float) -> float:
    """``sum_{k=0}^{floor(beta)+1} (2 pi)^k``.

    Bounds the derivatives of ``cos(2 pi x)`` up to order ``floor(beta)`` plus
    the Hölder seminorm of the top one (by the next derivative, as ``|x-y| <= 1``).
    """
    return sum((2 * math.pi) ** k for k in range(math.floor(beta) + 2))


def output_bound(params: NetworkParams) -> float:
    """Certified sup of ``|g|`` on the unit cube: product of induced inf-norms."""
    bound = 1.0
    for A in params.effective_layers():
        bound *= float(np.abs(A).sum(axis=1).max())
    return bound


def make_target(family: str, beta: float, F: float, d: int = 1, seed=0, amplitude: Optional[float] = None,
                depth: int = 1, width: int = 4, augment_input: bool = False) -> TargetFunction:
    """Build a target certified to lie in the ball of radius ``F``.

    holder_abs:  ``c |x_1 - 1/2|^beta`` for beta in (0, 1], ``c <= F / (1 + 2^-beta)``.
    cosine_mix:  ``a cos(2 pi x_1)`` with ``a = F / cosine_norm_sum(beta)``.
    teacher_network: random modified network of the given depth/width whose
    output layer is rescaled so :func:`output_bound` is at most ``F``.  Only
    the sup-norm bound is certified for this family.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown target family {family!r}")
    if not (beta > 0 and F > 0 and d >= 1):
        raise ValueError("beta, F and d must be positive")
    if family == "holder_abs":
        if beta > 1:
            raise ValueError("holder_abs is certified only for beta in (0, 1]")
        c_max = F / (1 + 2.0**-beta)
        c = c_max if amplitude is None else float(amplitude)
        if c > c_max * (1 + 1e-12):
            raise ValueError(f"amplitude {c} exceeds certified bound {c_max}")
        return TargetFunction(family, beta, F, d, amplitude=c)
    if family == "cosine_mix":
        a_max = F / cosine_norm_sum(beta)
        a = a_max if amplitude is None else float(amplitude)
        if a > a_max * (1 + 1e-12):
            raise ValueError(f"amplitude {a} exceeds certified bound {a_max}")
        return TargetFunction(family, beta, F, d, amplitude=a)

    rng = np.random.default_rng(seed)
    arch = Architecture.uniform(d + (1 if augment_input else 0), depth, width)
    layers = []
    for i, (rows, cols) in enumerate(arch.layer_shapes):
        w = rng.uniform(-1, 1, size=(rows, cols))
        layers.append(nu(w) if i < depth else w)
    net = NetworkParams(MODIFIED, arch, tuple(layers), augment_input=augment_input)
    bound = output_bound(net)
    if bound > F:
        layers[-1] = layers[-1] * (F / bound)
        net = net.replace_layers(layers)
    return TargetFunction(family, beta, F, d, network=net)


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "gaussian"
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not self.sigma >= 0:
            raise ValueError("sigma must be nonnegative")

    @property
    def subgaussian_proxy(self) -> float:
        """Smallest ``s`` with ``E exp(t eps) <= exp(t^2 s^2 / 2)`` certified here.

        Gaussian: sigma.  Uniform on ``[-sigma sqrt3, sigma sqrt3]``: Hoeffding's
        ``(b - a) / 2 = sigma sqrt3``.
        """
        return self.sigma if self.kind == "gaussian" else self.sigma * math.sqrt(3)

    def sample(self, rng, n: int) -> np.ndarray:
        if self.kind == "gaussian":
            return self.sigma * rng.standard_normal(n)
        h = self.sigma * math.sqrt(3)
        return rng.uniform(-h, h, size=n)


def uniform_sampler(rng, m: int, d: int) -> np.ndarray:
    return rng.random((m, d))


@dataclass
class RegressionDataset:
    X: np.ndarray
    y: np.ndarray
    seed: Optional[int] = None
    family: str = "unknown"
    beta: float = float("nan")
    F: float = float("nan")
    sigma: float = float("nan")

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        self.y = np.asarray(self.y, dtype=np.float64).ravel()
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("inputs and responses differ in length")
        if self.X.size and (self.X.min() < 0 or self.X.max() > 1):
            raise ValueError("inputs must lie in [0, 1]^d")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def sample_dataset(target: TargetFunction, noise: NoiseModel, n: int, d: Optional[int] = None, seed=0,
                   sampler: Callable = uniform_sampler) -> RegressionDataset:
    """``Y = g0(X) + eps`` with independent streams for ``X`` and ``eps``.

    The two streams are spawned from ``seed``, so changing the noise level
    leaves the design points unchanged.
    """
    d = target.d if d is None else d
    if n < 1:
        raise ValueError("n must be >= 1")
    ss = np.random.SeedSequence(seed)
    rng_x, rng_eps = (np.random.default_rng(s) for s in ss.spawn(2))
    X = sampler(rng_x, n, d)
    y = target(X)
    if noise.sigma > 0:
        y = y + noise.sample(rng_eps, n)
    return RegressionDataset(X, y, seed=seed, family=target.family, beta=target.beta, F=target.F, sigma=noise.sigma)


@dataclass(frozen=True)
class MCError:
    mse: float
    stderr: float


def mc_l2_error(g_hat: Callable, target: Callable, m: int, seed=0, d: int = 1,
                sampler: Callable = uniform_sampler) -> MCError:
    """Monte-Carlo estimate of the squared ``L2(P_X)`` distance on ``m`` fresh draws."""
    if m < 1:
        raise ValueError("m must be >= 1")
    d = getattr(target, "d", d)
    X = sampler(np.random.default_rng(seed), m, d)
    sq = (np.asarray(g_hat(X), dtype=np.float64) - np.asarray(target(X), dtype=np.float64)) ** 2
    se = float(sq.std(ddof=1) / math.sqrt(m)) if m > 1 else float("nan")
    return MCError(float(sq.mean()), se)


# ----------------------------------------------------------------------------
# dataset files


def write_dataset(ds: RegressionDataset, path) -> None:
    """Header ``n d seed family beta F sigma`` then one ``x_1 ... x_d y`` row per point."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{ds.n} {ds.d} {ds.seed if ds.seed is not None else -1} {ds.family} "
                 f"{ds.beta:.17g} {ds.F:.17g} {ds.sigma:.17g}\n")
        for x, y in zip(ds.X, ds.y):
            fh.write(" ".join(f"{v:.17g}" for v in x) + f" {y:.17g}\n")


def read_dataset(path) -> RegressionDataset:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 7:
            raise ValueError(f"dataset header must have 7 fields, got {len(header)}")
        n, d, seed = int(header[0]), int(header[1]), int(header[2])
        rows = np.loadtxt(fh, dtype=np.float64, ndmin=2) if n else np.zeros((0, d + 1))
    if rows.shape != (n, d + 1):
        raise ValueError(f"dataset body has shape {rows.shape}, header promises {(n, d + 1)}")
    return RegressionDataset(rows[:, :d], rows[:, d], seed=None if seed < 0 else seed, family=header[3],
                             beta=float(header[4]), F=float(header[5]), sigma=float(header[6]))
