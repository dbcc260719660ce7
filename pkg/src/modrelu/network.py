"""Modified and plain ReLU networks without biases.

A modified network of depth ``L`` evaluates

    g(x) = V_L . rho(alpha(V_{L-1}) . ... rho(alpha(V_0) . x))

where ``alpha`` acts entry-wise on the stored hidden matrices.  The stored
matrices are always the raw ``V_i``; ``alpha`` is applied on the fly.  A plain
network is the same composition with raw matrices throughout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

MODIFIED = "modified"
PLAIN = "plain"
KINDS = (MODIFIED, PLAIN)
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Raised for malformed or inconsistent model documents."""


# ----------------------------------------------------------------------------
# scalar maps


def _check_finite_scalar(x) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite input {x!r}")
    return x


def alpha_scalar(x: float) -> float:
    """The sparsifier: shift toward zero by one, annihilating ``[-1, 1]``."""
    x = _check_finite_scalar(x)
    if x < -1.0:
        return x + 1.0
    if x > 1.0:
        return x - 1.0
    return 0.0


def nu_scalar(x: float) -> float:
    """Right inverse of :func:`alpha_scalar`: shift nonzeros away from zero by one."""
    x = _check_finite_scalar(x)
    if x < 0.0:
        return x - 1.0
    if x > 0.0:
        return x + 1.0
    return 0.0


def relu_scalar(x: float) -> float:
    x = _check_finite_scalar(x)
    return x if x > 0.0 else 0.0


def alpha(a) -> np.ndarray:
    """Entry-wise sparsifier on arrays (closed dead zone: ``alpha(+-1) == 0``)."""
    a = np.asarray(a, dtype=np.float64)
    return np.where(a < -1.0, a + 1.0, np.where(a > 1.0, a - 1.0, 0.0))


def alpha_prime(a) -> np.ndarray:
    """Derivative of ``alpha`` with the value 0 taken at the kinks."""
    a = np.asarray(a, dtype=np.float64)
    return (np.abs(a) > 1.0).astype(np.float64)


def nu(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    return np.where(a < 0.0, a - 1.0, np.where(a > 0.0, a + 1.0, 0.0))


def relu(a) -> np.ndarray:
    return np.maximum(np.asarray(a, dtype=np.float64), 0.0)


def matvec(W, v) -> np.ndarray:
    W = np.asarray(W, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if W.ndim != 2 or v.ndim != 1 or W.shape[1] != v.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {W.shape} times vector {v.shape}")
    return W @ v


# ----------------------------------------------------------------------------
# architecture and parameters


@dataclass(frozen=True)
class Architecture:
    """Width vector ``(p_0, ..., p_{L+1})`` with ``p_{L+1} = 1``."""

    widths: tuple

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        if len(widths) < 3:
            raise ValueError("an architecture needs depth L >= 1, i.e. at least 3 widths")
        if any(w < 1 for w in widths):
            raise ValueError(f"all widths must be >= 1, got {widths}")
        if widths[-1] != 1:
            raise ValueError(f"output width must be 1, got {widths[-1]}")
        object.__setattr__(self, "widths", widths)

    @classmethod
    def uniform(cls, input_dim: int, depth: int, width: int) -> "Architecture":
        return cls((input_dim,) + (width,) * depth + (1,))

    @property
    def depth(self) -> int:
        return len(self.widths) - 2

    @property
    def input_dim(self) -> int:
        return self.widths[0]

    @property
    def p_inf(self) -> int:
        """``max(p_0, ..., p_L)``; the output width is excluded."""
        return max(self.widths[:-1])

    @property
    def layer_shapes(self) -> list:
        return [(self.widths[i + 1], self.widths[i]) for i in range(self.depth + 1)]

    @property
    def n_weights(self) -> int:
        return sum(r * c for r, c in self.layer_shapes)


def _frozen_matrix(a, shape=None) -> np.ndarray:
    m = np.array(a, dtype=np.float64, copy=True)
    if m.ndim != 2:
        raise ValueError(f"weight matrices must be 2-D, got ndim={m.ndim}")
    if shape is not None and m.shape != tuple(shape):
        raise ValueError(f"layer shape {m.shape} does not match architecture {tuple(shape)}")
    if not np.all(np.isfinite(m)):
        raise ValueError("weight matrices must have finite entries")
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class NetworkParams:
    """Immutable network: kind, architecture, ``L + 1`` raw matrices, optional clip.

    ``augment_input`` appends a constant 1 to every input, so ``p_0`` counts
    that coordinate; this gives first-layer bias capacity within the
    bias-free class.
    """

    kind: str
    arch: Architecture
    layers: tuple
    clip_bound: Optional[float] = None
    augment_input: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not isinstance(self.arch, Architecture):
            object.__setattr__(self, "arch", Architecture(tuple(self.arch)))
        shapes = self.arch.layer_shapes
        if len(self.layers) != len(shapes):
            raise ValueError(f"expected {len(shapes)} layers for depth {self.arch.depth}, got {len(self.layers)}")
        layers = tuple(_frozen_matrix(m, s) for m, s in zip(self.layers, shapes))
        object.__setattr__(self, "layers", layers)
        if self.clip_bound is not None:
            F = float(self.clip_bound)
            if not (math.isfinite(F) and F > 0):
                raise ValueError(f"clip_bound must be a positive finite number, got {self.clip_bound!r}")
            object.__setattr__(self, "clip_bound", F)
        object.__setattr__(self, "augment_input", bool(self.augment_input))

    @property
    def depth(self) -> int:
        return self.arch.depth

    @property
    def input_dim(self) -> int:
        """Dimension of the points the network is evaluated on."""
        return self.arch.input_dim - (1 if self.augment_input else 0)

    def effective_layers(self) -> list:
        """The matrices the forward pass actually multiplies by."""
        return effective_layers(self.kind, self.layers)

    def replace_layers(self, layers, kind=None) -> "NetworkParams":
        return NetworkParams(kind or self.kind, self.arch, tuple(layers), self.clip_bound, self.augment_input)

    def with_clip(self, clip_bound) -> "NetworkParams":
        return NetworkParams(self.kind, self.arch, self.layers, clip_bound, self.augment_input)

    def __eq__(self, other):
        if not isinstance(other, NetworkParams):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.arch == other.arch
            and self.clip_bound == other.clip_bound
            and self.augment_input == other.augment_input
            and all(np.array_equal(a, b) for a, b in zip(self.layers, other.layers))
        )

    __hash__ = None


def zero_network(arch: Architecture, kind: str = MODIFIED, **kwargs) -> NetworkParams:
    return NetworkParams(kind, arch, tuple(np.zeros(s) for s in arch.layer_shapes), **kwargs)


# ----------------------------------------------------------------------------
# evaluation


def effective_layers(kind: str, layers: Sequence[np.ndarray]) -> list:
    if kind == MODIFIED:
        return [alpha(V) for V in layers[:-1]] + [np.asarray(layers[-1], dtype=np.float64)]
    return [np.asarray(W, dtype=np.float64) for W in layers]


def prepare_inputs(X, input_dim: int, augment: bool, check_domain: bool = True) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != input_dim:
        raise ValueError(f"inputs of shape {X.shape} do not match input dimension {input_dim}")
    if check_domain and X.size and (X.min() < 0.0 or X.max() > 1.0 or not np.all(np.isfinite(X))):
        raise ValueError("inputs must lie in the unit cube [0, 1]^d")
    if augment:
        X = np.hstack([X, np.ones((X.shape[0], 1))])
    return X


def forward_raw(eff_layers: Sequence[np.ndarray], X: np.ndarray) -> np.ndarray:
    """Unclipped network output on a prepared ``(n, p_0)`` batch."""
    h = X
    for A in eff_layers[:-1]:
        h = np.maximum(h @ A.T, 0.0)
    return (h @ eff_layers[-1].T)[:, 0]


def forward(params: NetworkParams, x):
    """Evaluate the network at one point (returns float) or a batch ``(n, d)``."""
    single = np.ndim(x) == 1
    X = prepare_inputs(x, params.input_dim, params.augment_input)
    out = forward_raw(params.effective_layers(), X)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite network output")
    if params.clip_bound is not None:
        out = np.clip(out, -params.clip_bound, params.clip_bound)
    return float(out[0]) if single else out


# ----------------------------------------------------------------------------
# norms and sparsity


def l1_norm(params: NetworkParams) -> float:
    """Sum of absolute raw entries over all layers, output layer included."""
    return math.fsum(np.abs(np.concatenate([V.ravel() for V in params.layers])))


def l2sq_norm(params: NetworkParams) -> float:
    return math.fsum(np.concatenate([V.ravel() for V in params.layers]) ** 2)


def effective_nonzeros(params: NetworkParams) -> int:
    """Nonzeros of ``alpha(V_i)`` for hidden layers plus nonzeros of raw ``V_L``."""
    if params.kind != MODIFIED:
        raise ValueError("effective_nonzeros is defined for modified networks only")
    return sum(int(np.count_nonzero(A)) for A in params.effective_layers())


def hidden_zero_count(params: NetworkParams) -> int:
    """Exactly-zero effective weights among the hidden matrices."""
    eff = params.effective_layers()[:-1]
    return sum(int(A.size - np.count_nonzero(A)) for A in eff)


def count_nonzeros(params: NetworkParams) -> int:
    """Nonzero raw entries, all layers."""
    return sum(int(np.count_nonzero(V)) for V in params.layers)


def scale_plain(params: NetworkParams, a: float) -> NetworkParams:
    """Multiply every layer of a plain network by ``a > 0``.

    Positive homogeneity of the ReLU makes the output scale by ``a**(L+1)``.
    This does not hold through ``alpha``, so modified networks are rejected.
    """
    if params.kind != PLAIN:
        raise ValueError("scale_plain requires a plain network")
    if params.clip_bound is not None:
        raise ValueError("scale_plain requires a network without clip bound")
    a = float(a)
    if not (math.isfinite(a) and a > 0):
        raise ValueError(f"scale factor must be positive, got {a!r}")
    return params.replace_layers([a * W for W in params.layers])


# ----------------------------------------------------------------------------
# serialization


def model_to_dict(params: NetworkParams) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": params.kind,
        "widths": list(params.arch.widths),
        "clip_bound": params.clip_bound,
        "layers": [
            {"rows": int(V.shape[0]), "cols": int(V.shape[1]), "data": [float(v) for v in V.ravel()]}
            for V in params.layers
        ],
    }
    if params.augment_input:
        doc["augment_input"] = True
    return doc


def serialize_model(params: NetworkParams) -> bytes:
    # json writes floats with repr, which round-trips float64 exactly
    return json.dumps(model_to_dict(params), allow_nan=False, indent=1).encode("utf-8")


def _reject_constant(name):
    raise ModelFormatError(f"non-finite number {name} in model document")


def model_from_dict(doc: dict) -> NetworkParams:
    try:
        if doc.get("format_version") != FORMAT_VERSION:
            raise ModelFormatError(f"unsupported format_version {doc.get('format_version')!r}")
        kind = doc["kind"]
        widths = doc["widths"]
        if not isinstance(widths, list) or not all(isinstance(w, int) for w in widths):
            raise ModelFormatError("widths must be an integer array")
        arch = Architecture(tuple(widths))
        layers = []
        for i, lay in enumerate(doc["layers"]):
            rows, cols, data = int(lay["rows"]), int(lay["cols"]), lay["data"]
            if len(data) != rows * cols:
                raise ModelFormatError(f"layer {i}: data length {len(data)} != rows*cols = {rows * cols}")
            layers.append(np.array(data, dtype=np.float64).reshape(rows, cols))
        return NetworkParams(kind, arch, tuple(layers), doc.get("clip_bound"), doc.get("augment_input", False))
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(str(exc)) from exc


def deserialize_model(data) -> NetworkParams:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"malformed model document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    return model_from_dict(doc)


def save_model(params: NetworkParams, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_model(params))


def load_model(path) -> NetworkParams:
    with open(path, "rb") as fh:
        return deserialize_model(fh.read())
