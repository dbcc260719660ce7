"""Two-way bridge between sparse plain ReLU networks and modified networks.

Embedding a plain network with ``s`` nonzero weights in ``[-M, M]`` gives a
modified network with the same output, l1 norm at most ``s(M+1)`` and squared
l2 norm at most ``s(M+1)**2``.  Reading a modified network as a plain one
(hidden matrices replaced by their ``alpha`` images) recovers a sparse
network whose hidden nonzero count is bounded by the l1 norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .network import (
    MODIFIED,
    PLAIN,
    Architecture,
    NetworkParams,
    alpha,
    forward,
    l1_norm,
    l2sq_norm,
    nu,
)


@dataclass(frozen=True)
class SparsityCertificate:
    s: int
    M: float


def certify_sparse(params: NetworkParams) -> SparsityCertificate:
    """Exact nonzero count and largest magnitude of a plain network."""
    if params.kind != PLAIN:
        raise ValueError("certify_sparse requires a plain network")
    flat = np.concatenate([W.ravel() for W in params.layers])
    s = int(np.count_nonzero(flat))
    M = float(np.abs(flat).max()) if s else float(np.finfo(np.float64).tiny)
    return SparsityCertificate(s, M)


def embed_sparse_to_modified(params: NetworkParams) -> NetworkParams:
    """``V_i = nu(W_i)`` for hidden layers, ``V_L = W_L``."""
    if params.kind != PLAIN:
        raise ValueError("embed_sparse_to_modified requires a plain network")
    layers = [nu(W) for W in params.layers[:-1]] + [params.layers[-1]]
    return params.replace_layers(layers, kind=MODIFIED)


def extract_plain_from_modified(params: NetworkParams) -> NetworkParams:
    """Read a modified network as a plain one with matrices ``alpha(V_i)``, ``V_L``."""
    if params.kind != MODIFIED:
        raise ValueError("extract_plain_from_modified requires a modified network")
    layers = [alpha(V) for V in params.layers[:-1]] + [params.layers[-1]]
    return params.replace_layers(layers, kind=PLAIN)


def random_sparse_plain(arch: Architecture, s: int, M: float, rng, **kwargs) -> NetworkParams:
    """Each entry is nonzero with probability ``s / n_weights``, uniform on ``[-M, M]``.

    The realized nonzero count is random; use :func:`certify_sparse` for the
    exact value.
    """
    prob = min(1.0, s / arch.n_weights)
    layers = []
    for shape in arch.layer_shapes:
        mask = rng.random(shape) < prob
        layers.append(np.where(mask, rng.uniform(-M, M, size=shape), 0.0))
    return NetworkParams(PLAIN, arch, tuple(layers), **kwargs)


@dataclass
class InclusionReport:
    s: int
    M: float
    p_inf: int
    max_discrepancy_embed: float
    max_discrepancy_extract: float
    l1: float
    l1_budget: float
    l2sq: float
    l2sq_budget: float
    hidden_nonzeros: int
    hidden_nonzero_budget_l1: int
    hidden_nonzero_budget_l2: int
    extracted_nonzeros: int
    extracted_max_abs: float
    roundtrip_exact: bool
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def lines(self) -> list:
        return [
            f"sparsity s                : {self.s}",
            f"magnitude M               : {self.M:.17g}",
            f"|p|_inf                   : {self.p_inf}",
            f"l1 norm (embedded)        : {self.l1:.17g}  <= s(M+1) = {self.l1_budget:.17g}",
            f"l2^2 norm (embedded)      : {self.l2sq:.17g}  <= s(M+1)^2 = {self.l2sq_budget:.17g}",
            f"hidden nonzeros           : {self.hidden_nonzeros}  <= floor(l1) = {self.hidden_nonzero_budget_l1}",
            f"extracted nonzeros        : {self.extracted_nonzeros}  <= floor(s(M+1)) + |p|_inf = "
            f"{math.floor(self.l1_budget) + self.p_inf}",
            f"max |embed - original|    : {self.max_discrepancy_embed:.3g}",
            f"max |extract - embedded|  : {self.max_discrepancy_extract:.3g}",
            f"round-trip weights exact  : {self.roundtrip_exact}",
            "violations                : " + (", ".join(self.violations) if self.violations else "none"),
        ]


def verify_inclusion_chain(params: NetworkParams, trials: int = 1000, seed=0) -> InclusionReport:
    """Embed, re-extract and check every budget of both inclusion chains."""
    if params.kind != PLAIN:
        raise ValueError("verify_inclusion_chain requires a plain network")
    cert = certify_sparse(params)
    g = embed_sparse_to_modified(params)
    f_back = extract_plain_from_modified(g)
    rng = np.random.default_rng(seed)
    X = rng.random((int(trials), params.input_dim))
    y0 = forward(params, X)
    dis_embed = float(np.max(np.abs(forward(g, X) - y0))) if trials else 0.0
    dis_extract = float(np.max(np.abs(forward(f_back, X) - forward(g, X)))) if trials else 0.0

    s, M = cert.s, cert.M
    l1, l2 = l1_norm(g), l2sq_norm(g)
    l1_budget = s * (M + 1.0)
    l2_budget = s * (M + 1.0) ** 2
    p_inf = params.arch.p_inf
    hidden_nz = sum(int(np.count_nonzero(A)) for A in f_back.layers[:-1])
    extracted_nz = sum(int(np.count_nonzero(A)) for A in f_back.layers)
    extracted_max = max((float(np.abs(A).max()) for A in f_back.layers), default=0.0)
    roundtrip = all(np.array_equal(a, b) for a, b in zip(f_back.layers, params.layers))

    violations = []
    if dis_embed != 0.0:
        violations.append("embed output differs")
    if dis_extract != 0.0:
        violations.append("extract output differs")
    if not l1 <= l1_budget:
        violations.append("l1 budget")
    if not l2 <= l2_budget:
        violations.append("l2sq budget")
    if not hidden_nz <= math.floor(l1):
        violations.append("hidden nonzeros exceed floor(l1)")
    if not hidden_nz <= math.floor(l2):
        violations.append("hidden nonzeros exceed floor(l2sq)")
    if not extracted_nz <= math.floor(l1_budget) + p_inf:
        violations.append("extracted nonzeros (l1 chain)")
    if not extracted_nz <= math.floor(l2_budget) + p_inf:
        violations.append("extracted nonzeros (l2 chain)")
    if not extracted_max <= l1_budget:
        violations.append("extracted magnitude")
    if not roundtrip:
        violations.append("round-trip weights")

    return InclusionReport(
        s=s,
        M=M,
        p_inf=p_inf,
        max_discrepancy_embed=dis_embed,
        max_discrepancy_extract=dis_extract,
        l1=l1,
        l1_budget=l1_budget,
        l2sq=l2,
        l2sq_budget=l2_budget,
        hidden_nonzeros=hidden_nz,
        hidden_nonzero_budget_l1=math.floor(l1),
        hidden_nonzero_budget_l2=math.floor(l2),
        extracted_nonzeros=extracted_nz,
        extracted_max_abs=extracted_max,
        roundtrip_exact=roundtrip,
        violations=violations,
    )
