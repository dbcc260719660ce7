"""Closed-form calculators for the rate theory of penalized modified networks.

Covers the theoretical architecture and tuning parameter, the approximation
and sparsity budgets of sparse ReLU approximants, the covering-entropy
bounds of sparse and penalized modified classes, and numerical checks of the
conditions of the oracle inequality (entropy integral, threshold on ``t_n``,
and the two conditions of the concentration inequality it rests on).

All logarithms are base 2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import integrate

from .network import Architecture

ENTROPY_KINDS = ("sparse_unit", "sparse_boxM", "modified_l1", "modified_l2")
QUAD_EPSABS = 1e-6
QUAD_EPSREL = 1e-9


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class ProblemSpec:
    n: int
    d: int = 1
    beta: float = 1.0
    F: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n!r}")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d must be a positive integer, got {self.d!r}")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not self.F > 0:
            raise ValueError("F must be positive")
        if not self.sigma >= 0:
            raise ValueError("sigma must be nonnegative")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "d", int(self.d))

    @property
    def log2n(self) -> float:
        return math.log2(self.n)


def _ceil_snapped(x: float, rel: float = 1e-12) -> int:
    # avoid ceil(8.000000000000002) == 9 for exact integer powers/roots
    r = round(x)
    if abs(x - r) <= rel * max(1.0, abs(x)):
        return int(r)
    return math.ceil(x)


def ceil_log2_int(n: int) -> int:
    return (int(n) - 1).bit_length()


def ceil_root_power(n: int, exponent: float) -> int:
    """``ceil(n ** exponent)`` robust to rounding at exact integer values."""
    return _ceil_snapped(float(n) ** exponent)


def depth_schedule(m: int, d: int, beta: float) -> int:
    """Depth ``8 + (m + 5)(1 + ceil(log2(max(d, beta))))``."""
    return 8 + (m + 5) * (1 + _ceil_snapped(math.log2(max(d, beta))))


def width_schedule(N: int, d: int, beta: float) -> int:
    return 6 * (d + math.ceil(beta)) * N


def architecture_for(spec: ProblemSpec) -> Architecture:
    """Theoretical depth ``L_n`` and uniform hidden width of the rate bound."""
    m = ceil_log2_int(spec.n)
    N = ceil_root_power(spec.n, spec.d / (2 * spec.beta + spec.d))
    L = depth_schedule(m, spec.d, spec.beta)
    w = width_schedule(N, spec.d, spec.beta)
    if L > 10**7 or w > 10**12:
        raise OverflowError(f"architecture too large to represent: L={L}, width={w}")
    return Architecture.uniform(spec.d, L, w)


def tuning_lambda(n: int) -> float:
    if n < 2:
        raise ValueError("n must be >= 2")
    return math.log2(n) ** 6 / n


def theorem_tn(spec: ProblemSpec) -> float:
    """``t_n = 8 |p_n|_inf log2(n)^6 / n``."""
    w = architecture_for(spec).p_inf
    return 8 * w * spec.log2n**6 / spec.n


def t_condition_threshold(spec: ProblemSpec) -> float:
    """Lower bound ``2^38 sigma^4 (F^2+1)^2 log2(n)^2 / n`` required of ``t_n``."""
    return 2.0**38 * spec.sigma**4 * (spec.F**2 + 1) ** 2 * spec.log2n**2 / spec.n


def envelope_Kn(spec: ProblemSpec) -> float:
    return max(math.sqrt(32 * spec.sigma**2) * math.sqrt(spec.log2n), spec.F)


def c_sigma_F_ceiling(sigma: float, F: float) -> float:
    return 1.0 / (2.0**20 * sigma**2 * (F**2 + 1))


# ----------------------------------------------------------------------------
# approximation budgets


@dataclass(frozen=True)
class ApproxBudget:
    m: int
    N: int

    def __post_init__(self):
        if self.m < 1 or self.N < 1:
            raise ValueError("m and N must be positive integers")


@dataclass
class ApproxReport:
    error_bound: float
    sparsity_bound: float
    depth: int
    width: int
    guarantee_in_force: bool
    N_min: float


def approx_budget_report(spec: ProblemSpec, budget: ApproxBudget) -> ApproxReport:
    """Sup-norm error and nonzero budget of the sparse approximant with params ``(m, N)``.

    The guarantee requires ``N >= (beta+1)^d or (F+1)e^d`` (whichever is larger);
    ``guarantee_in_force`` is False otherwise and the values are only formulas.
    """
    d, beta, F = spec.d, spec.beta, spec.F
    m, N = budget.m, budget.N
    err = (2 * F + 1) * (1 + d**2 + beta**2) * 6**d * N * 2.0**-m + F * 3**beta * N ** (-beta / d)
    sparsity = 141 * (d + beta + 1) ** (3 + d) * N * (m + 6)
    N_min = max((beta + 1) ** d, (F + 1) * math.e**d)
    return ApproxReport(
        error_bound=err,
        sparsity_bound=sparsity,
        depth=depth_schedule(m, d, beta),
        width=width_schedule(N, d, beta),
        guarantee_in_force=N >= N_min,
        N_min=N_min,
    )


# ----------------------------------------------------------------------------
# entropy bounds


@dataclass(frozen=True)
class EntropyQuery:
    """Arguments of an entropy bound.

    For ``modified_l1`` the class is the l1 ball of radius ``2s``; for
    ``modified_l2`` the squared-l2 ball of radius ``4s``.
    """

    kind: str
    L: int
    p_inf: int
    s: float
    delta: float
    M: float = 1.0

    def __post_init__(self):
        if self.kind not in ENTROPY_KINDS:
            raise ValueError(f"unknown entropy kind {self.kind!r}")
        if not self.delta > 0:
            raise ValueError("covering radius delta must be positive")

    def log_argument(self) -> float:
        L, p, s, dl = self.L, self.p_inf, self.s, self.delta
        if self.kind == "sparse_unit":
            return 8 * L * p / dl
        if self.kind == "sparse_boxM":
            return 8 * L * self.M * p / dl
        return 16 * L * s * p / dl

    def prefactor(self) -> float:
        L, p, s = self.L, self.p_inf, self.s
        return {
            "sparse_unit": 4 * s * L,
            "sparse_boxM": 8 * s * L**2,
            "modified_l1": 16 * (s + p) * L**2,
            "modified_l2": 32 * (s + p) * L**2,
        }[self.kind]

    @property
    def degenerate(self) -> bool:
        """True when the log argument is <= 1 and the bound clamps to 0."""
        return not self.log_argument() > 1.0


def entropy_bound(q: EntropyQuery) -> float:
    """Upper bound on ``log2 N(delta, class, sup-norm)``; clamped at 0."""
    arg = q.log_argument()
    if not arg > 1.0:
        return 0.0
    return q.prefactor() * math.log2(arg)


# ----------------------------------------------------------------------------
# entropy integrals


def _quad(f, a, b) -> float:
    if not a < b:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(f, a, b, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=500)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc)) from exc
    return val


def entropy_integral(q: EntropyQuery, scale: float, lo: float, hi: float) -> float:
    """``int_lo^hi sqrt(entropy_bound(q at radius u / scale)) du``.

    The integrand vanishes once the log argument drops to 1, so the upper
    limit is cut there; the remaining integral is taken in ``v = log u``,
    where the integrand is smooth.
    """
    if not lo < hi:
        return 0.0
    C = q.log_argument() * q.delta  # log argument equals C / radius
    pref = q.prefactor()
    hi = min(hi, C * scale)
    if not lo < hi or pref <= 0:
        return 0.0

    def integrand(v):
        u = math.exp(v)
        arg = C * scale / u
        return math.sqrt(pref * math.log2(arg)) * u if arg > 1.0 else 0.0

    return _quad(integrand, math.log(lo), math.log(hi))


def dudley_limits(spec: ProblemSpec, delta: float) -> tuple:
    K = envelope_Kn(spec)
    return delta / (2.0**11 * K**2), math.sqrt(delta)


def dudley_lhs(spec: ProblemSpec, q: EntropyQuery, delta: float) -> float:
    """Entropy integral of the oracle-inequality condition.

    Integrates ``sqrt(entropy_bound)`` at radius ``u / (4 K_n)`` over
    ``u`` in ``[delta / (2^11 K_n^2), sqrt(delta)]``; 0 if the limits cross.
    Only ``q.delta`` is ignored, the rest of ``q`` fixes the class.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    lo, hi = dudley_limits(spec, delta)
    return entropy_integral(q, 4 * envelope_Kn(spec), lo, hi)


def shell_query(spec: ProblemSpec, j: int, t: float, penalty: str = "l1", lam: Optional[float] = None) -> EntropyQuery:
    """Entropy query for ``{g : lam * |g| <= 2^j t}`` over the theoretical architecture.

    The penalty level ``2^j t`` is converted to a norm budget ``r = 2^j t / lam``
    (``lam`` defaults to the theoretical tuning parameter).  For l1 the class is
    the l1 ball of radius ``r = 2s``; for l2 the squared-l2 ball of radius ``r = 4s``.
    """
    arch = architecture_for(spec)
    lam = tuning_lambda(spec.n) if lam is None else lam
    r = 2.0**j * t / lam
    if penalty == "l1":
        return EntropyQuery("modified_l1", arch.depth, arch.p_inf, r / 2, 1.0)
    if penalty == "l2":
        return EntropyQuery("modified_l2", arch.depth, arch.p_inf, r / 4, 1.0)
    raise ValueError(f"penalty must be 'l1' or 'l2', got {penalty!r}")


@dataclass
class OracleCheckParams:
    spec: ProblemSpec
    j: int = 0
    t: Optional[float] = None
    delta: Optional[float] = None
    c_sigma_F: Optional[float] = None
    omega: float = 0.5
    t_star: Optional[float] = None
    K1: Optional[float] = None
    K2: Optional[float] = None
    penalty: str = "l1"

    def resolved(self) -> "OracleCheckParams":
        """Fill defaults: ``t = t_n``, ``delta = 2^j t / 8``, ``c`` at its ceiling,
        ``t* = 2^j t``, ``K1 = 8 K_n^2``, ``K2 = 16 K_n^2``."""
        spec = self.spec
        t = theorem_tn(spec) if self.t is None else float(self.t)
        delta = 2.0**self.j * t / 8 if self.delta is None else float(self.delta)
        ceiling = c_sigma_F_ceiling(spec.sigma, spec.F)
        c = ceiling if self.c_sigma_F is None else float(self.c_sigma_F)
        K = envelope_Kn(spec)
        return replace(
            self,
            t=t,
            delta=delta,
            c_sigma_F=c,
            t_star=2.0**self.j * t if self.t_star is None else float(self.t_star),
            K1=8 * K**2 if self.K1 is None else float(self.K1),
            K2=16 * K**2 if self.K2 is None else float(self.K2),
        )


@dataclass
class OracleReport:
    n: int
    K_n: float
    t: float
    delta: float
    c_sigma_F: float
    c_ceiling: float
    budget_s: float
    lhs: float
    rhs: float
    ratio: float
    condition_i: bool
    t_threshold: float
    condition_t: bool
    c_within_ceiling: bool
    smallest_n: Optional[int] = None
    scan_max_log2n: Optional[int] = None
    scan_rows: list = field(default_factory=list)

    def rows(self) -> list:
        return [
            ("n", self.n),
            ("K_n", self.K_n),
            ("t", self.t),
            ("delta", self.delta),
            ("c_sigma_F", self.c_sigma_F),
            ("c_sigma_F ceiling", self.c_ceiling),
            ("class budget s", self.budget_s),
            ("integral (lhs)", self.lhs),
            ("c delta sqrt(n)/log2 n (rhs)", self.rhs),
            ("lhs / rhs", self.ratio),
            ("condition (i) holds", self.condition_i),
            ("t threshold", self.t_threshold),
            ("condition (t) holds", self.condition_t),
        ]

    def to_text(self) -> str:
        rows = self.rows()
        width = max(len(k) for k, _ in rows)
        out = [f"{k:<{width}}  {_fmt(v)}" for k, v in rows]
        if self.scan_max_log2n is not None:
            if self.smallest_n is None:
                out.append(f"{'smallest n (both hold)':<{width}}  beyond scan range (n <= 2^{self.scan_max_log2n})")
            else:
                out.append(f"{'smallest n (both hold)':<{width}}  {self.smallest_n}")
        return "\n".join(out)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def oracle_condition_report(params: OracleCheckParams, scan: bool = False, scan_max_log2n: int = 64) -> OracleReport:
    """Evaluate both sides of the entropy-integral condition and the ``t``-threshold.

    With ``scan=True`` the same check (with ``t = t_n`` and ``delta = 2^j t_n / 8``
    at each n) is repeated on ``n = 2^k``, ``k <= scan_max_log2n``, and the
    smallest n where both conditions hold is reported (None if none does).
    """
    p = params.resolved()
    spec = p.spec
    q = shell_query(spec, p.j, p.t, p.penalty)
    lhs = dudley_lhs(spec, q, p.delta)
    rhs = p.c_sigma_F * p.delta * math.sqrt(spec.n) / spec.log2n
    thr = t_condition_threshold(spec)
    ceiling = c_sigma_F_ceiling(spec.sigma, spec.F)
    report = OracleReport(
        n=spec.n,
        K_n=envelope_Kn(spec),
        t=p.t,
        delta=p.delta,
        c_sigma_F=p.c_sigma_F,
        c_ceiling=ceiling,
        budget_s=q.s,
        lhs=lhs,
        rhs=rhs,
        ratio=lhs / rhs if rhs > 0 else math.inf,
        condition_i=lhs <= rhs,
        t_threshold=thr,
        condition_t=p.t >= thr,
        c_within_ceiling=p.c_sigma_F <= ceiling,
    )
    if scan:
        report.scan_max_log2n = scan_max_log2n
        for k in range(1, scan_max_log2n + 1):
            sk = replace(spec, n=2**k)
            sub = oracle_condition_report(
                OracleCheckParams(sk, j=p.j, c_sigma_F=p.c_sigma_F, penalty=p.penalty)
            )
            report.scan_rows.append((2**k, sub.lhs, sub.rhs, sub.ratio, sub.condition_i, sub.condition_t))
            if report.smallest_n is None and sub.condition_i and sub.condition_t:
                report.smallest_n = 2**k
    return report


def ratio_along_dyadic_grid(spec: ProblemSpec, ks, j: int = 0, penalty: str = "l1") -> np.ndarray:
    """``lhs / rhs`` of the entropy-integral condition at ``n = 2^k``."""
    out = []
    for k in ks:
        r = oracle_condition_report(OracleCheckParams(replace(spec, n=2**int(k)), j=j, penalty=penalty))
        out.append(r.ratio)
    return np.array(out)


@dataclass
class ConcentrationReport:
    omega: float
    t_star: float
    K1: float
    K2: float
    cond1_lhs: float
    cond1_rhs: float
    cond1_holds: bool
    cond2_lhs: float
    cond2_rhs: float
    cond2_holds: bool
    delta_admissible: bool

    @property
    def cond1_margin(self) -> float:
        return self.cond1_lhs - self.cond1_rhs

    @property
    def cond2_margin(self) -> float:
        return self.cond2_lhs - self.cond2_rhs

    def to_text(self) -> str:
        rows = [
            ("omega", self.omega),
            ("t*", self.t_star),
            ("K1", self.K1),
            ("K2", self.K2),
            ("cond1 lhs sqrt(n) w sqrt(1-w) sqrt(t*)", self.cond1_lhs),
            ("cond1 rhs 288 max(2K1, sqrt(2K2))", self.cond1_rhs),
            ("cond1 margin", self.cond1_margin),
            ("cond1 holds", self.cond1_holds),
            ("cond2 lhs sqrt(n) w(1-w) delta / (96 sqrt2 max(K1, 2K2))", self.cond2_lhs),
            ("cond2 rhs entropy integral", self.cond2_rhs),
            ("cond2 margin", self.cond2_margin),
            ("cond2 holds", self.cond2_holds),
            ("delta >= t*/8", self.delta_admissible),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {_fmt(v)}" for k, v in rows)


def concentration_condition_check(params: OracleCheckParams) -> ConcentrationReport:
    """Both conditions of the uniform deviation inequality used for the oracle bound.

    The covering numbers of the loss class at radius ``u`` are bounded by those
    of the network shell at ``u / (4 K_n)``.
    """
    p = params.resolved()
    spec = p.spec
    w = p.omega
    if not 0 < w < 1:
        raise ValueError("omega must lie in (0, 1)")
    if not p.t_star > 0:
        raise ValueError("t_star must be positive")
    n = spec.n
    K1, K2 = p.K1, p.K2
    c1_lhs = math.sqrt(n) * w * math.sqrt(1 - w) * math.sqrt(p.t_star)
    c1_rhs = 288 * max(2 * K1, math.sqrt(2 * K2))

    K = envelope_Kn(spec)
    q = shell_query(spec, p.j, p.t, p.penalty)
    kmax = max(K1, 2 * K2)
    c2_lhs = math.sqrt(n) * w * (1 - w) * p.delta / (96 * math.sqrt(2) * kmax)
    lo, hi = w * (1 - w) * p.delta / (16 * kmax), math.sqrt(p.delta)
    c2_rhs = entropy_integral(q, 4 * K, lo, hi)
    return ConcentrationReport(
        omega=w,
        t_star=p.t_star,
        K1=K1,
        K2=K2,
        cond1_lhs=c1_lhs,
        cond1_rhs=c1_rhs,
        cond1_holds=c1_lhs >= c1_rhs,
        cond2_lhs=c2_lhs,
        cond2_rhs=c2_rhs,
        cond2_holds=c2_lhs >= c2_rhs,
        delta_admissible=p.delta >= p.t_star / 8,
    )
