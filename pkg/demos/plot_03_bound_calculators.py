"""
Closed-form bounds
==================

Architecture schedule, tuning parameter, entropy bounds and the
entropy-integral condition of the oracle inequality.  At practical sample
sizes the constants are far from binding.
"""

from modrelu import bounds as B
from modrelu.bounds import EntropyQuery, OracleCheckParams, ProblemSpec

spec = ProblemSpec(n=1024, d=1, beta=2, F=1, sigma=1)
arch = B.architecture_for(spec)
print(f"depth {arch.depth}, width {arch.p_inf}")
print("lambda      :", B.tuning_lambda(spec.n))
print("t_n         :", B.theorem_tn(spec))
print("K_n         :", B.envelope_Kn(spec))

for kind in B.ENTROPY_KINDS:
    q = EntropyQuery(kind, L=5, p_inf=20, s=10, delta=0.1, M=2)
    print(f"entropy {kind:<12}: {B.entropy_bound(q):.2f}")

# both conditions fail at n = 1024; the scan shows they fail up to 2^64 too
report = B.oracle_condition_report(OracleCheckParams(spec), scan=True)
print(report.to_text())

# the ratio still decays, slowly, along n = 2^k
ratios = B.ratio_along_dyadic_grid(spec, [10, 20, 40, 60])
print("lhs/rhs at k = 10, 20, 40, 60:", ratios)
