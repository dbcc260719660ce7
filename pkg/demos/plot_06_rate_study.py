"""
Error against sample size
=========================

A small version of the rate study: fit a fixed network at several sample
sizes and regress log median test error on log n.  The full study
(``modrelu rate-study``) uses n up to 4096 and five replicates.
"""

import tempfile

from modrelu.harness import StudyConfig, dump_config, run_rate_study, write_report

cfg = StudyConfig(n_grid=(128, 512, 2048), replicates=3, test_m=5000)
print(dump_config(cfg))

result = run_rate_study(cfg, progress=lambda r: print(f"n={r.n} rep={r.replicate} test mse {r.test_mse:.2e}"))
print(result.to_text())

out = tempfile.mkdtemp(prefix="rate_study_")
for name, path in write_report(result, out).items():
    print(f"{name:>8}: {path}")
