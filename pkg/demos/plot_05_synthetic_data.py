"""
Synthetic regression data
=========================

Targets certified to lie in a Hölder ball, additive noise, and a
Monte-Carlo estimate of the L2 error.
"""

import numpy as np

from modrelu.datagen import NoiseModel, make_target, mc_l2_error, sample_dataset

for family, beta in [("holder_abs", 0.5), ("cosine_mix", 2.0), ("teacher_network", 1.0)]:
    t = make_target(family, beta, F=1.0, seed=3)
    grid = np.linspace(0, 1, 5)[:, None]
    print(f"{family:<16}", np.round(t(grid), 4))

target = make_target("holder_abs", 1.0, 1.0)
ds = sample_dataset(target, NoiseModel("bounded_uniform", 0.2), n=1000, seed=0)
print("noise std:", np.std(ds.y - target(ds.X)))

# the constant predictor 0 against the target
err = mc_l2_error(lambda X: np.zeros(len(X)), target, m=10**5)
print(f"||0 - g0||^2 = {err.mse:.5f} +- {err.stderr:.1e}")
