"""
Penalized training
==================

Proximal mini-batch gradient descent on the l1-penalized least squares
objective.  Soft thresholding makes stored weights exactly zero; the dead
zone of ``alpha`` makes many more effective weights zero.
"""

import numpy as np

from modrelu.bounds import tuning_lambda
from modrelu.datagen import NoiseModel, make_target, sample_dataset
from modrelu.network import Architecture, effective_nonzeros, hidden_zero_count
from modrelu.training import PenaltySpec, TrainConfig, gradient_check, train

target = make_target("holder_abs", beta=1.0, F=1.0)
ds = sample_dataset(target, NoiseModel("gaussian", 0.2), n=512, seed=0)
arch = Architecture.uniform(2, depth=3, width=16)  # input x plus a constant 1

for name, lam in [("none", 0.0), ("l1", 1e-6 * tuning_lambda(512))]:
    cfg = TrainConfig(arch, PenaltySpec("l1", lam), step_size=0.05, max_epochs=200, batch_size=32,
                      seed=1, clip_bound=1.0, augment_input=True)
    model, trace = train(cfg, ds)
    print(f"{name:>4}: lambda {lam:.2e}  train mse {trace.records[-1].mse:.4f}  "
          f"effective nonzeros {effective_nonzeros(model)}  zero hidden weights {hidden_zero_count(model)}")

# the backward pass against central differences
err = gradient_check(TrainConfig(arch, PenaltySpec("l2sq", 0.01), augment_input=True), ds, trials=5)
print(f"gradient check: {err:.2e}")

print(trace.to_csv().splitlines()[-1])
