"""
Modified ReLU networks
======================

A modified network passes each hidden weight matrix through the
sparsifier ``alpha`` before multiplying.  Stored weights in ``[-1, 1]``
therefore act as exact zeros.
"""

import numpy as np

from modrelu.network import MODIFIED, Architecture, NetworkParams, alpha, effective_nonzeros, forward, l1_norm

# alpha shrinks toward 0 by 1 and kills the unit interval
v = np.array([-2.5, -1.0, -0.3, 0.0, 0.7, 1.0, 1.75])
print("stored   :", v)
print("effective:", alpha(v))

# a 1-2-1 network: the second hidden unit sits in the dead zone
arch = Architecture((1, 2, 1))
g = NetworkParams(MODIFIED, arch, (np.array([[3.0], [0.9]]), np.array([[1.0, 5.0]])))
for x in (0.0, 0.5, 1.0):
    print(f"g({x}) = {forward(g, [x])}")

# the penalty sees the stored weights, the forward pass the effective ones
print("l1 norm of stored weights:", l1_norm(g))
print("effective nonzeros       :", effective_nonzeros(g))

# clipping to [-F, F] is part of the estimator
print("clipped at F=1:", forward(g.with_clip(1.0), [1.0]))
