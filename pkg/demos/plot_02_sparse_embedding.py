"""
Embedding sparse networks
=========================

Pushing every nonzero hidden weight of a plain sparse network away from 0
by 1 (the map ``nu``) gives a modified network with the same outputs.  Its
l1 and squared-l2 norms are bounded by ``s(M+1)`` and ``s(M+1)^2``.
"""

import numpy as np

from modrelu.bridge import embed_sparse_to_modified, random_sparse_plain, verify_inclusion_chain
from modrelu.network import Architecture, forward

rng = np.random.default_rng(0)
f = random_sparse_plain(Architecture((2, 8, 8, 1)), 15, 1.0, rng)
g = embed_sparse_to_modified(f)

X = rng.random((5, 2))
print("plain    :", forward(f, X))
print("modified :", forward(g, X))

# the full budget report, as printed by `modrelu embed`
report = verify_inclusion_chain(f, trials=1000, seed=1)
print("\n".join(report.lines()))
