"""The adjacency head, run forward in numpy.

Each keypoint's feature vector is prefixed with a sinusoidal encoding of its
BEV position, pushed through two separate 2-layer MLPs (origin and
destination embeddings), and every ordered pair meets in an elementwise
product scored by a final linear layer plus sigmoid.
"""

from dataclasses import replace

import numpy as np

from lanekit import (ConnectionFeatures, adjacency_forward, positional_encode,
                     random_head_weights)

pe = positional_encode(np.array([2.0, 10.0]), dims_per_axis=4)
print(f"positional encoding of (2, 10) with 4 dims/axis: {np.round(pe, 3)}")
print(f"squared norm {float(pe @ pe):.3f} == dims_per_axis (sin^2+cos^2 per pair)\n")

rng = np.random.default_rng(5)
S, d_c = 6, 8
weights = random_head_weights(seed=5, d_c=d_c, dims_per_axis=4, hidden=16, embed=8)
features = ConnectionFeatures(f_c=rng.normal(size=(S, d_c)),
                              positions=np.column_stack([rng.uniform(-8, 8, S),
                                                         rng.uniform(3, 60, S)]))

adj = adjacency_forward(features, weights)
print("adjacency probabilities (row = origin, col = destination):")
print(np.round(adj.probs, 3))

# The head is equivariant: permuting keypoints permutes rows and columns.
perm = rng.permutation(S)
permuted = ConnectionFeatures(f_c=features.f_c[perm], positions=features.positions[perm])
again = adjacency_forward(permuted, weights)
identical = np.array_equal(again.probs, adj.probs[np.ix_(perm, perm)])
print(f"\npermutation equivariance holds bitwise: {identical}")

# An untrained final layer is maximally uncertain.
blank = replace(weights, final_w=np.zeros_like(weights.final_w), final_b=0.0)
print(f"zeroed final layer gives sigmoid(0) everywhere: "
      f"{np.unique(adjacency_forward(features, blank).probs).tolist()}")
