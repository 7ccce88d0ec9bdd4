"""
A nearest-neighbour graph over pixels
=====================================

Pixels with similar spectra should get similar abundances. We encode
"similar" as a symmetric k-nearest-neighbour graph and penalize abundance
differences along its edges.
"""

import numpy as np

from gnmfsmc import graph_regularizer, knn_graph, laplacian

rng = np.random.default_rng(0)

# Two clusters of 5-band spectra, 6 pixels each
Y = np.hstack([rng.normal(1.0, 0.05, (5, 6)), rng.normal(3.0, 0.05, (5, 6))]).clip(0)
g = knn_graph(Y, p=2)
print(f"{g.size} pixels, {g.edge_count} edges, degrees {g.degrees.astype(int).tolist()}")

# No edge crosses between the clusters
crossing = [(j, l) for j, l, _ in g.edges() if (j < 6) != (l < 6)]
print("edges between clusters:", crossing)

# The Laplacian has zero row sums and is positive semidefinite
L = laplacian(g).toarray()
print("row sums:", L.sum(axis=1).tolist())
print("smallest eigenvalue: %.2e" % np.linalg.eigvalsh(L).min())

# Abundances constant on each cluster cost nothing ...
H_smooth = np.repeat([[0.9, 0.2], [0.1, 0.8]], 6, axis=1)
print("regularizer, smooth H:", graph_regularizer(H_smooth, g))

# ... while random ones do
H_rough = rng.dirichlet([1, 1], size=12).T
print("regularizer, rough H: %.3f" % graph_regularizer(H_rough, g))
