"""Average consensus on a random disk graph, and how fast it mixes.

Run: python demos/01_consensus_on_a_disk_graph.py
"""

import numpy as np

from slotmix import WalkMatrix, build_disk_graph, critical_radius, sample_points, second_eigenvalue
from slotmix.spectral import consensus_iterate, empirical_mixing_time, sinclair_bounds

n, d, seed = 250, 2, 4
pts = sample_points(n, d, seed)
r = 2.5 * critical_radius(n, d)
g = build_disk_graph(pts, r)
print(f"{n} nodes on the unit torus, r = {r:.3f} (2.5 r_c), mean degree {g.degrees.mean():.1f}")

w = WalkMatrix(g)
mu2 = second_eigenvalue(w)
print(f"second eigenvalue {mu2:.5f}, spectral gap {1 - mu2:.5f}")

# Sensor readings: a smooth field plus noise. The walk is reversible with respect to
# degree, so every node converges to the degree-weighted average.
rng = np.random.default_rng(0)
z0 = np.sin(2 * np.pi * pts.coords[:, 0]) + rng.normal(0, 0.1, n)
target = np.average(z0, weights=g.degrees)
for k in (0, 10, 50, 200, 1000):
    z = consensus_iterate(w, z0, k)
    print(f"  after {k:4d} iterations: max deviation from the limit {np.abs(z - target).max():.2e}")

eps = 1 / n
lo, hi = sinclair_bounds(mu2, n, eps)
t = empirical_mixing_time(w, eps)
print(f"mixing time at eps=1/n: {t} iterations (spectral bounds {lo:.1f} .. {hi:.1f})")
