"""Long-range partner links on top of a disk graph.

Each node also links to everyone in its partner tiles at distance about
s/2 = r^gamma / 2. We look at what those shortcuts do to the conductance,
the spectral gap and the schedule, and at the cheaper cluster variant that
keeps only rho partners per tile.

Run: python demos/04_long_range_shortcuts.py
"""

from slotmix import RadioConfig, WalkMatrix, build_cluster_graph, build_disk_graph, build_longrange_graph, sample_points
from slotmix.mac import search_lattice
from slotmix.spectral import conductance_halfspace, spectral_gap

n, r, gamma = 3000, 0.035, 0.5
pts = sample_points(n, 2, 7)
radio = RadioConfig(4.0, 1.0)

graphs = {
    "disk": build_disk_graph(pts, r),
    "cluster rho=1": build_cluster_graph(pts, r, gamma, rho=1),
    "long-range": build_longrange_graph(pts, r, gamma),
}
print(f"r = {r}, s = r^{gamma} = {r**gamma:.3f}")
print(f"{'graph':>14s}  {'degree':>6s}  {'h_half':>7s}  {'gap':>8s}  {'slots':>5s}")
for name, g in graphs.items():
    if g.degrees.min() == 0:
        print(f"{name:>14s}  has isolated nodes, skipped")
        continue
    w = WalkMatrix(g)
    cut = conductance_halfspace(w, pts)
    _, sched = search_lattice(pts, g, radio)
    print(f"{name:>14s}  {g.degrees.mean():6.1f}  {cut.value:7.4f}  {spectral_gap(w):8.5f}  {sched.length:5d}")

print("Tiles here hold under one node on average, so rho=1 keeps nearly every long link.")
print("The shortcuts lift the gap, but long links need wide silence, which inflates the schedule.")
