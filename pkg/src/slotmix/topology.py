"""Message-passing graphs built on a PointSet.

Three families are supported:

* ``short``   - the disk graph, all pairs within torus distance r;
* ``long``    - the disk graph plus every node of each of the 2d partner
  tiles of a node's own tile (tiles of side at most eta*r, partners at
  along-axis offset just under s/2 where s = r**gamma);
* ``cluster`` - as ``long`` but a node only adopts the rho partners nearest
  to it inside each partner tile.

Neighbour lists never contain the vertex itself; the walk's holding
probability is added by :mod:`slotmix.spectral`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import InvalidArgument
from .geometry import PointSet, Tiling, partner_offset, tiles_of, torus_delta

__all__ = [
    "TopologyGraph",
    "critical_radius",
    "build_disk_graph",
    "build_longrange_graph",
    "build_cluster_graph",
    "longrange_tiling",
    "check_longrange_params",
    "degree_stats",
    "is_connected",
    "edge_list",
    "edge_lengths",
    "longest_link",
    "write_graph",
    "read_graph",
]

DEFAULT_ETA = 0.25


@dataclass(frozen=True, eq=False)
class TopologyGraph:
    """Undirected simple graph stored as a symmetric boolean CSR matrix."""

    n: int
    adjacency: sp.csr_matrix
    kind: str = "short"
    params: dict = field(default_factory=dict)
    points_seed: int | None = None

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr)

    @property
    def n_edges(self) -> int:
        return int(self.adjacency.nnz // 2)

    def neighbors(self, i: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[i] : a.indptr[i + 1]]

    @property
    def neighbor_lists(self) -> list[list[int]]:
        return [self.neighbors(i).tolist() for i in range(self.n)]

    def edge_set(self) -> set[tuple[int, int]]:
        i, j = edge_list(self)
        return set(zip(i.tolist(), j.tolist()))


def _from_pairs(n, i, j, kind, params, seed) -> TopologyGraph:
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    keep = i != j
    i, j = i[keep], j[keep]
    rows = np.concatenate([i, j])
    cols = np.concatenate([j, i])
    adj = sp.coo_matrix((np.ones(rows.size, dtype=bool), (rows, cols)), shape=(n, n)).tocsr()
    # duplicates are summed by the conversion; for bool data that is logical or
    adj.sum_duplicates()
    adj.sort_indices()
    adj.data[:] = True
    return TopologyGraph(n, adj, kind, dict(params), seed)


def from_neighbor_lists(neighbors, kind="custom", params=None, points_seed=None) -> TopologyGraph:
    """Build a graph from per-vertex neighbour lists (symmetrised)."""
    n = len(neighbors)
    i = np.concatenate([np.full(len(nb), v, dtype=np.int64) for v, nb in enumerate(neighbors)] or [np.zeros(0, np.int64)])
    j = np.concatenate([np.asarray(nb, dtype=np.int64) for nb in neighbors] or [np.zeros(0, np.int64)])
    return _from_pairs(n, i, j, kind, params or {}, points_seed)


def critical_radius(n: int, d: int) -> float:
    """(ln n / n)^(1/d), the connectivity threshold of the disk graph."""
    if n < 2:
        raise InvalidArgument("critical radius needs n >= 2")
    if d < 1:
        raise InvalidArgument("d must be >= 1")
    return (math.log(n) / n) ** (1.0 / d)


def _disk_pairs(pts: PointSet, r: float) -> np.ndarray:
    if pts.n < 2:
        return np.zeros((0, 2), dtype=np.int64)
    tree = cKDTree(pts.coords, boxsize=1.0)
    return tree.query_pairs(r, output_type="ndarray")


def build_disk_graph(pts: PointSet, r: float) -> TopologyGraph:
    if not (0.0 < r <= 0.5):
        raise InvalidArgument(f"disk radius must be in (0, 1/2], got {r}")
    pairs = _disk_pairs(pts, r)
    return _from_pairs(pts.n, pairs[:, 0], pairs[:, 1], "short", {"r": r}, pts.seed)


def longrange_tiling(d: int, r: float, eta: float) -> Tiling:
    """Equal tiles of side 1/ceil(1/(eta*r)), i.e. the largest equal side <= eta*r."""
    count = int(math.ceil(1.0 / (eta * r) - 1e-9))
    return Tiling.with_count(d, count)


def check_longrange_params(d: int, r: float, gamma: float, eta: float) -> tuple[float, Tiling, int]:
    """Validate a long-range construction; return (s, tiling, partner offset).

    The partner geometry is only usable when every point of a partner tile is
    within s/sqrt(2) of every point of the home tile, i.e.

        sqrt((d-1)*side^2 + (s/2 + side)^2) <= s/sqrt(2)

    which is the constraint on eta checked here (side <= eta*r).
    """
    if not (0.0 < r <= 0.5):
        raise InvalidArgument(f"short range must be in (0, 1/2], got {r}")
    if not (0.0 < gamma < 1.0):
        raise InvalidArgument(f"gamma must be in (0, 1), got {gamma}")
    if eta <= 0.0:
        raise InvalidArgument("eta must be positive")
    s = r ** gamma
    if not s > 2.0 * eta * r:
        raise InvalidArgument(f"violated s > 2*eta*r: s={s:.6g}, 2*eta*r={2 * eta * r:.6g}")
    tiling = longrange_tiling(d, r, eta)
    side = tiling.side
    reach = math.sqrt((d - 1) * side**2 + (s / 2.0 + side) ** 2)
    if reach > s / math.sqrt(2.0) * (1 + 1e-12):
        raise InvalidArgument(
            "violated sqrt((d-1)*side^2 + (s/2+side)^2) <= s/sqrt(2): "
            f"{reach:.6g} > {s / math.sqrt(2.0):.6g}; reduce eta"
        )
    if s / 2.0 >= 0.5:
        raise InvalidArgument(f"violated s/2 < 1/2 on the unit torus: s={s:.6g}")
    k = partner_offset(side, s)
    return s, tiling, k


def _tile_members(pts: PointSet, tiling: Tiling):
    idx = tiles_of(pts.coords, tiling)
    m = tiling.counts_per_axis
    flat = np.ravel_multi_index(idx.T, (m,) * pts.dimension) if pts.n else np.zeros(0, np.int64)
    order = np.argsort(flat, kind="stable")
    bounds = np.searchsorted(flat[order], np.arange(tiling.n_tiles + 1))
    return idx, flat, order, bounds


def _partner_flat(tile_idx: np.ndarray, m: int, k: int, axis: int, sign: int) -> np.ndarray:
    shifted = tile_idx.copy()
    shifted[..., axis] = (shifted[..., axis] + sign * k) % m
    return np.ravel_multi_index(np.moveaxis(shifted, -1, 0), (m,) * tile_idx.shape[-1])


def _long_pairs(pts: PointSet, tiling: Tiling, k: int, rho: int | None):
    d = pts.dimension
    m = tiling.counts_per_axis
    idx, flat, order, bounds = _tile_members(pts, tiling)
    rows, cols = [], []
    if rho is None:
        occupied = np.flatnonzero(np.diff(bounds))
        occ_idx = np.stack(np.unravel_index(occupied, (m,) * d), axis=-1)
        for axis in range(d):
            for sign in (1, -1):
                partners = _partner_flat(occ_idx, m, k, axis, sign)
                for c, p in zip(occupied, partners):
                    home = order[bounds[c] : bounds[c + 1]]
                    away = order[bounds[p] : bounds[p + 1]]
                    if away.size == 0:
                        continue
                    rows.append(np.repeat(home, away.size))
                    cols.append(np.tile(away, home.size))
    elif rho > 0:
        coords = pts.coords
        for axis in range(d):
            for sign in (1, -1):
                partners = _partner_flat(idx, m, k, axis, sign)
                for v in range(pts.n):
                    p = partners[v]
                    away = order[bounds[p] : bounds[p + 1]]
                    if away.size == 0:
                        continue
                    if away.size > rho:
                        delta = torus_delta(coords[away], coords[v])
                        dist = np.sqrt(np.sum(delta * delta, axis=1))
                        away = away[np.lexsort((away, dist))[:rho]]
                    rows.append(np.full(away.size, v, dtype=np.int64))
                    cols.append(away)
    if rows:
        return np.concatenate(rows), np.concatenate(cols)
    return np.zeros(0, np.int64), np.zeros(0, np.int64)


def build_longrange_graph(pts: PointSet, r: float, gamma: float, eta: float = DEFAULT_ETA) -> TopologyGraph:
    s, tiling, k = check_longrange_params(pts.dimension, r, gamma, eta)
    short = _disk_pairs(pts, r)
    li, lj = _long_pairs(pts, tiling, k, None)
    params = {"r": r, "gamma": gamma, "eta": eta, "s": s}
    return _from_pairs(
        pts.n, np.concatenate([short[:, 0], li]), np.concatenate([short[:, 1], lj]), "long", params, pts.seed
    )


def build_cluster_graph(pts: PointSet, r: float, gamma: float, eta: float = DEFAULT_ETA, rho: int = 1) -> TopologyGraph:
    if rho < 0:
        raise InvalidArgument("rho must be >= 0")
    s, tiling, k = check_longrange_params(pts.dimension, r, gamma, eta)
    short = _disk_pairs(pts, r)
    li, lj = _long_pairs(pts, tiling, k, int(rho))
    params = {"r": r, "gamma": gamma, "eta": eta, "s": s, "rho": int(rho)}
    return _from_pairs(
        pts.n, np.concatenate([short[:, 0], li]), np.concatenate([short[:, 1], lj]), "cluster", params, pts.seed
    )


def degree_stats(g: TopologyGraph) -> tuple[int, int, float, float]:
    deg = g.degrees
    if deg.size == 0:
        return 0, 0, 0.0, 0.0
    return int(deg.min()), int(deg.max()), float(deg.mean()), float(deg.std())


def is_connected(g: TopologyGraph) -> bool:
    if g.n <= 1:
        return True
    ncomp, _ = connected_components(g.adjacency, directed=False)
    return ncomp == 1


def edge_list(g: TopologyGraph) -> tuple[np.ndarray, np.ndarray]:
    """Undirected edges as index arrays (i, j) with i < j."""
    coo = sp.triu(g.adjacency, k=1).tocoo()
    order = np.lexsort((coo.col, coo.row))
    return coo.row[order].astype(np.int64), coo.col[order].astype(np.int64)


def edge_lengths(pts: PointSet, g: TopologyGraph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    i, j = edge_list(g)
    delta = torus_delta(pts.coords[i], pts.coords[j])
    return i, j, np.sqrt(np.sum(delta * delta, axis=1))


def longest_link(pts: PointSet, g: TopologyGraph) -> float:
    _, _, length = edge_lengths(pts, g)
    return float(length.max()) if length.size else 0.0


def write_graph(g: TopologyGraph, path) -> None:
    params = " ".join(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}" for k, v in g.params.items())
    header = f"{g.n} {g.kind}" + (f" {params}" if params else "")
    if g.points_seed is not None:
        header += f" points_seed={g.points_seed}"
    lines = [header] + [" ".join(str(v) for v in g.neighbors(i)) for i in range(g.n)]
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def read_graph(path) -> TopologyGraph:
    lines = Path(path).read_text().split("\n")
    head = lines[0].split()
    n, kind = int(head[0]), head[1]
    params = {}
    seed = None
    for tok in head[2:]:
        key, _, val = tok.partition("=")
        if key == "points_seed":
            seed = int(val)
        else:
            params[key] = _parse_value(val)
    neighbors = [[int(v) for v in lines[1 + i].split()] for i in range(n)]
    return from_neighbor_lists(neighbors, kind, params, seed)
