"""Natural lazy random walk, consensus iteration and the mixing diagnostics.

The walk on a graph with degrees d_i holds with probability 1/2 and moves to
each neighbour with probability 1/(2 d_i), so P = I/2 + D^{-1}A/2. The
consensus update ``z <- P z`` (row action) and the distribution update
``pi <- P^T pi`` (column action) both come from this one operator.

Eigenvalues are computed on the symmetrised form
S = D^{1/2} P D^{-1/2} = I/2 + D^{-1/2} A D^{-1/2} / 2, which shares P's
spectrum and is positive semidefinite.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .errors import (
    ConvergenceError,
    DegenerateVertexError,
    DisconnectedGraphError,
    InvalidArgument,
    SizeLimitError,
)
from .geometry import PointSet, torus_delta
from .topology import TopologyGraph, edge_list, is_connected

__all__ = [
    "WalkMatrix",
    "Distribution",
    "apply_walk",
    "consensus_iterate",
    "tv_distance",
    "stationary_distribution",
    "second_eigenvalue",
    "spectral_gap",
    "empirical_mixing_time",
    "sinclair_bounds",
    "conductance_bruteforce",
    "conductance_halfspace",
    "HalfspaceCut",
    "cheeger_bounds",
    "spectral_report",
    "SPECTRAL_COLUMNS",
    "write_spectral_report",
]

DENSE_THRESHOLD = 2000
BRUTEFORCE_LIMIT = 22
MIXING_ALL_STARTS = 300


class WalkMatrix:
    """Read-only view of the lazy natural walk on a graph."""

    def __init__(self, graph: TopologyGraph):
        deg = graph.degrees
        if graph.n > 1 and np.any(deg == 0):
            bad = np.flatnonzero(deg == 0)
            raise DegenerateVertexError(f"{bad.size} isolated vertices (first: {int(bad[0])}); walk undefined")
        self.graph = graph
        self.n = graph.n
        self.degrees = deg.astype(np.float64)
        self._adj = graph.adjacency.astype(np.float64)

    def _trivial(self) -> bool:
        return self.n == 1

    def rows(self, z: np.ndarray) -> np.ndarray:
        """z -> P z: out_i = z_i/2 + sum_{j~i} z_j / (2 d_i)."""
        z = np.asarray(z, dtype=np.float64)
        if self._trivial():
            return z.copy()
        scale = 0.5 / self.degrees
        nb = self._adj @ z
        return 0.5 * z + (scale[:, None] * nb if z.ndim == 2 else scale * nb)

    def columns(self, v: np.ndarray) -> np.ndarray:
        """v -> P^T v: out_i = v_i/2 + sum_{j~i} v_j / (2 d_j)."""
        v = np.asarray(v, dtype=np.float64)
        if self._trivial():
            return v.copy()
        scale = 0.5 / self.degrees
        w = scale[:, None] * v if v.ndim == 2 else scale * v
        return 0.5 * v + self._adj @ w

    def transition_matrix(self) -> sp.csr_matrix:
        if self._trivial():
            return sp.csr_matrix(np.ones((1, 1)))
        dinv = sp.diags(0.5 / self.degrees)
        return (0.5 * sp.identity(self.n, format="csr") + dinv @ self._adj).tocsr()

    def symmetrized(self) -> sp.csr_matrix:
        if self._trivial():
            return sp.csr_matrix(np.ones((1, 1)))
        root = sp.diags(1.0 / np.sqrt(self.degrees))
        return (0.5 * sp.identity(self.n, format="csr") + 0.5 * (root @ self._adj @ root)).tocsr()

    def dense(self) -> np.ndarray:
        return self.transition_matrix().toarray()


@dataclass(frozen=True, eq=False)
class Distribution:
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12 * max(1, w.size):
            raise InvalidArgument("distribution weights must be nonnegative and sum to 1")
        object.__setattr__(self, "weights", w)

    def __array__(self, dtype=None, copy=None):
        return self.weights if dtype is None else self.weights.astype(dtype)

    def __len__(self):
        return self.weights.size


def apply_walk(w: WalkMatrix, v):
    """One step of the walk.

    A :class:`Distribution` is pushed forward (column action); anything else
    is treated as a vector of node values and averaged (row action).
    """
    if isinstance(v, Distribution):
        if len(v) != w.n:
            raise InvalidArgument("dimension mismatch")
        out = w.columns(v.weights)
        return Distribution(out / out.sum())
    v = np.asarray(v, dtype=np.float64)
    if v.shape[0] != w.n:
        raise InvalidArgument("dimension mismatch")
    return w.rows(v)


def _require_connected(w: WalkMatrix):
    if not is_connected(w.graph):
        raise DisconnectedGraphError("graph is disconnected; stationary distribution is not unique")


def consensus_iterate(w: WalkMatrix, z0, k: int) -> np.ndarray:
    if k < 0:
        raise InvalidArgument("k must be >= 0")
    _require_connected(w)
    z = np.array(z0, dtype=np.float64)
    for _ in range(k):
        z = w.rows(z)
    return z


def tv_distance(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidArgument("distributions have different lengths")
    return 0.5 * float(np.abs(a - b).sum())


def stationary_distribution(g: TopologyGraph) -> Distribution:
    if g.n == 1:
        return Distribution(np.ones(1))
    deg = g.degrees.astype(np.float64)
    if np.any(deg == 0):
        raise DegenerateVertexError("isolated vertex")
    if not is_connected(g):
        raise DisconnectedGraphError("graph is disconnected; stationary distribution is not unique")
    return Distribution(deg / deg.sum())


def second_eigenvalue(
    w: WalkMatrix,
    tol: float = 1e-10,
    method: str = "auto",
    dense_threshold: int = DENSE_THRESHOLD,
    maxiter: int = 10**6,
) -> float:
    """Second-largest eigenvalue mu2 of the walk.

    ``method`` is ``"dense"`` (LAPACK on the full symmetric matrix),
    ``"iterative"`` (implicitly restarted Lanczos on S with the known top
    eigenvector sqrt(pi) projected out), or ``"auto"`` which picks dense up to
    ``dense_threshold`` vertices.
    """
    n = w.n
    if n < 2:
        raise InvalidArgument("second eigenvalue needs at least two vertices")
    if method == "auto":
        method = "dense" if n <= dense_threshold else "iterative"
    if n <= 3:
        method = "dense"
    S = w.symmetrized()
    if method == "dense":
        vals = np.linalg.eigvalsh(S.toarray())
        return float(vals[-2])
    if method != "iterative":
        raise InvalidArgument(f"unknown eigensolver method {method!r}")

    top = np.sqrt(w.degrees / w.degrees.sum())

    def matvec(x):
        x = np.ravel(x)
        y = S @ x
        return y - top * (top @ x)

    op = LinearOperator((n, n), matvec=matvec, dtype=np.float64)
    v0 = np.random.Generator(np.random.PCG64(12345)).standard_normal(n)
    v0 -= top * (top @ v0)
    ncv = min(n, 32)
    try:
        vals = eigsh(op, k=1, which="LA", tol=tol, maxiter=maxiter // max(ncv, 1) + 1, ncv=ncv, v0=v0,
                     return_eigenvectors=False)
    except ArpackNoConvergence as exc:
        residual = None
        if exc.eigenvalues is not None and len(exc.eigenvalues):
            residual = float(np.max(exc.eigenvalues))
        raise ConvergenceError("Lanczos iteration did not converge", residual=residual) from exc
    return float(vals[-1])


def spectral_gap(w: WalkMatrix, **kwargs) -> float:
    return 1.0 - second_eigenvalue(w, **kwargs)


def empirical_mixing_time(
    w: WalkMatrix,
    eps: float,
    start_policy: str | int = "auto",
    threshold: int = MIXING_ALL_STARTS,
    seed: int = 0,
    max_steps: int = 10**6,
) -> int:
    """Smallest k with max over delta starts of TV(P^k delta, pi*) <= eps.

    Worst-case starts over all initial distributions are attained at point
    masses, so ``start_policy="all"`` is exact. An integer policy samples that
    many start vertices; ``"auto"`` uses all starts up to ``threshold``
    vertices and 64 sampled starts above.
    """
    if not (0.0 < eps < 1.0):
        raise InvalidArgument("eps must lie in (0, 1)")
    n = w.n
    if n == 1:
        return 0
    pi = stationary_distribution(w.graph).weights
    if start_policy == "auto":
        start_policy = "all" if n <= threshold else 64
    if start_policy == "all":
        starts = np.arange(n)
    else:
        rng = np.random.Generator(np.random.PCG64(seed))
        starts = np.sort(rng.choice(n, size=min(int(start_policy), n), replace=False))
    M = np.zeros((n, starts.size))
    M[starts, np.arange(starts.size)] = 1.0
    dist = 0.5 * np.abs(M - pi[:, None]).sum(axis=0).max()
    k = 0
    while dist > eps:
        if k >= max_steps:
            raise ConvergenceError(f"mixing not reached within {max_steps} steps", residual=float(dist))
        M = w.columns(M)
        k += 1
        dist = 0.5 * np.abs(M - pi[:, None]).sum(axis=0).max()
    return k


def sinclair_bounds(mu2: float, n: int, eps: float) -> tuple[float, float]:
    """Lower and upper eps-mixing bounds from the second eigenvalue."""
    if not (0.0 <= mu2 < 1.0):
        raise InvalidArgument(f"mu2 must be in [0, 1), got {mu2}")
    gap = 1.0 - mu2
    lower = mu2 * math.log(1.0 / (2.0 * eps)) / (2.0 * gap)
    upper = (math.log(n) - math.log(eps)) / gap
    return lower, upper


def conductance_bruteforce(w: WalkMatrix, limit: int = BRUTEFORCE_LIMIT) -> tuple[float, tuple[int, ...]]:
    """Exact conductance by enumerating every vertex subset.

    For the natural walk each directed edge carries the same ergodic flow
    pi_i p_ij = 1/(2 vol(V)), so Q(S, S^c)/pi(S) = cut(S) / (2 vol(S)).
    Cut sizes and volumes of all 2^n subsets are built incrementally, one
    vertex bit at a time.
    """
    g = w.graph
    n = g.n
    if n > limit:
        raise SizeLimitError(f"brute-force conductance limited to n <= {limit}, got {n}")
    if n < 2:
        raise InvalidArgument("conductance needs at least two vertices")
    deg = g.degrees.astype(np.int64)
    adjmask = np.zeros(n, dtype=np.int64)
    for i in range(n):
        for j in g.neighbors(i):
            adjmask[i] |= 1 << int(j)
    size = 1 << n
    cut = np.zeros(size, dtype=np.int64)
    vol = np.zeros(size, dtype=np.int64)
    for k in range(n):
        lo = 1 << k
        prev = np.arange(lo, dtype=np.int64)
        inside = np.bitwise_count(prev & adjmask[k]).astype(np.int64)
        cut[lo : 2 * lo] = cut[:lo] + deg[k] - 2 * inside
        vol[lo : 2 * lo] = vol[:lo] + deg[k]
    total = int(deg.sum())
    valid = (vol > 0) & (2 * vol <= total)
    ratio = np.full(size, np.inf)
    ratio[valid] = cut[valid] / (2.0 * vol[valid])
    best = int(np.argmin(ratio))
    subset = tuple(i for i in range(n) if best >> i & 1)
    return float(ratio[best]), subset


@dataclass(frozen=True)
class HalfspaceCut:
    value: float
    flow: float
    mass: float
    short_edges: int
    long_edges: int


def conductance_halfspace(w: WalkMatrix, pts: PointSet, axis: int = 0) -> HalfspaceCut:
    """Conductance ratio of the cut {coord[axis] < 1/2} versus the rest.

    The side of smaller stationary mass is used as S, so the value is always an
    upper bound on the true conductance. Crossing edges longer than the
    graph's short range ``r`` are counted as long.
    """
    g = w.graph
    if pts.n != g.n:
        raise InvalidArgument("point set does not match graph")
    side = pts.coords[:, axis] < 0.5
    i, j = edge_list(g)
    crossing = side[i] != side[j]
    n_cross = int(crossing.sum())
    r = g.params.get("r")
    if r is not None and n_cross:
        delta = torus_delta(pts.coords[i[crossing]], pts.coords[j[crossing]])
        length = np.sqrt(np.sum(delta * delta, axis=1))
        n_long = int(np.sum(length > r))
    else:
        n_long = 0
    deg = g.degrees.astype(np.float64)
    total = deg.sum()
    if total == 0 or n_cross == 0:
        return HalfspaceCut(0.0, 0.0, 0.0, n_cross - n_long, n_long)
    vol_s = min(deg[side].sum(), deg[~side].sum())
    flow = n_cross / (2.0 * total)
    mass = vol_s / total
    value = flow / mass if mass > 0 else 0.0
    return HalfspaceCut(float(value), float(flow), float(mass), n_cross - n_long, n_long)


def cheeger_bounds(h: float) -> tuple[float, float]:
    if not (0.0 <= h <= 1.0):
        raise InvalidArgument(f"conductance must be in [0, 1], got {h}")
    return h * h / 2.0, 2.0 * h


SPECTRAL_COLUMNS = [
    "seed", "n", "d", "r", "gamma", "kind", "mu2", "gap",
    "h_halfspace", "h_bruteforce", "Tmix_emp", "sinclair_lo", "sinclair_hi",
]


def spectral_report(pts: PointSet, g: TopologyGraph, eps: float | None = None, tol: float = 1e-10) -> dict:
    """One CSV row of spectral measurements for an instance.

    ``eps`` defaults to 1/n. Brute-force conductance is left blank above
    22 vertices.
    """
    eps = 1.0 / g.n if eps is None else eps
    w = WalkMatrix(g)
    mu2 = second_eigenvalue(w, tol=tol)
    lo, hi = sinclair_bounds(mu2, g.n, eps)
    row = {
        "seed": pts.seed,
        "n": g.n,
        "d": pts.dimension,
        "r": g.params.get("r"),
        "gamma": g.params.get("gamma"),
        "kind": g.kind,
        "mu2": mu2,
        "gap": 1.0 - mu2,
        "h_halfspace": conductance_halfspace(w, pts).value,
        "h_bruteforce": conductance_bruteforce(w)[0] if g.n <= BRUTEFORCE_LIMIT else None,
        "Tmix_emp": empirical_mixing_time(w, eps) if g.n <= MIXING_ALL_STARTS else None,
        "sinclair_lo": lo,
        "sinclair_hi": hi,
    }
    return row


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_spectral_report(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(SPECTRAL_COLUMNS)
        for row in rows:
            out.writerow([_fmt(row.get(c)) for c in SPECTRAL_COLUMNS])
