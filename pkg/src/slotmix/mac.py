"""Interference-limited TDMA: SIR reception, slot evaluation and schedulers.

Reception model: a broadcast from i reaches neighbour j in a slot iff j is not
itself transmitting (half-duplex) and

    |x_j - x_i|^-alpha / sum_{k in slot, k != i} |x_j - x_k|^-alpha >= beta.

There is no noise term, so a lone transmitter reaches all its neighbours.
A schedule is feasible when the union of its slots establishes every directed
edge of the target graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidArgument, SearchFailure
from .geometry import PointSet, Tiling, tiles_of, torus_delta
from .topology import TopologyGraph, longest_link

__all__ = [
    "RadioConfig",
    "TransmissionSchedule",
    "ScheduleReport",
    "sir",
    "slot_outcome",
    "validate_schedule",
    "lattice_schedule",
    "lattice_tile_count",
    "min_theta_search",
    "search_lattice",
    "greedy_schedule",
    "guard_zone_lower_bound",
    "interference_bound",
    "slot_interference",
    "fit_interference_constant",
    "write_schedule",
    "read_schedule",
]

DEFAULT_DELTA2 = 0.1
THETA_RESOLUTION = 0.01
THETA_FLOOR = 1.01
THETA_CAP = 64.0


@dataclass(frozen=True)
class RadioConfig:
    alpha: float
    beta: float

    def __post_init__(self):
        if self.beta <= 0:
            raise InvalidArgument(f"SIR threshold beta must be positive, got {self.beta}")
        if self.alpha <= 0:
            raise InvalidArgument("path-loss exponent must be positive")

    def check_dimension(self, d: int):
        if not self.alpha > d:
            raise InvalidArgument(f"path-loss exponent alpha={self.alpha} must exceed dimension d={d}")


@dataclass
class TransmissionSchedule:
    """Ordered TDMA slots; each slot is a sorted tuple of transmitting vertices."""

    n: int
    slots: list[tuple[int, ...]]
    radio: RadioConfig
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.slots)

    @property
    def length(self) -> int:
        return len(self.slots)

    def transmit_counts(self) -> np.ndarray:
        counts = np.zeros(self.n, dtype=np.int64)
        for slot in self.slots:
            counts[list(slot)] += 1
        return counts


@dataclass
class ScheduleReport:
    feasible: bool
    missing: np.ndarray  # (k, 2) directed edges (tx, rx) never established
    per_slot_success: list[int]

    @property
    def n_missing(self) -> int:
        return int(self.missing.shape[0])


def sir(pts: PointSet, tx: int, rx: int, others, alpha: float) -> float:
    """Signal-to-interference ratio of link tx -> rx with the given interferers."""
    if tx == rx:
        raise InvalidArgument("transmitter cannot be its own receiver")
    others = [k for k in others]
    if tx in others:
        raise InvalidArgument("transmitter listed among interferers")
    x = pts.coords
    d_sig = float(np.sqrt(np.sum(torus_delta(x[rx], x[tx]) ** 2)))
    if d_sig == 0.0:
        raise InvalidArgument("receiver coincides with transmitter")
    if not others:
        return math.inf
    d_int = np.sqrt(np.sum(torus_delta(x[others], x[rx]) ** 2, axis=1))
    if np.any(d_int == 0.0):
        return 0.0
    return float(d_sig ** -alpha / np.sum(d_int ** -alpha))


def _powers(coords: np.ndarray, tx: np.ndarray, alpha: float) -> np.ndarray:
    """Received power |x_j - x_k|^-alpha from each transmitter k (rows) at every node j."""
    delta = torus_delta(coords[tx][:, None, :], coords[None, :, :])
    dist = np.sqrt(np.einsum("ijk,ijk->ij", delta, delta))
    with np.errstate(divide="ignore"):
        return dist ** -alpha


def _slot_links(pts: PointSet, g: TopologyGraph, slot, radio: RadioConfig):
    """CSR positions of the directed edges established in one slot."""
    tx = np.unique(np.asarray(slot, dtype=np.int64))
    if tx.size == 0:
        return np.zeros(0, dtype=np.int64)
    adj = g.adjacency
    transmitting = np.zeros(g.n, dtype=bool)
    transmitting[tx] = True
    if tx.size == 1:
        i = tx[0]
        return np.arange(adj.indptr[i], adj.indptr[i + 1])
    P = _powers(pts.coords, tx, radio.alpha)
    hits = []
    for a, i in enumerate(tx):
        lo, hi = adj.indptr[i], adj.indptr[i + 1]
        nbrs = adj.indices[lo:hi]
        listen = ~transmitting[nbrs]
        if not listen.any():
            continue
        nbrs = nbrs[listen]
        pos = np.arange(lo, hi)[listen]
        others = np.delete(P[:, nbrs], a, axis=0)
        interference = others.sum(axis=0)
        signal = P[a, nbrs]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = signal / interference
        ok = ratio >= radio.beta
        hits.append(pos[ok])
    return np.concatenate(hits) if hits else np.zeros(0, dtype=np.int64)


def slot_outcome(pts: PointSet, g: TopologyGraph, slot, radio: RadioConfig) -> set[tuple[int, int]]:
    """Directed edges (tx, rx) established by one slot of concurrent broadcasts."""
    pos = _slot_links(pts, g, slot, radio)
    adj = g.adjacency
    src = np.repeat(np.arange(g.n), np.diff(adj.indptr))
    return set(zip(src[pos].tolist(), adj.indices[pos].tolist()))


def validate_schedule(pts: PointSet, g: TopologyGraph, sched: TransmissionSchedule) -> ScheduleReport:
    adj = g.adjacency
    covered = np.zeros(adj.nnz, dtype=bool)
    per_slot = []
    for slot in sched.slots:
        pos = _slot_links(pts, g, slot, sched.radio)
        covered[pos] = True
        per_slot.append(int(pos.size))
    src = np.repeat(np.arange(g.n), np.diff(adj.indptr))
    miss = ~covered
    missing = np.column_stack([src[miss], adj.indices[miss]]).astype(np.int64)
    return ScheduleReport(not miss.any(), missing, per_slot)


def lattice_tile_count(theta: float, link_length: float) -> int:
    """Tiles per axis: the largest even m with 1/m >= theta * link_length.

    An even count keeps the parity classes consistent across the wraparound.
    """
    side = theta * link_length
    if side > 0.5 + 1e-12:
        raise InvalidArgument(f"lattice tile side {side:.6g} exceeds 1/2; parity classes degenerate")
    m = int(math.floor(1.0 / side + 1e-9))
    return max(2, m - (m % 2))


def lattice_schedule(pts: PointSet, g: TopologyGraph, radio: RadioConfig, theta: float) -> TransmissionSchedule:
    """2^d-phase parity-class protocol on a lattice of side about theta * link length.

    Tiles whose index parities agree on every axis form a class; in a phase
    only tiles of that class are active and each sends one occupant per slot,
    so every node transmits exactly once per cycle. Phase length is the
    largest occupancy in the class.
    """
    if not theta > 1.0:
        raise InvalidArgument(f"theta must exceed 1, got {theta}")
    d = pts.dimension
    radio.check_dimension(d)
    ell = longest_link(pts, g)
    meta = {"protocol": "lattice", "theta": float(theta), "link_length": ell}
    if ell == 0.0:
        meta.update(tiles=0, side=0.0)
        return TransmissionSchedule(g.n, [], radio, meta)
    m = lattice_tile_count(theta, ell)
    tiling = Tiling.with_count(d, m)
    idx = tiles_of(pts.coords, tiling)
    parity = (idx % 2) @ (1 << np.arange(d))
    flat = np.ravel_multi_index(idx.T, (m,) * d)
    slots = []
    for cls in range(2**d):
        members = np.flatnonzero(parity == cls)
        if members.size == 0:
            continue
        order = members[np.lexsort((members, flat[members]))]
        tile_ids, starts, counts = np.unique(flat[order], return_index=True, return_counts=True)
        for t in range(int(counts.max())):
            active = counts > t
            slots.append(tuple(sorted(order[starts[active] + t].tolist())))
    meta.update(tiles=m, side=tiling.side)
    return TransmissionSchedule(g.n, slots, radio, meta)


def search_lattice(
    pts: PointSet,
    g: TopologyGraph,
    radio: RadioConfig,
    resolution: float = THETA_RESOLUTION,
    floor: float = THETA_FLOOR,
    cap: float = THETA_CAP,
) -> tuple[float, TransmissionSchedule]:
    """Bisect on a theta grid for the smallest theta whose lattice schedule validates."""
    ell = longest_link(pts, g)
    if ell == 0.0:
        return floor, lattice_schedule(pts, g, radio, floor)
    top = min(cap, 0.5 / ell)
    lo_k = int(math.ceil(floor / resolution - 1e-9))
    hi_k = int(math.floor(top / resolution + 1e-9))
    if hi_k < lo_k:
        raise SearchFailure(f"no admissible theta: longest link {ell:.4g} leaves no room on the torus")
    cache = {}

    def attempt(k):
        theta = round(k * resolution, 10)
        m = lattice_tile_count(theta, ell)
        if m not in cache:
            sched = lattice_schedule(pts, g, radio, theta)
            cache[m] = (validate_schedule(pts, g, sched).feasible, sched)
        ok, sched = cache[m]
        return ok, theta, sched

    ok, theta, sched = attempt(lo_k)
    if ok:
        return theta, _retag(sched, theta)
    ok, theta, sched = attempt(hi_k)
    if not ok:
        raise SearchFailure(f"no feasible theta up to {hi_k * resolution:.2f}")
    lo, hi = lo_k, hi_k
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if attempt(mid)[0]:
            hi = mid
        else:
            lo = mid
    _, theta, sched = attempt(hi)
    return theta, _retag(sched, theta)


def _retag(sched: TransmissionSchedule, theta: float) -> TransmissionSchedule:
    meta = dict(sched.meta, theta=float(theta))
    return TransmissionSchedule(sched.n, list(sched.slots), sched.radio, meta)


def min_theta_search(pts: PointSet, g: TopologyGraph, radio: RadioConfig, **kwargs) -> float:
    return search_lattice(pts, g, radio, **kwargs)[0]


def greedy_schedule(pts: PointSet, g: TopologyGraph, radio: RadioConfig, seed: int = 0) -> TransmissionSchedule:
    """Pack transmitters slot by slot in a seeded random priority order.

    A candidate joins the current slot only if it is not adjacent to any member
    (half-duplex) and, with it added, every member still reaches all of its
    neighbours. Each link (i, j) tolerates total received power at j of at most
    P(i, j) * (1 + 1/beta); ``cap`` tracks the tightest such limit per node.
    """
    radio.check_dimension(pts.dimension)
    adj = g.adjacency
    deg = np.diff(adj.indptr)
    coords = pts.coords
    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(g.n)
    remaining = [int(v) for v in order if deg[v] > 0]
    margin = 1.0 + 1.0 / radio.beta
    safety = 1.0 - 1e-9
    slots = []
    while remaining:
        blocked = np.zeros(g.n, dtype=bool)
        load = np.zeros(g.n)
        cap = np.full(g.n, np.inf)
        members = []
        left = []
        for c in remaining:
            if blocked[c]:
                left.append(c)
                continue
            power = _powers(coords, np.array([c]), radio.alpha)[0]
            power[c] = 0.0
            nbrs = adj.indices[adj.indptr[c] : adj.indptr[c + 1]]
            new_load = load + power
            new_cap = cap.copy()
            new_cap[nbrs] = np.minimum(new_cap[nbrs], power[nbrs] * margin)
            limited = np.isfinite(new_cap)
            if members and not np.all(new_load[limited] <= new_cap[limited] * safety):
                left.append(c)
                continue
            members.append(c)
            load, cap = new_load, new_cap
            blocked[c] = True
            blocked[nbrs] = True
        slots.append(tuple(sorted(members)))
        remaining = left
    return TransmissionSchedule(g.n, slots, radio, {"protocol": "greedy", "seed": int(seed)})


def guard_zone_lower_bound(pts: PointSet, g: TopologyGraph, radio: RadioConfig, delta2: float = DEFAULT_DELTA2) -> int:
    """Largest number of nodes inside a guard zone of radius l*(1-delta2)*beta^(1/alpha)
    around any receiver, l being the longest link of g."""
    if not (0.0 < delta2 < 1.0):
        raise InvalidArgument("delta2 must lie in (0, 1)")
    deg = g.degrees
    receivers = np.flatnonzero(deg > 0)
    if receivers.size == 0:
        return 0
    ell = longest_link(pts, g)
    r_min = ell * (1.0 - delta2) * radio.beta ** (1.0 / radio.alpha)
    if r_min >= math.sqrt(pts.dimension) / 2.0:
        return g.n
    tree = cKDTree(pts.coords, boxsize=1.0)
    counts = tree.query_ball_point(pts.coords[receivers], r_min, return_length=True)
    return int(np.max(counts))


def interference_bound(theta: float, link_length: float, alpha: float, d: int, rings: int = 100000) -> float:
    """Worst-case interference at an intended receiver in a lattice slot.

    Active tiles of one class sit on a lattice of spacing 2*side with
    side = theta * l, so ring k of that lattice holds (2k+1)^d - (2k-1)^d tiles
    at distance at least (2k-1)*side from the transmitter, hence at least
    ((2k-1)*theta - 1)*l from its receiver.
    """
    if not alpha > d:
        raise InvalidArgument("series diverges unless alpha > d")
    k = np.arange(1, rings + 1, dtype=np.float64)
    count = (2 * k + 1) ** d - (2 * k - 1) ** d
    terms = count * ((2 * k - 1) * theta - 1.0) ** -alpha
    return float(terms.sum() * link_length ** -alpha)


def slot_interference(pts: PointSet, g: TopologyGraph, slot, alpha: float) -> float:
    """Largest interference seen by any intended (listening) receiver in a slot."""
    tx = np.unique(np.asarray(slot, dtype=np.int64))
    if tx.size < 2:
        return 0.0
    transmitting = np.zeros(g.n, dtype=bool)
    transmitting[tx] = True
    P = _powers(pts.coords, tx, alpha)
    adj = g.adjacency
    worst = 0.0
    for a, i in enumerate(tx):
        nbrs = adj.indices[adj.indptr[i] : adj.indptr[i + 1]]
        nbrs = nbrs[~transmitting[nbrs]]
        if nbrs.size:
            worst = max(worst, float(np.delete(P[:, nbrs], a, axis=0).sum(axis=0).max()))
    return worst


def fit_interference_constant(pts: PointSet, g: TopologyGraph, sched: TransmissionSchedule) -> float:
    """Smallest xi with interference <= xi * l^-alpha * (theta_eff - 1)^-alpha on every slot."""
    ell = sched.meta["link_length"]
    theta_eff = sched.meta["side"] / ell
    alpha = sched.radio.alpha
    worst = max((slot_interference(pts, g, s, alpha) for s in sched.slots), default=0.0)
    return worst * ell**alpha * (theta_eff - 1.0) ** alpha


def write_schedule(sched: TransmissionSchedule, path) -> None:
    meta = dict(sched.meta)
    protocol = meta.pop("protocol", "custom")
    params = " ".join(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}" for k, v in meta.items())
    header = f"{sched.n} {sched.radio.alpha!r} {sched.radio.beta!r} {protocol}" + (f" {params}" if params else "")
    lines = [header] + [" ".join(str(v) for v in slot) for slot in sched.slots]
    Path(path).write_text("\n".join(lines) + "\n")


def read_schedule(path) -> TransmissionSchedule:
    lines = Path(path).read_text().splitlines()
    head = lines[0].split()
    n, alpha, beta, protocol = int(head[0]), float(head[1]), float(head[2]), head[3]
    meta = {"protocol": protocol}
    for tok in head[4:]:
        key, _, val = tok.partition("=")
        for cast in (int, float, str):
            try:
                meta[key] = cast(val)
                break
            except ValueError:
                continue
    slots = [tuple(int(v) for v in ln.split()) for ln in lines[1:] if ln.strip()]
    return TransmissionSchedule(n, slots, RadioConfig(alpha, beta), meta)
