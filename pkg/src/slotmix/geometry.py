"""Point processes on the unit d-torus, the wraparound metric, and hypercube tilings.

All randomness goes through numpy's PCG64 bit generator seeded with the
experiment seed, so a ``(n, d, seed)`` triple always reproduces the same
coordinates bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidArgument, NoPartnerError

__all__ = [
    "PointSet",
    "Tiling",
    "sample_points",
    "point_set_from_coords",
    "torus_distance",
    "torus_delta",
    "pairwise_torus_distance",
    "tile_of",
    "tiles_of",
    "partner_offset",
    "partner_tiles",
    "write_point_set",
    "read_point_set",
]


@dataclass(frozen=True)
class PointSet:
    """n points on [0, 1)^d with the seed that produced them.

    ``coords`` is an (n, d) float64 array; it is marked read-only on creation.
    """

    dimension: int
    coords: np.ndarray
    seed: int

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.float64)
        if c.ndim != 2 or c.shape[1] != self.dimension:
            raise InvalidArgument(f"coords must have shape (n, {self.dimension}), got {c.shape}")
        if self.dimension < 1:
            raise InvalidArgument("dimension must be >= 1")
        if c.size and (np.any(c < 0.0) or np.any(c >= 1.0)):
            raise InvalidArgument("torus coordinates must lie in [0, 1)")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    def __len__(self):
        return self.n

    def __getitem__(self, i):
        return self.coords[i]

    def __eq__(self, other):
        if not isinstance(other, PointSet):
            return NotImplemented
        return (
            self.dimension == other.dimension
            and self.seed == other.seed
            and np.array_equal(self.coords, other.coords)
        )

    __hash__ = None


def sample_points(n: int, d: int, seed: int) -> PointSet:
    """Draw n i.i.d. uniform points on the unit d-torus (binomial point process)."""
    if n < 1 or d < 1:
        raise InvalidArgument(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    rng = np.random.Generator(np.random.PCG64(seed))
    return PointSet(d, rng.random((n, d)), int(seed))


def point_set_from_coords(coords, seed: int = 0) -> PointSet:
    """Wrap explicit coordinates (reduced mod 1) as a PointSet, e.g. for lattice instances."""
    c = np.atleast_2d(np.asarray(coords, dtype=np.float64))
    if c.shape[0] == 1 and np.ndim(coords) == 1:
        c = c.T
    c = np.mod(c, 1.0)
    c[c >= 1.0] = 0.0
    return PointSet(c.shape[1], c, int(seed))


def torus_delta(a, b) -> np.ndarray:
    """Per-axis wraparound separation min(|a-b|, 1-|a-b|); broadcasts."""
    diff = np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))
    return np.minimum(diff, 1.0 - diff)


def torus_distance(a, b) -> float:
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    if a.shape != b.shape:
        raise InvalidArgument(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum(torus_delta(a, b) ** 2)))


def pairwise_torus_distance(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Distance matrix between rows of x (m, d) and rows of y (k, d)."""
    delta = torus_delta(x[:, None, :], y[None, :, :])
    return np.sqrt(np.einsum("ijk,ijk->ij", delta, delta))


@dataclass(frozen=True)
class Tiling:
    """Axis-aligned half-open hypercube tiles of a given side.

    There are ``floor(1/side)`` tiles per axis; the last one absorbs whatever
    remains of the unit interval, so the tiles always partition the torus.
    """

    dimension: int
    side: float

    def __post_init__(self):
        if not (0.0 < self.side <= 1.0):
            raise InvalidArgument(f"tile side must be in (0, 1], got {self.side}")
        if self.dimension < 1:
            raise InvalidArgument("dimension must be >= 1")

    @property
    def counts_per_axis(self) -> int:
        # 1/side can land a hair under an integer for sides like 0.1
        return max(1, int(math.floor(1.0 / self.side + 1e-9)))

    @property
    def n_tiles(self) -> int:
        return self.counts_per_axis ** self.dimension

    @classmethod
    def with_count(cls, dimension: int, count: int) -> "Tiling":
        """Tiling with exactly ``count`` equal tiles per axis."""
        if count < 1:
            raise InvalidArgument("count must be >= 1")
        return cls(dimension, 1.0 / count)


def _axis_index(coord: np.ndarray, side: float, count: int) -> np.ndarray:
    k = np.floor(coord / side).astype(np.int64)
    # enforce k*side <= coord < (k+1)*side exactly in floating point
    k = np.where(k * side > coord, k - 1, k)
    k = np.where((k + 1) * side <= coord, k + 1, k)
    return np.clip(k, 0, count - 1)


def tiles_of(coords: np.ndarray, t: Tiling) -> np.ndarray:
    """Integer tile index per axis for every row of an (n, d) array."""
    coords = np.atleast_2d(coords)
    if coords.shape[1] != t.dimension:
        raise InvalidArgument("point dimension does not match tiling")
    return _axis_index(coords, t.side, t.counts_per_axis)


def tile_of(p, t: Tiling) -> tuple:
    p = np.atleast_1d(np.asarray(p, dtype=np.float64))
    if p.shape[0] != t.dimension:
        raise InvalidArgument("point dimension does not match tiling")
    return tuple(int(k) for k in _axis_index(p, t.side, t.counts_per_axis))


def partner_offset(side: float, s: float) -> int:
    """Largest tile offset k >= 1 with k*side < s/2 (along-axis far-edge gap)."""
    if s <= 2.0 * side:
        raise NoPartnerError(f"s={s} must exceed twice the tile side {side}")
    k = int(math.ceil(s / (2.0 * side))) - 1
    while k * side >= s / 2.0:
        k -= 1
    while (k + 1) * side < s / 2.0:
        k += 1
    return max(k, 1)


def partner_tiles(c, t: Tiling, s: float, d: int | None = None) -> list[tuple]:
    """The 2d partner tiles of tile ``c``: one at offset +k and one at -k per axis.

    Returned in axis order as ``[c_1^+, c_1^-, c_2^+, c_2^-, ...]`` with
    wraparound indices.
    """
    d = t.dimension if d is None else d
    c = tuple(int(v) for v in np.atleast_1d(c))
    if len(c) != d or d != t.dimension:
        raise InvalidArgument("tile index dimension does not match tiling")
    k = partner_offset(t.side, s)
    m = t.counts_per_axis
    out = []
    for axis in range(d):
        for sign in (1, -1):
            idx = list(c)
            idx[axis] = (c[axis] + sign * k) % m
            out.append(tuple(idx))
    return out


def write_point_set(pts: PointSet, path) -> None:
    lines = [f"{pts.dimension} {pts.n} {pts.seed}"]
    for row in pts.coords:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_point_set(path) -> PointSet:
    lines = Path(path).read_text().splitlines()
    d, n, seed = (int(v) for v in lines[0].split())
    coords = np.array([[float(v) for v in ln.split()] for ln in lines[1 : n + 1]], dtype=np.float64)
    return PointSet(d, coords.reshape(n, d), seed)
