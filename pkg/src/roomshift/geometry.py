"""Point clouds, basis-point-set geometry encoding, and top-down occupancy grids."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError

# Clouds at or below this size use the exhaustive nearest-neighbor scan;
# larger clouds switch to the grid-bucketed search. Both paths agree exactly.
EXHAUSTIVE_NN_MAX = 4096


@dataclass(frozen=True)
class PointCloud:
    """Surface sample of one object: (N, 3) float64 points in meters."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise GeometryError(f"point cloud must be (N, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise GeometryError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]

    @property
    def centroid(self) -> np.ndarray:
        return self.points.mean(axis=0)


@dataclass(frozen=True)
class BasisPointSet:
    """Fixed random points inside a ball; regenerating with the same inputs is bit-identical."""

    basis: np.ndarray
    seed: int
    radius: float

    def __len__(self):
        return self.basis.shape[0]


@dataclass(frozen=True)
class BPSEncoding:
    """Delta vectors from each basis point to its nearest cloud point, shape (N, 3)."""

    deltas: np.ndarray

    def flat(self) -> np.ndarray:
        return self.deltas.reshape(-1)


def sample_basis(n: int, seed: int, radius: float) -> BasisPointSet:
    """Sample n points uniformly inside the ball of the given radius.

    Generator contract (reproducibility): a numpy `default_rng(seed)` (PCG64)
    repeatedly draws candidate batches of n points uniform in the bounding cube
    [-radius, radius]^3 and keeps those with norm <= radius until n are
    accepted; the first n accepted points, in draw order, form the basis.
    """
    if n < 1:
        raise GeometryError(f"basis size must be >= 1, got {n}")
    if radius <= 0:
        raise GeometryError(f"radius must be > 0, got {radius}")
    rng = np.random.default_rng(seed)
    accepted = []
    total = 0
    while total < n:
        cand = rng.uniform(-radius, radius, size=(n, 3))
        keep = cand[np.linalg.norm(cand, axis=1) <= radius]
        accepted.append(keep)
        total += len(keep)
    pts = np.concatenate(accepted, axis=0)[:n]
    return BasisPointSet(basis=pts, seed=seed, radius=float(radius))


def encode_bps(basis: BasisPointSet, cloud: PointCloud) -> BPSEncoding:
    """Delta vector from each basis point to its Euclidean-nearest cloud point.

    Ties are broken by the lowest cloud index.
    """
    if len(cloud) == 0:
        raise GeometryError("cannot encode an empty point cloud")
    idx = nearest_indices(basis.basis, cloud.points)
    return BPSEncoding(deltas=cloud.points[idx] - basis.basis)


def nearest_indices(queries: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Index of the nearest point for each query; ties go to the lowest index."""
    queries = np.asarray(queries, dtype=np.float64)
    points = np.asarray(points, dtype=np.float64)
    if len(points) == 0:
        raise GeometryError("empty point set")
    if len(points) <= EXHAUSTIVE_NN_MAX:
        return _nearest_exhaustive(queries, points)
    return _nearest_bucketed(queries, points)


def _nearest_exhaustive(queries, points):
    out = np.empty(len(queries), dtype=np.int64)
    # chunked to bound the (Q, M) distance matrix
    for i in range(0, len(queries), 256):
        blk = queries[i : i + 256]
        d2 = ((blk[:, None, :] - points[None, :, :]) ** 2).sum(axis=-1)
        out[i : i + 256] = np.argmin(d2, axis=1)
    return out


def _nearest_bucketed(queries, points):
    lo = points.min(axis=0)
    span = float((points.max(axis=0) - lo).max())
    m = len(points)
    cell = max(span / max(math.ceil(m ** (1.0 / 3.0)), 1), 1e-9)
    keys = np.floor((points - lo) / cell).astype(np.int64)
    buckets: dict[tuple, list] = {}
    for i, k in enumerate(map(tuple, keys)):
        buckets.setdefault(k, []).append(i)
    kmin = keys.min(axis=0)
    kmax = keys.max(axis=0)

    out = np.empty(len(queries), dtype=np.int64)
    for qi, q in enumerate(queries):
        qc = np.floor((q - lo) / cell).astype(np.int64)
        # ring index of the farthest occupied bucket; beyond it nothing is left
        last_ring = int(np.maximum(np.abs(qc - kmin), np.abs(qc - kmax)).max())
        best_d2 = np.inf
        best_i = -1
        for ring in range(last_ring + 1):
            cand: list = []
            for key in _ring_cells(tuple(qc), ring):
                cand.extend(buckets.get(key, ()))
            if cand:
                ci = np.asarray(cand, dtype=np.int64)
                d2 = ((points[ci] - q) ** 2).sum(axis=-1)
                order = np.lexsort((ci, d2))
                d_top, i_top = d2[order[0]], ci[order[0]]
                if d_top < best_d2 or (d_top == best_d2 and i_top < best_i):
                    best_d2, best_i = float(d_top), int(i_top)
            # points in rings > r are at distance >= r*cell; keep scanning
            # while a farther ring could still tie (lowest index wins ties)
            if best_i >= 0 and (ring * cell) ** 2 > best_d2:
                break
        out[qi] = best_i
    return out


def _ring_cells(center, ring):
    cx, cy, cz = center
    if ring == 0:
        yield (cx, cy, cz)
        return
    r = ring
    for dx in range(-r, r + 1):
        for dy in range(-r, r + 1):
            for dz in range(-r, r + 1):
                if max(abs(dx), abs(dy), abs(dz)) == r:
                    yield (cx + dx, cy + dy, cz + dz)


@dataclass
class OccupancyGrid:
    """Top-down boolean obstacle map; cells[ix, iy] covers
    [origin + (ix, iy)*cell_size, origin + (ix+1, iy+1)*cell_size)."""

    cell_size: float
    origin: np.ndarray  # (2,)
    cells: np.ndarray  # (nx, ny) bool

    @property
    def shape(self):
        return self.cells.shape

    def world_to_cell(self, xy) -> tuple[int, int]:
        xy = np.asarray(xy, dtype=np.float64)[:2]
        ij = np.floor((xy - self.origin) / self.cell_size).astype(np.int64)
        return int(ij[0]), int(ij[1])

    def cell_center(self, ix: int, iy: int) -> np.ndarray:
        return self.origin + (np.array([ix, iy], dtype=np.float64) + 0.5) * self.cell_size

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.cells.shape[0] and 0 <= iy < self.cells.shape[1]

    def copy(self) -> "OccupancyGrid":
        return OccupancyGrid(self.cell_size, self.origin.copy(), self.cells.copy())


def project_to_grid(clouds, cell_size: float, bounds) -> OccupancyGrid:
    """Project clouds top-down onto a grid; a cell is an obstacle iff at least
    one point lands in it. Points outside the half-open bounds are ignored.

    bounds: ((xmin, ymin), (xmax, ymax))
    """
    if cell_size <= 0:
        raise GeometryError(f"cell_size must be > 0, got {cell_size}")
    lo = np.asarray(bounds[0], dtype=np.float64)
    hi = np.asarray(bounds[1], dtype=np.float64)
    if np.any(hi <= lo):
        raise GeometryError(f"degenerate bounds {bounds}")
    nx = int(math.ceil((hi[0] - lo[0]) / cell_size - 1e-12))
    ny = int(math.ceil((hi[1] - lo[1]) / cell_size - 1e-12))
    cells = np.zeros((nx, ny), dtype=bool)
    for cloud in clouds:
        pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=np.float64)
        if len(pts) == 0:
            continue
        ij = np.floor((pts[:, :2] - lo) / cell_size).astype(np.int64)
        ok = (ij[:, 0] >= 0) & (ij[:, 0] < nx) & (ij[:, 1] >= 0) & (ij[:, 1] < ny)
        ij = ij[ok]
        cells[ij[:, 0], ij[:, 1]] = True
    return OccupancyGrid(cell_size=float(cell_size), origin=lo, cells=cells)


def save_cloud(cloud: PointCloud, path) -> None:
    """Write one `x y z` triple per line (shortest round-trip float repr)."""
    with open(path, "w") as f:
        for x, y, z in cloud.points:
            f.write(f"{float(x)!r} {float(y)!r} {float(z)!r}\n")


def load_cloud(path) -> PointCloud:
    pts = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            x, y, z = line.split()
            pts.append((float(x), float(y), float(z)))
    if not pts:
        raise GeometryError(f"no points in {path}")
    return PointCloud(points=np.array(pts, dtype=np.float64))
