"""A* path planning on occupancy grids, waypoint sparsification, and runtime
waypoint advancement."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoPathError, RoomshiftError, UnreachableEndpointError
from .geometry import OccupancyGrid

SQRT2 = math.sqrt(2.0)

_STEPS8 = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
_STEPS4 = [(-1, 0), (0, -1), (0, 1), (1, 0)]


@dataclass(frozen=True)
class PlannerConfig:
    connectivity: int = 8
    inflation_radius: float = 0.3  # agent footprint; Chebyshev dilation in cells
    diagonal_cost: float = SQRT2

    def __post_init__(self):
        if self.connectivity not in (4, 8):
            raise RoomshiftError(f"connectivity must be 4 or 8, got {self.connectivity}")
        if self.inflation_radius < 0:
            raise RoomshiftError("inflation_radius must be >= 0")


@dataclass
class Path:
    cells: list  # [(ix, iy)] consecutive 8-neighbors, obstacle-free
    world_points: list  # cell-center 3-vectors with z = 0

    def cost(self) -> float:
        c = 0.0
        for (ax, ay), (bx, by) in zip(self.cells, self.cells[1:]):
            c += SQRT2 if (ax != bx and ay != by) else 1.0
        return c


@dataclass
class WaypointTracker:
    """Single-owner cursor over sparse waypoints; the final waypoint is the goal."""

    waypoints: list  # [(3,) arrays]
    cursor: int = 0
    advance_radius: float = 0.5

    def current(self) -> np.ndarray:
        return self.waypoints[self.cursor]

    @property
    def done(self) -> bool:
        return self.cursor == len(self.waypoints) - 1


def inflate(grid: OccupancyGrid, radius: float) -> OccupancyGrid:
    """Chebyshev dilation of obstacles by ceil(radius / cell_size) cells."""
    if radius <= 0:
        return grid.copy()
    k = int(math.ceil(radius / grid.cell_size - 1e-9))
    if k == 0:
        return grid.copy()
    cells = grid.cells
    out = cells.copy()
    for dx in range(-k, k + 1):
        for dy in range(-k, k + 1):
            if dx == 0 and dy == 0:
                continue
            shifted = np.zeros_like(cells)
            xs = slice(max(0, dx), cells.shape[0] + min(0, dx))
            ys = slice(max(0, dy), cells.shape[1] + min(0, dy))
            xs_src = slice(max(0, -dx), cells.shape[0] + min(0, -dx))
            ys_src = slice(max(0, -dy), cells.shape[1] + min(0, -dy))
            shifted[xs, ys] = cells[xs_src, ys_src]
            out |= shifted
    return OccupancyGrid(grid.cell_size, grid.origin.copy(), out)


def _octile(a, b):
    dx = abs(a[0] - b[0])
    dy = abs(a[1] - b[1])
    return (dx + dy) + (SQRT2 - 2.0) * min(dx, dy)


def astar(grid: OccupancyGrid, start, goal, cfg: PlannerConfig | None = None) -> Path:
    """Cost-minimal grid path (unit straight, sqrt(2) diagonal steps).

    Obstacles are inflated by cfg.inflation_radius before the search.
    Tie-breaking is deterministic by (f, h, row-major cell index).
    """
    cfg = cfg or PlannerConfig()
    work = inflate(grid, cfg.inflation_radius)
    s = work.world_to_cell(start)
    g = work.world_to_cell(goal)
    for name, c in (("start", s), ("goal", g)):
        if not work.in_bounds(*c):
            raise UnreachableEndpointError(f"{name} cell {c} is out of bounds")
        if work.cells[c]:
            raise UnreachableEndpointError(f"{name} cell {c} lies inside an inflated obstacle")

    ny = work.cells.shape[1]
    steps = _STEPS8 if cfg.connectivity == 8 else _STEPS4
    h0 = _octile(s, g) if cfg.connectivity == 8 else abs(s[0] - g[0]) + abs(s[1] - g[1])
    open_heap = [(h0, h0, s[0] * ny + s[1], s)]
    g_cost = {s: 0.0}
    parent = {}
    closed = set()
    while open_heap:
        f, h, _, cur = heapq.heappop(open_heap)
        if cur in closed:
            continue
        closed.add(cur)
        if cur == g:
            cells = [cur]
            while cur in parent:
                cur = parent[cur]
                cells.append(cur)
            cells.reverse()
            pts = [np.append(work.cell_center(ix, iy), 0.0) for ix, iy in cells]
            return Path(cells=cells, world_points=pts)
        gc = g_cost[cur]
        for dx, dy in steps:
            nxt = (cur[0] + dx, cur[1] + dy)
            if not work.in_bounds(*nxt) or work.cells[nxt] or nxt in closed:
                continue
            step = cfg.diagonal_cost if (dx != 0 and dy != 0) else 1.0
            cand = gc + step
            if cand < g_cost.get(nxt, math.inf):
                g_cost[nxt] = cand
                parent[nxt] = cur
                hh = _octile(nxt, g) if cfg.connectivity == 8 else abs(nxt[0] - g[0]) + abs(nxt[1] - g[1])
                heapq.heappush(open_heap, (cand + hh, hh, nxt[0] * ny + nxt[1], nxt))
    raise NoPathError(f"no path from cell {s} to cell {g}")


def sparsify(path: Path) -> list:
    """Keep the endpoints and every cell where the step direction changes."""
    if not path.cells:
        raise RoomshiftError("cannot sparsify an empty path")
    if len(path.cells) <= 2:
        return [p.copy() for p in path.world_points]
    keep = [0]
    for i in range(1, len(path.cells) - 1):
        ax, ay = path.cells[i - 1]
        bx, by = path.cells[i]
        cx, cy = path.cells[i + 1]
        if (bx - ax, by - ay) != (cx - bx, cy - by):
            keep.append(i)
    keep.append(len(path.cells) - 1)
    return [path.world_points[i].copy() for i in keep]


def advance(tracker: WaypointTracker, agent_pos) -> np.ndarray:
    """Advance the cursor while the agent is within advance_radius (horizontal)
    of the current waypoint and it is not the last; return the current waypoint."""
    agent_pos = np.asarray(agent_pos, dtype=np.float64)
    while tracker.cursor < len(tracker.waypoints) - 1:
        wp = tracker.waypoints[tracker.cursor]
        if math.hypot(agent_pos[0] - wp[0], agent_pos[1] - wp[1]) < tracker.advance_radius:
            tracker.cursor += 1
        else:
            break
    return tracker.waypoints[tracker.cursor]


def _clear_footprint(grid: OccupancyGrid, center, radius: float) -> None:
    cx, cy = grid.world_to_cell(center)
    k = int(math.ceil(radius / grid.cell_size - 1e-9))
    x0, x1 = max(0, cx - k), min(grid.cells.shape[0], cx + k + 1)
    y0, y1 = max(0, cy - k), min(grid.cells.shape[1], cy + k + 1)
    grid.cells[x0:x1, y0:y1] = False


def plan_task(
    grid: OccupancyGrid,
    humanoid_pos,
    object_pos,
    goal_pos,
    cfg: PlannerConfig | None = None,
    object_radius: float = 0.4,
    advance_radius: float = 0.5,
):
    """Plan the approach (humanoid -> object) and relocate (object -> goal)
    waypoint streams on one grid.

    The manipulated object must not block its own path, so cells within
    object_radius of its start and goal positions are cleared before planning.
    Tracker waypoints end exactly at object_pos and goal_pos.
    """
    cfg = cfg or PlannerConfig()
    work = grid.copy()
    _clear_footprint(work, object_pos, object_radius)
    _clear_footprint(work, goal_pos, object_radius)

    def plan_one(start, goal, label):
        try:
            path = astar(work, start, goal, cfg)
        except (UnreachableEndpointError, NoPathError) as e:
            raise type(e)(str(e), substream=label) from None
        wps = sparsify(path)
        wps[-1] = np.asarray(goal, dtype=np.float64).copy()
        if len(wps) >= 2:
            a, b = wps[-2], wps[-1]
            if math.hypot(a[0] - b[0], a[1] - b[1]) < 1e-9:
                wps.pop(-2)
        return WaypointTracker(waypoints=wps, advance_radius=advance_radius)

    approach = plan_one(humanoid_pos, object_pos, "approach")
    relocate = plan_one(object_pos, goal_pos, "relocate")
    return approach, relocate


# ---------------------------------------------------------------------------
# text / raster exports
# ---------------------------------------------------------------------------

def waypoints_to_text(points) -> str:
    return "".join(f"{float(p[0])!r} {float(p[1])!r} {float(p[2])!r}\n" for p in points)


def grid_to_pgm(grid: OccupancyGrid, scale: int = 1, overlays=None) -> str:
    """ASCII PGM (P2) raster; overlays is a list of (cells, gray) drawn in order.

    Rasters are written row-major with y down, so image row 0 is the grid's
    highest y row; pixel dimensions are grid dimensions times scale.
    """
    levels = np.full(grid.cells.shape, 255, dtype=np.int64)
    levels[grid.cells] = 0
    for cells, gray in overlays or ():
        for ix, iy in cells:
            if grid.in_bounds(ix, iy):
                levels[ix, iy] = gray
    nx, ny = levels.shape
    img = np.repeat(np.repeat(levels.T[::-1], scale, axis=0), scale, axis=1)
    lines = [f"P2\n{nx * scale} {ny * scale}\n255\n"]
    for row in img:
        lines.append(" ".join(str(v) for v in row) + "\n")
    return "".join(lines)


def render_plan_svg(grid: OccupancyGrid, inflated: OccupancyGrid, paths, waypoint_sets, scale: float = 40.0) -> str:
    """SVG of the grid, inflated cells, path polylines, and waypoint markers."""
    nx, ny = grid.cells.shape
    cs = grid.cell_size * scale

    def sx(wx):
        return (wx - grid.origin[0]) * scale

    def sy(wy):
        return (ny * grid.cell_size - (wy - grid.origin[1])) * scale

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{nx * cs:.0f}" height="{ny * cs:.0f}" '
        f'viewBox="0 0 {nx * cs:.2f} {ny * cs:.2f}">',
        f'<rect width="100%" height="100%" fill="white"/>',
    ]
    for ix in range(nx):
        for iy in range(ny):
            if inflated.cells[ix, iy] and not grid.cells[ix, iy]:
                c = grid.cell_center(ix, iy)
                out.append(
                    f'<rect x="{sx(c[0]) - cs / 2:.2f}" y="{sy(c[1]) - cs / 2:.2f}" '
                    f'width="{cs:.2f}" height="{cs:.2f}" fill="#ddd"/>'
                )
    for ix in range(nx):
        for iy in range(ny):
            if grid.cells[ix, iy]:
                c = grid.cell_center(ix, iy)
                out.append(
                    f'<rect x="{sx(c[0]) - cs / 2:.2f}" y="{sy(c[1]) - cs / 2:.2f}" '
                    f'width="{cs:.2f}" height="{cs:.2f}" fill="#333"/>'
                )
    colors = ["#d62728", "#2ca02c", "#1f77b4"]
    for i, pts in enumerate(paths):
        if len(pts) < 2:
            continue
        poly = " ".join(f"{sx(p[0]):.2f},{sy(p[1]):.2f}" for p in pts)
        out.append(f'<polyline points="{poly}" fill="none" stroke="{colors[i % 3]}" stroke-width="2"/>')
    for i, wps in enumerate(waypoint_sets):
        for p in wps:
            out.append(
                f'<circle cx="{sx(p[0]):.2f}" cy="{sy(p[1]):.2f}" r="3" fill="{colors[i % 3]}"/>'
            )
    out.append("</svg>")
    return "\n".join(out)
