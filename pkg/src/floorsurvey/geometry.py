"""Floorplan model and the planar geometry predicates built on it.

A floorplan is a set of wall segments plus a set of named room polygons.
Walls block movement; rooms answer occupancy queries.  The two are kept
independent on purpose: walls need not close off a room (doorways are
plain gaps in the wall set), and room polygons may share edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TAU = 2.0 * math.pi


def wrap_angle(theta):
    """Map an angle (scalar or array, radians) into [-pi, pi)."""
    wrapped = (np.asarray(theta, dtype=float) + math.pi) % TAU - math.pi
    if wrapped.ndim == 0:
        return float(wrapped)
    return wrapped


@dataclass(frozen=True)
class Pose2D:
    """Planar pose; heading is normalised to [-pi, pi) on construction."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])


class FloorplanError(ValueError):
    """Raised for unparseable or inconsistent floorplan input."""


@dataclass(frozen=True)
class Room:
    room_id: int
    name: str
    vertices: np.ndarray  # (V, 2), simple polygon, not repeated at the end

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=float))


def _orient(ax, ay, bx, by, cx, cy):
    # twice the signed area of triangle abc; sign gives the turn direction
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _within_bbox(ax, ay, bx, by, px, py):
    return (
        min(ax, bx) <= px <= max(ax, bx)
        and min(ay, by) <= py <= max(ay, by)
    )


def _segments_touch(p0, p1, q0, q1) -> bool:
    """Closed-segment intersection: touches and collinear overlap count."""
    o1 = _orient(p0[0], p0[1], p1[0], p1[1], q0[0], q0[1])
    o2 = _orient(p0[0], p0[1], p1[0], p1[1], q1[0], q1[1])
    o3 = _orient(q0[0], q0[1], q1[0], q1[1], p0[0], p0[1])
    o4 = _orient(q0[0], q0[1], q1[0], q1[1], p1[0], p1[1])
    if ((o1 > 0) != (o2 > 0)) and ((o3 > 0) != (o4 > 0)) and o1 != 0 and o2 != 0 and o3 != 0 and o4 != 0:
        return True
    if o1 == 0 and _within_bbox(p0[0], p0[1], p1[0], p1[1], q0[0], q0[1]):
        return True
    if o2 == 0 and _within_bbox(p0[0], p0[1], p1[0], p1[1], q1[0], q1[1]):
        return True
    if o3 == 0 and _within_bbox(q0[0], q0[1], q1[0], q1[1], p0[0], p0[1]):
        return True
    if o4 == 0 and _within_bbox(q0[0], q0[1], q1[0], q1[1], p1[0], p1[1]):
        return True
    return False


def _polygon_is_simple(vertices: np.ndarray) -> bool:
    n = len(vertices)
    for i in range(n):
        a0, a1 = vertices[i], vertices[(i + 1) % n]
        if np.allclose(a0, a1):
            return False  # degenerate edge
        for j in range(i + 1, n):
            adjacent = j == (i + 1) % n or (j + 1) % n == i or i == j
            if adjacent:
                continue
            b0, b1 = vertices[j], vertices[(j + 1) % n]
            if _segments_touch(a0, a1, b0, b1):
                return False
    return True


class Floorplan:
    """Wall segments plus room polygons, with precomputed bounds.

    walls: (W, 4) array of x0, y0, x1, y1 rows.
    rooms: list of Room, ids unique and contiguous from 0.
    """

    def __init__(self, walls, rooms: list[Room]):
        self.walls = np.asarray(walls, dtype=float).reshape(-1, 4)
        self.rooms = sorted(rooms, key=lambda r: r.room_id)
        ids = [r.room_id for r in self.rooms]
        if ids != list(range(len(ids))):
            raise FloorplanError(f"room ids must be unique and contiguous from 0, got {ids}")
        for room in self.rooms:
            if len(room.vertices) < 3:
                raise FloorplanError(f"room {room.room_id} has fewer than 3 vertices")
            if not _polygon_is_simple(room.vertices):
                raise FloorplanError(f"room {room.room_id} polygon is self-intersecting")
        xs = np.concatenate([self.walls[:, 0], self.walls[:, 2]]
                            + [r.vertices[:, 0] for r in self.rooms])
        ys = np.concatenate([self.walls[:, 1], self.walls[:, 3]]
                            + [r.vertices[:, 1] for r in self.rooms])
        if xs.size == 0:
            self.bounds = (0.0, 0.0, 0.0, 0.0)
        else:
            self.bounds = (float(xs.min()), float(ys.min()), float(xs.max()), float(ys.max()))
        # wall bounding boxes, used to prefilter crossing tests
        self._wall_bbox = np.stack(
            [
                np.minimum(self.walls[:, 0], self.walls[:, 2]),
                np.minimum(self.walls[:, 1], self.walls[:, 3]),
                np.maximum(self.walls[:, 0], self.walls[:, 2]),
                np.maximum(self.walls[:, 1], self.walls[:, 3]),
            ],
            axis=1,
        ) if len(self.walls) else np.zeros((0, 4))
        self._edge_angle_cache: dict[int, np.ndarray] = {}

    def __repr__(self):
        return f"Floorplan(walls={len(self.walls)}, rooms={len(self.rooms)}, bounds={self.bounds})"

    def room_edge_angles(self, room_id: int) -> np.ndarray:
        """Directions (mod pi) of the polygon edges of one room."""
        if room_id not in self._edge_angle_cache:
            vs = self.rooms[room_id].vertices
            d = np.roll(vs, -1, axis=0) - vs
            self._edge_angle_cache[room_id] = np.arctan2(d[:, 1], d[:, 0]) % math.pi
        return self._edge_angle_cache[room_id]

    def walls_near(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Indices of walls whose bbox meets the axis-aligned box [lo, hi]."""
        if not len(self.walls):
            return np.zeros(0, dtype=int)
        bb = self._wall_bbox
        hit = (bb[:, 0] <= hi[0]) & (bb[:, 2] >= lo[0]) & (bb[:, 1] <= hi[1]) & (bb[:, 3] >= lo[1])
        return np.nonzero(hit)[0]


def parse_floorplan(text: str) -> Floorplan:
    """Parse the line-oriented floorplan format.

    wall,x0,y0,x1,y1
    room,<id>,<name>,x0,y0,x1,y1,...   (polygon vertices, >= 3)

    Blank lines and lines starting with '#' are skipped.  Errors carry
    the 1-based line number.
    """
    walls = []
    rooms = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        tag = parts[0]
        try:
            if tag == "wall":
                if len(parts) != 5:
                    raise ValueError("expected wall,x0,y0,x1,y1")
                walls.append([float(v) for v in parts[1:5]])
            elif tag == "room":
                if len(parts) < 9 or (len(parts) - 3) % 2 != 0:
                    raise ValueError("expected room,<id>,<name>,x0,y0,... with >= 3 vertices")
                room_id = int(parts[1])
                coords = np.array([float(v) for v in parts[3:]], dtype=float).reshape(-1, 2)
                rooms.append(Room(room_id, parts[2], coords))
            else:
                raise ValueError(f"unknown record tag {tag!r}")
        except ValueError as exc:
            raise FloorplanError(f"line {lineno}: {exc}") from None
    seen = [r.room_id for r in rooms]
    if len(set(seen)) != len(seen):
        raise FloorplanError(f"duplicate room ids: {sorted(i for i in set(seen) if seen.count(i) > 1)}")
    return Floorplan(np.array(walls, dtype=float).reshape(-1, 4), rooms)


def load_floorplan(path) -> Floorplan:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_floorplan(fh.read())


def segment_crosses_wall(fp: Floorplan, p0, p1) -> bool:
    """True iff the segment p0 -> p1 meets any wall.

    Deliberately conservative: touching a wall endpoint or running
    collinearly along a wall count as crossing.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    lo = np.minimum(p0, p1)
    hi = np.maximum(p0, p1)
    for wi in fp.walls_near(lo, hi):
        w = fp.walls[wi]
        if _segments_touch(p0, p1, w[:2], w[2:]):
            return True
    return False


def segments_cross_walls(p0s: np.ndarray, p1s: np.ndarray, walls: np.ndarray) -> np.ndarray:
    """Vectorised crossing test of N motion segments against W walls.

    Returns a length-N bool array; same conservative touch semantics as
    segment_crosses_wall.
    """
    p0s = np.asarray(p0s, dtype=float)
    p1s = np.asarray(p1s, dtype=float)
    n = len(p0s)
    if n == 0 or len(walls) == 0:
        return np.zeros(n, dtype=bool)
    ax, ay = p0s[:, 0:1], p0s[:, 1:2]
    bx, by = p1s[:, 0:1], p1s[:, 1:2]
    cx, cy = walls[None, :, 0], walls[None, :, 1]
    dx, dy = walls[None, :, 2], walls[None, :, 3]

    o1 = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    o2 = (bx - ax) * (dy - ay) - (by - ay) * (dx - ax)
    o3 = (dx - cx) * (ay - cy) - (dy - cy) * (ax - cx)
    o4 = (dx - cx) * (by - cy) - (dy - cy) * (bx - cx)

    proper = ((o1 > 0) != (o2 > 0)) & ((o3 > 0) != (o4 > 0)) \
        & (o1 != 0) & (o2 != 0) & (o3 != 0) & (o4 != 0)

    def on_ab(px, py):
        return (
            (np.minimum(ax, bx) <= px) & (px <= np.maximum(ax, bx))
            & (np.minimum(ay, by) <= py) & (py <= np.maximum(ay, by))
        )

    def on_cd(px, py):
        return (
            (np.minimum(cx, dx) <= px) & (px <= np.maximum(cx, dx))
            & (np.minimum(cy, dy) <= py) & (py <= np.maximum(cy, dy))
        )

    touch = ((o1 == 0) & on_ab(cx, cy)) | ((o2 == 0) & on_ab(dx, dy)) \
        | ((o3 == 0) & on_cd(ax, ay)) | ((o4 == 0) & on_cd(bx, by))
    return (proper | touch).any(axis=1)


def _point_on_polygon_boundary(vs: np.ndarray, x: float, y: float) -> bool:
    n = len(vs)
    for i in range(n):
        x0, y0 = vs[i]
        x1, y1 = vs[(i + 1) % n]
        if _orient(x0, y0, x1, y1, x, y) == 0 and _within_bbox(x0, y0, x1, y1, x, y):
            return True
    return False


def _point_in_polygon(vs: np.ndarray, x: float, y: float) -> bool:
    # even-odd rule; boundary handled separately by the caller
    inside = False
    n = len(vs)
    for i in range(n):
        x0, y0 = vs[i]
        x1, y1 = vs[(i + 1) % n]
        if (y0 > y) != (y1 > y):
            xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            if x < xc:
                inside = not inside
    return inside


def containing_room(fp: Floorplan, p) -> int | None:
    """Room id containing point p, or None.

    Boundary points belong to every room they touch; the lowest room id
    wins the tie.
    """
    x, y = float(p[0]), float(p[1])
    for room in fp.rooms:  # already sorted by id
        if _point_on_polygon_boundary(room.vertices, x, y) or _point_in_polygon(room.vertices, x, y):
            return room.room_id
    return None


def containing_rooms(fp: Floorplan, pts: np.ndarray) -> np.ndarray:
    """Vectorised containing_room for an (N, 2) array; -1 where no room."""
    pts = np.asarray(pts, dtype=float)
    out = np.full(len(pts), -1, dtype=int)
    x, y = pts[:, 0], pts[:, 1]
    for room in fp.rooms:
        open_mask = out == -1
        if not open_mask.any():
            break
        vs = room.vertices
        n = len(vs)
        inside = np.zeros(len(pts), dtype=bool)
        boundary = np.zeros(len(pts), dtype=bool)
        for i in range(n):
            x0, y0 = vs[i]
            x1, y1 = vs[(i + 1) % n]
            o = (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0)
            onseg = (o == 0) \
                & (np.minimum(x0, x1) <= x) & (x <= np.maximum(x0, x1)) \
                & (np.minimum(y0, y1) <= y) & (y <= np.maximum(y0, y1))
            boundary |= onseg
            crosses = (y0 > y) != (y1 > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            inside ^= crosses & (x < xc)
        out[open_mask & (boundary | inside)] = room.room_id
    return out


def points_in_polygon(vertices: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Bool per point for one polygon; boundary points count as inside."""
    vs = np.asarray(vertices, dtype=float)
    pts = np.asarray(pts, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    boundary = np.zeros(len(pts), dtype=bool)
    n = len(vs)
    for i in range(n):
        x0, y0 = vs[i]
        x1, y1 = vs[(i + 1) % n]
        o = (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0)
        boundary |= (o == 0) \
            & (np.minimum(x0, x1) <= x) & (x <= np.maximum(x0, x1)) \
            & (np.minimum(y0, y1) <= y) & (y <= np.maximum(y0, y1))
        crosses = (y0 > y) != (y1 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (x < xc)
    return inside | boundary


def acute_angle_to_best_wall(fp: Floorplan, p, heading: float) -> float | None:
    """Acute angle between heading and the most parallel wall of p's room.

    Returns a value in [0, pi/2], or None when p lies in no room.
    """
    room_id = containing_room(fp, p)
    if room_id is None:
        return None
    angles = fp.room_edge_angles(room_id)
    d = (heading - angles + math.pi / 2.0) % math.pi - math.pi / 2.0
    return float(np.abs(d).min())


def acute_angles_to_room_walls(fp: Floorplan, pts: np.ndarray, headings: np.ndarray) -> np.ndarray:
    """Vectorised acute_angle_to_best_wall; NaN where the point has no room."""
    pts = np.asarray(pts, dtype=float)
    headings = np.asarray(headings, dtype=float)
    out = np.full(len(pts), np.nan)
    rooms = containing_rooms(fp, pts)
    for room_id in np.unique(rooms):
        if room_id < 0:
            continue
        mask = rooms == room_id
        angles = fp.room_edge_angles(int(room_id))
        d = (headings[mask, None] - angles[None, :] + math.pi / 2.0) % math.pi - math.pi / 2.0
        out[mask] = np.abs(d).min(axis=1)
    return out
