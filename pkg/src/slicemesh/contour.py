"""Closed 2-D contours and the plain-text point file format.

Point files hold one ``x y`` pair per line with a blank line between
contours. Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MalformedPointFile


def shoelace_area(points) -> float:
    """Signed area of a closed polygon; positive when counter-clockwise."""
    p = np.asarray(points, dtype=np.float64)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


@dataclass(frozen=True, eq=False)
class ContourPolyline:
    """Ordered closed polyline; the last point connects back to the first."""

    points: np.ndarray

    def __post_init__(self):
        p = np.array(self.points, dtype=np.float64)
        if p.ndim != 2 or p.shape[1] != 2:
            raise ValueError(f"contour points must have shape (n, 2), got {p.shape}")
        if len(p) < 3:
            raise ValueError(f"a closed contour needs at least 3 points, got {len(p)}")
        if not np.all(np.isfinite(p)):
            raise ValueError("contour points must be finite")
        if np.any(np.all(p == np.roll(p, -1, axis=0), axis=1)):
            raise ValueError("contour has identical consecutive points")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other):
        if not isinstance(other, ContourPolyline):
            return NotImplemented
        return self.points.shape == other.points.shape and bool(np.all(self.points == other.points))

    def __hash__(self):
        return hash(self.points.tobytes())

    @property
    def closed(self) -> bool:
        return True

    @property
    def area(self) -> float:
        return abs(shoelace_area(self.points))

    @property
    def signed_area(self) -> float:
        return shoelace_area(self.points)

    @property
    def orientation(self) -> str:
        return "CCW" if self.signed_area >= 0 else "CW"

    @property
    def perimeter(self) -> float:
        return float(np.linalg.norm(np.roll(self.points, -1, axis=0) - self.points, axis=1).sum())

    @property
    def centroid(self) -> np.ndarray:
        return self.points.mean(axis=0)

    def reversed(self) -> ContourPolyline:
        """Opposite orientation, keeping the same start point."""
        return ContourPolyline(np.concatenate([self.points[:1], self.points[:0:-1]]))

    def ccw(self) -> ContourPolyline:
        return self if self.signed_area >= 0 else self.reversed()

    def rotated(self, offset: int) -> ContourPolyline:
        """Start at ``points[offset]``."""
        return ContourPolyline(np.roll(self.points, -int(offset), axis=0))

    def translated(self, dx: float, dy: float) -> ContourPolyline:
        return ContourPolyline(self.points + np.array([dx, dy]))

    def normalized(self) -> ContourPolyline:
        """CCW and starting at the smallest ``(y, x)`` point."""
        c = self.ccw()
        start = int(np.lexsort((c.points[:, 0], c.points[:, 1]))[0])
        return c.rotated(start)


def point_in_polygon(point, polygon, include_boundary: bool = True) -> bool:
    """Even-odd test; points on an edge count as inside when ``include_boundary``."""
    px, py = float(point[0]), float(point[1])
    poly = np.asarray(polygon, dtype=np.float64)
    inside = False
    n = len(poly)
    for k in range(n):
        x1, y1 = poly[k]
        x2, y2 = poly[(k + 1) % n]
        cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
        if cross == 0 and min(x1, x2) <= px <= max(x1, x2) and min(y1, y2) <= py <= max(y1, y2):
            return include_boundary
        if (y1 > py) != (y2 > py):
            x_at = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            if px < x_at:
                inside = not inside
    return inside


def points_in_polygon(points, polygon, include_boundary: bool = True) -> np.ndarray:
    """Vectorised :func:`point_in_polygon` over an ``(N, 2)`` array."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    poly = np.asarray(polygon, dtype=np.float64)
    x, y = pts[:, 0:1], pts[:, 1:2]
    x1, y1 = poly[:, 0], poly[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
    on_edge = (
        (cross == 0)
        & (np.minimum(x1, x2) <= x) & (x <= np.maximum(x1, x2))
        & (np.minimum(y1, y2) <= y) & (y <= np.maximum(y1, y2))
    ).any(axis=1)
    straddle = (y1 > y) != (y2 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_at = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
    inside = ((straddle & (x < x_at)).sum(axis=1) % 2) == 1
    return np.where(on_edge, include_boundary, inside)


# -- point files ----------------------------------------------------------------


def format_points(contours) -> str:
    blocks = []
    for c in contours:
        pts = c.points if isinstance(c, ContourPolyline) else np.asarray(c)
        blocks.append("\n".join(f"{x!r} {y!r}" for x, y in pts.tolist()))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def parse_points(text: str) -> list[ContourPolyline]:
    groups: list[list[tuple[float, float]]] = [[]]
    first_line: list[int] = [1]
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            continue
        if not line:
            if groups[-1]:
                groups.append([])
                first_line.append(lineno + 1)
            continue
        if not groups[-1]:
            first_line[-1] = lineno
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise MalformedPointFile(f"expected 'x y', got {raw!r}", lineno)
        try:
            x, y = float(parts[0]), float(parts[1])
        except ValueError:
            raise MalformedPointFile(f"non-numeric coordinate in {raw!r}", lineno) from None
        if not (np.isfinite(x) and np.isfinite(y)):
            raise MalformedPointFile(f"non-finite coordinate in {raw!r}", lineno)
        groups[-1].append((x, y))
    contours = []
    for pts, lineno in zip(groups, first_line):
        if not pts:
            continue
        try:
            contours.append(ContourPolyline(np.array(pts)))
        except ValueError as exc:
            raise MalformedPointFile(str(exc), lineno) from None
    return contours


def read_points(path: str | os.PathLike) -> list[ContourPolyline]:
    return parse_points(Path(path).read_text())


def write_points(path: str | os.PathLike, contours) -> None:
    Path(path).write_text(format_points(contours))
