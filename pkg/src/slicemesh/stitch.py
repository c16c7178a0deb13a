"""Closed surfaces from stacks of contours.

Each pair of consecutive contours is joined by a wall: a closed triangle
strip that walks both rings once. When the rings have different point
counts the larger ring (``j`` points) is spread over the smaller one
(``i`` points): each smaller-ring point owns a run of ``j / i`` larger-ring
points, rounded so that runs differ by at most one. A wall between rings of
``i`` and ``j`` points always has exactly ``i + j`` facets. The stack is
closed by planar Delaunay caps at the bottom and top.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .contour import ContourPolyline, points_in_polygon
from .delaunay import constrained_triangulation
from .errors import DegenerateLayer, LayerMismatch, SliceMeshError
from .mesh import TriangleMesh, merge


@dataclass(frozen=True)
class LayerStack:
    """Contours from bottom (index 0) to top, ``z_spacing_mm`` apart."""

    layers: tuple[ContourPolyline, ...]
    z_spacing_mm: float = 1.0
    base_z_mm: float = 0.0

    def __post_init__(self):
        layers = tuple(self.layers)
        if len(layers) < 2:
            raise LayerMismatch(f"a stack needs at least 2 layers, got {len(layers)}")
        if not self.z_spacing_mm > 0:
            raise ValueError("z_spacing_mm must be positive")
        for k, c in enumerate(layers):
            if len(c) < 3:
                raise DegenerateLayer(f"layer {k} has {len(c)} points")
            if c.signed_area <= 0:
                raise LayerMismatch(f"layer {k} is not counter-clockwise")
        object.__setattr__(self, "layers", layers)

    @classmethod
    def from_contours(cls, contours, z_spacing_mm: float = 1.0, base_z_mm: float = 0.0) -> LayerStack:
        """Build a stack, reorienting every contour to CCW first."""
        return cls(tuple(c.ccw() for c in contours), z_spacing_mm, base_z_mm)

    def z(self, k: int) -> float:
        return self.base_z_mm + k * self.z_spacing_mm


@dataclass(frozen=True)
class StitchPlan:
    """How the larger ring (``j`` points) is distributed over the smaller (``i``).

    ``q`` and ``r`` are ``divmod(j, d)`` with ``d = j - i``: one extra
    triangle every ``q`` points of the larger ring, ``r`` points left over.
    ``assignments[k]`` is the number of larger-ring points owned by
    smaller-ring point ``k``.
    """

    j: int
    i: int
    d: int
    q: int
    r: int
    assignments: tuple[int, ...] = field(default=())
    swapped: bool = False

    @property
    def case(self) -> str:
        if self.d == 0:
            return "equal"
        if self.r == 0:
            return "divisible"
        return "remainder_one" if self.r == 1 else "remainder_many"


def _distribute(j: int, i: int) -> tuple[int, ...]:
    # differences of ceil(k * j / i): evenly spread, larger runs first
    bounds = [-(-k * j // i) for k in range(i + 1)]
    return tuple(b - a for a, b in zip(bounds, bounds[1:]))


def plan_stitch(top: ContourPolyline | int, bottom: ContourPolyline | int) -> StitchPlan:
    """Plan a wall; the ring with more points plays the role of T.

    Accepts contours or bare point counts. With ``d = j - i`` extra
    triangles to place, ``q, r = divmod(j, d)``: one extra triangle falls
    roughly every ``q`` points of the larger ring and ``r`` selects the
    remainder case. Dividing the other way round, ``d / j``, would give
    ``q = 0`` for every pair of unequal rings and could not tell the cases
    apart.
    """
    nt = top if isinstance(top, int) else len(top)
    nb = bottom if isinstance(bottom, int) else len(bottom)
    if nt < 3 or nb < 3:
        raise DegenerateLayer(f"layers need at least 3 points, got {nt} and {nb}")
    swapped = nt < nb
    j, i = (nb, nt) if swapped else (nt, nb)
    d = j - i
    q, r = divmod(j, d) if d else (0, 0)
    return StitchPlan(j=j, i=i, d=d, q=q, r=r, assignments=_distribute(j, i), swapped=swapped)


def align_start(top: ContourPolyline, bottom: ContourPolyline) -> int:
    """Index of the top point nearest the bottom start (first one on ties)."""
    dist = np.linalg.norm(top.points - bottom.points[0], axis=1)
    return int(np.argmin(dist))


def _lift(points: np.ndarray, z: float) -> np.ndarray:
    return np.column_stack([points, np.full(len(points), float(z))])


def wall_faces(plan: StitchPlan) -> np.ndarray:
    """Facets over vertices ``[small ring (i), large ring (j)]``, small ring below.

    The small ring is assumed to lie below the large one; reverse each row
    when it lies above.
    """
    i, j = plan.i, plan.j
    faces = []
    s = 0
    for k, run in enumerate(plan.assignments):
        b, b_next = k, (k + 1) % i
        for t in range(run):
            faces.append((b, i + (s + t + 1) % j, i + (s + t) % j))
        s += run
        faces.append((b, b_next, i + s % j))
    return np.array(faces, dtype=np.int64)


def build_wall(top: ContourPolyline, z_top: float, bottom: ContourPolyline, z_bottom: float) -> TriangleMesh:
    """Outward-facing triangle strip between two aligned CCW contours.

    The strip closes by joining the last points of both rings back to their
    start points; it has ``len(top) + len(bottom)`` facets.
    """
    if len(top) < 3 or len(bottom) < 3:
        raise DegenerateLayer("wall layers need at least 3 points per contour")
    if not z_top > z_bottom:
        raise ValueError(f"z_top ({z_top}) must be above z_bottom ({z_bottom})")
    plan = plan_stitch(top, bottom)
    if plan.swapped:
        small, z_small, large, z_large = top, z_top, bottom, z_bottom
    else:
        small, z_small, large, z_large = bottom, z_bottom, top, z_top
    verts = np.vstack([_lift(small.points, z_small), _lift(large.points, z_large)])
    faces = wall_faces(plan)
    if plan.swapped:
        faces = faces[:, ::-1]
    return TriangleMesh(verts, faces)


def cap_layer(contour: ContourPolyline, z: float, facing: str = "up") -> TriangleMesh:
    """Planar cap over a contour: Delaunay triangles inside the polygon.

    Contour edges are enforced as constraints so the cap boundary matches
    the wall rim exactly; triangles whose centroid falls outside the
    polygon are dropped. ``facing`` is ``"up"`` (+z) or ``"down"`` (-z).
    """
    if facing not in ("up", "down"):
        raise ValueError(f"facing must be 'up' or 'down', got {facing!r}")
    c = contour.ccw()
    n = len(c)
    edges = [(k, (k + 1) % n) for k in range(n)]
    tris = constrained_triangulation(c.points, edges)
    centroids = c.points[tris].mean(axis=1)
    keep = points_in_polygon(centroids, c.points)
    tris = tris[keep]
    if c is not contour:
        # same triangles, indexed in the caller's point order
        back = np.concatenate([[0], np.arange(n - 1, 0, -1)])
        tris = back[tris]
    faces = tris if facing == "up" else tris[:, ::-1]
    return TriangleMesh(_lift(contour.points, z), faces)


def assemble(stack: LayerStack, tol: float = 1e-9) -> TriangleMesh:
    """Closed mesh: bottom cap, a wall between each pair of layers, top cap.

    Each layer is rotated so that its start point is the one nearest the
    (already aligned) start of the layer below.
    """
    layers = [stack.layers[0]]
    for c in stack.layers[1:]:
        if len(c) < 3:
            raise LayerMismatch("layer degenerated to fewer than 3 points")
        layers.append(c.rotated(align_start(c, layers[-1])))
    fragments = [cap_layer(layers[0], stack.z(0), "down")]
    for k in range(len(layers) - 1):
        fragments.append(build_wall(layers[k + 1], stack.z(k + 1), layers[k], stack.z(k)))
    fragments.append(cap_layer(layers[-1], stack.z(len(layers) - 1), "up"))
    try:
        return merge(fragments, tol)
    except ValueError as exc:
        raise SliceMeshError(f"mesh assembly failed: {exc}") from None
